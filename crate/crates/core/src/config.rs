//! Flat `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment. Parameter keys are the
//! [`SystemParams`] field names with frequencies in Hz and times in seconds.
//! Rendering uses the shortest exact decimal form of every number, so
//! rendering and parsing round-trips exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::classifier::{ClassifierConfig, Kernel};
use crate::error::{Error, Result};
use crate::params::{hz, to_hz, SystemParams};

/// Ordered key-value map as read from a config file.
pub type KvMap = BTreeMap<String, String>;

pub fn parse_kv(text: &str) -> Result<KvMap> {
    let mut map = KvMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            key: format!("line {}", i + 1),
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config { key: format!("line {}", i + 1), reason: "empty key".into() });
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config { key: k.into(), reason: "duplicate key".into() });
        }
    }
    Ok(map)
}

pub fn render_kv(map: &KvMap) -> String {
    map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn parse_f64(map: &KvMap, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| v.parse::<f64>().map_err(|_| Error::Config { key: key.into(), reason: format!("`{v}` is not a number") }))
        .transpose()
}

#[derive(Clone, Copy, PartialEq)]
enum Unit {
    Angular,
    Plain,
}

type Field = (&'static str, Unit, fn(&SystemParams) -> f64, fn(&mut SystemParams, f64));

macro_rules! fields {
    ($($name:ident : $unit:ident),* $(,)?) => {
        const FIELDS: &[Field] = &[
            $((stringify!($name), Unit::$unit, |p| p.$name, |p, v| p.$name = v)),*
        ];
    };
}

fields! {
    chi: Angular,
    chi_dr: Angular,
    chi_dr_2: Angular,
    kappa_gg: Angular,
    kappa_logical: Angular,
    eta_eff: Plain,
    drive_amp: Angular,
    drive_detuning: Angular,
    t_erasure_0l: Plain,
    t_erasure_1l: Plain,
    readout_degradation: Plain,
    t_heat: Plain,
    mist_prob_per_check: Plain,
    dr_gap: Angular,
    t1_logical: Plain,
    t_phi_logical: Plain,
    x90_error: Plain,
    leak_shift: Angular,
    fast_reheat_prob: Plain,
    t_fast_reheat: Plain,
    t_leak_return: Plain,
}

/// Names of every parameter key, in declaration order.
pub fn param_keys() -> impl Iterator<Item = &'static str> {
    FIELDS.iter().map(|f| f.0)
}

/// Parameters in file units (Hz, seconds).
pub fn params_to_kv(p: &SystemParams) -> KvMap {
    FIELDS
        .iter()
        .map(|(name, unit, get, _)| {
            let v = get(p);
            let v = if *unit == Unit::Angular { to_hz(v) } else { v };
            (name.to_string(), v.to_string())
        })
        .collect()
}

/// Reads parameters from `map`, falling back to `base` for absent keys.
///
/// With `base = None` every parameter key is required. Keys not naming a
/// parameter are left for the caller.
pub fn params_from_kv(map: &KvMap, base: Option<&SystemParams>) -> Result<SystemParams> {
    let mut p = base.copied().unwrap_or_else(SystemParams::device);
    for (name, unit, _, set) in FIELDS {
        match parse_f64(map, name)? {
            Some(v) => set(&mut p, if *unit == Unit::Angular { hz(v) } else { v }),
            None if base.is_none() => {
                return Err(Error::Config { key: name.to_string(), reason: "missing required key".into() })
            }
            None => {}
        }
    }
    let report = crate::params::validate(&p);
    if let Some(v) = report.violations.first() {
        return Err(Error::Config { key: v.field.into(), reason: v.message.clone() });
    }
    Ok(p)
}

pub fn is_param_key(key: &str) -> bool {
    FIELDS.iter().any(|f| f.0 == key)
}

const CLASSIFIER_KEYS: &[&str] =
    &["axis_re", "axis_im", "threshold", "center_re", "center_im", "logical_std", "radius", "kernel_window"];

/// Boxcar classifiers only; matched-filter templates are not representable as scalars.
pub fn classifier_to_kv(c: &ClassifierConfig) -> Result<KvMap> {
    let Kernel::Boxcar { window } = c.kernel else {
        return Err(Error::Config { key: "kernel_window".into(), reason: "matched-filter kernels cannot be written".into() });
    };
    let vals = [
        c.projection_axis.re,
        c.projection_axis.im,
        c.threshold,
        c.center.re,
        c.center.im,
        c.logical_std,
        c.radius,
        window,
    ];
    Ok(CLASSIFIER_KEYS.iter().zip(vals).map(|(k, v)| (k.to_string(), v.to_string())).collect())
}

pub fn classifier_from_kv(map: &KvMap) -> Result<ClassifierConfig> {
    let mut v = [0.0; 8];
    for (slot, key) in v.iter_mut().zip(CLASSIFIER_KEYS) {
        *slot = parse_f64(map, key)?.ok_or_else(|| Error::Config { key: key.to_string(), reason: "missing required key".into() })?;
    }
    let axis = Complex64::new(v[0], v[1]);
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Config { key: "axis_re".into(), reason: "projection axis must have unit length".into() });
    }
    if !(v[7] > 0.0) {
        return Err(Error::Config { key: "kernel_window".into(), reason: "window must be positive".into() });
    }
    if !(v[6] > 0.0) {
        return Err(Error::Config { key: "radius".into(), reason: "radius must be positive".into() });
    }
    Ok(ClassifierConfig {
        kernel: Kernel::Boxcar { window: v[7] },
        projection_axis: axis,
        threshold: v[2],
        center: Complex64::new(v[3], v[4]),
        logical_std: v[5],
        radius: v[6],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let m = parse_kv("# header\n\nchi = -4.25e6  # MHz-scale\n eta_eff=0.125\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["chi"], "-4.25e6");
    }

    #[test]
    fn malformed_lines_name_their_position() {
        let e = parse_kv("chi = 1\nnonsense\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        let e = parse_kv("a = 1\na = 2\n").unwrap_err();
        assert!(e.to_string().contains("`a`"));
    }

    #[test]
    fn params_round_trip_through_text() {
        let p = SystemParams::device();
        let kv = params_to_kv(&p);
        let text = render_kv(&kv);
        let back = parse_kv(&text).unwrap();
        assert_eq!(back, kv);
        let q = params_from_kv(&back, None).unwrap();
        for (name, _, get, _) in FIELDS {
            let (a, b) = (get(&p), get(&q));
            assert!(a == b || (a - b).abs() <= 4.0 * f64::EPSILON * a.abs(), "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn missing_and_bad_keys_are_named() {
        let mut kv = params_to_kv(&SystemParams::device());
        kv.remove("kappa_gg");
        let e = params_from_kv(&kv, None).unwrap_err();
        assert!(e.to_string().contains("kappa_gg"));
        assert!(params_from_kv(&kv, Some(&SystemParams::device())).is_ok());
        kv.insert("eta_eff".into(), "zero".into());
        assert!(params_from_kv(&kv, Some(&SystemParams::device())).unwrap_err().to_string().contains("eta_eff"));
        kv.insert("eta_eff".into(), "0".into());
        assert!(params_from_kv(&kv, Some(&SystemParams::device())).unwrap_err().to_string().contains("eta_eff"));
    }

    #[test]
    fn infinite_lifetimes_round_trip() {
        let p = SystemParams::device().frozen();
        let q = params_from_kv(&parse_kv(&render_kv(&params_to_kv(&p))).unwrap(), None).unwrap();
        assert!(q.t_heat.is_infinite());
    }
}

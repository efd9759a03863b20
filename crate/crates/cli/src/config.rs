//! Run configuration: device parameters plus experiment settings from one flat file.
//!
//! Parameter keys are the `SystemParams` field names (Hz and seconds). The
//! remaining keys are listed in [`EXPERIMENT_KEYS`]; classifier keys are taken
//! together or not at all. Any other key is rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use dualrail_core::channel::ErrorChannelParams;
use dualrail_core::classifier::ClassifierConfig;
use dualrail_core::config::{classifier_from_kv, is_param_key, parse_f64, parse_kv, params_from_kv, KvMap};
use dualrail_core::experiments::{ContinuousMode, ExperimentConfig, ExperimentKind};
use dualrail_core::SystemParams;

/// Experiment keys accepted in a config file.
pub const EXPERIMENT_KEYS: &[&str] = &[
    "preset",
    "seed",
    "shots_per_point",
    "calibration_shots",
    "lengths",
    "p1",
    "p_phi",
    "radii",
    "window",
    "continuous_mode",
    "check_every",
    "total_time",
    "tail_start",
    "min_survivors",
    "record_exports",
    "symmetrize",
    "dt",
    "delay_unit",
];

const CLASSIFIER_KEYS: &[&str] =
    &["axis_re", "axis_im", "threshold", "center_re", "center_im", "logical_std", "radius", "kernel_window"];

/// Parsed config file with its parameters resolved and validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: SystemParams,
    pub map: KvMap,
    pub classifier: Option<ClassifierConfig>,
}

impl RunConfig {
    /// The device preset with no overrides.
    pub fn device() -> Self {
        RunConfig { params: SystemParams::device(), map: KvMap::new(), classifier: None }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        if let Some(k) = map.keys().find(|k| !is_param_key(k) && !EXPERIMENT_KEYS.contains(&k.as_str()) && !CLASSIFIER_KEYS.contains(&k.as_str())) {
            bail!("config key `{k}`: unknown key");
        }
        // `preset = none` demands every parameter key explicitly.
        let base = match map.get("preset").map(String::as_str) {
            None | Some("device") => Some(SystemParams::device()),
            Some("none") => None,
            Some(other) => bail!("config key `preset`: expected `device` or `none`, got `{other}`"),
        };
        let params = params_from_kv(&map, base.as_ref())?;
        let classifier = if CLASSIFIER_KEYS.iter().any(|k| map.contains_key(*k)) { Some(classifier_from_kv(&map)?) } else { None };
        Ok(RunConfig { params, map, classifier })
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        Ok(parse_f64(&self.map, key)?)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.map
            .get(key)
            .map(|v| v.parse::<usize>().with_context(|| format!("config key `{key}`: `{v}` is not a nonnegative integer")))
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.map
            .get(key)
            .map(|v| v.parse::<u64>().with_context(|| format!("config key `{key}`: `{v}` is not a nonnegative integer")))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.map.get(key) else { return Ok(None) };
        parse_list(v).with_context(|| format!("config key `{key}`: `{v}` is not a comma-separated list of numbers")).map(Some)
    }

    /// Experiment settings for `kind`, with config keys applied over the defaults.
    pub fn experiment(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(kind, self.params);
        cfg.classifier = self.classifier.clone();
        if let Some(v) = self.u64("seed")? {
            cfg.seed = v;
        }
        macro_rules! usize_keys {
            ($($k:ident),*) => { $(if let Some(v) = self.usize(stringify!($k))? { cfg.$k = v; })* };
        }
        usize_keys!(shots_per_point, calibration_shots, check_every, tail_start, min_survivors, record_exports);
        macro_rules! f64_keys {
            ($($k:ident),*) => { $(if let Some(v) = self.f64(stringify!($k))? { cfg.$k = v; })* };
        }
        f64_keys!(window, total_time, dt, delay_unit);
        if let Some(v) = self.list("lengths")? {
            cfg.lengths = v;
        }
        if let Some(v) = self.list("radii")? {
            cfg.radii = v;
        }
        if let Some(v) = self.map.get("symmetrize") {
            cfg.symmetrize = v.parse().with_context(|| format!("config key `symmetrize`: `{v}` is not `true` or `false`"))?;
        }
        if let Some(v) = self.map.get("continuous_mode") {
            cfg.continuous_mode = parse_mode(v).with_context(|| format!("config key `continuous_mode`: `{v}` is not `windows` or `discrete:N`"))?;
        }
        let (p1, p_phi) = (self.f64("p1")?.unwrap_or(0.0), self.f64("p_phi")?.unwrap_or(0.0));
        cfg.injected = ErrorChannelParams::new(p1, p_phi).context("config keys `p1`/`p_phi`")?;
        Ok(cfg)
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| anyhow::anyhow!("`{}` is not a number", t.trim())))
        .collect()
}

pub fn parse_mode(s: &str) -> Result<ContinuousMode> {
    match s.split_once(':') {
        None if s == "windows" => Ok(ContinuousMode::Windows),
        Some(("discrete", n)) => Ok(ContinuousMode::Discrete(n.parse()?)),
        _ => bail!("unknown mode `{s}`"),
    }
}

//! Device parameters, logical-state representation and raw readout records.
//!
//! Every rate stored here is an angular frequency in rad/s and every time is in
//! seconds. Conversion from cyclic units happens once, at ingestion, through
//! [`hz`] or the config loader.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

/// Converts a cyclic frequency in Hz to rad/s.
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Converts an angular frequency in rad/s to Hz.
pub fn to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Full parameter set for one dual-rail qubit and its shared readout resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    /// Average dispersive shift of the two logical states.
    pub chi: f64,
    /// Dispersive mismatch between |1_L> and |0_L>.
    pub chi_dr: f64,
    /// Second-order (photon-number squared) mismatch.
    pub chi_dr_2: f64,
    /// Resonator linewidth with the qubit in |gg>.
    pub kappa_gg: f64,
    /// Resonator linewidth with the qubit in the logical subspace.
    pub kappa_logical: f64,
    /// Effective measurement efficiency, in (0, 0.5].
    pub eta_eff: f64,
    /// Probe drive amplitude.
    pub drive_amp: f64,
    /// Probe detuning; zero sits midway between the gg and mean logical resonances.
    pub drive_detuning: f64,
    pub t_erasure_0l: f64,
    pub t_erasure_1l: f64,
    /// Factor by which erasure lifetimes shrink while the probe is on.
    pub readout_degradation: f64,
    /// Time scale for thermal re-excitation out of |gg>.
    pub t_heat: f64,
    /// Leakage probability at the start of each probe pulse.
    pub mist_prob_per_check: f64,
    /// Dual-rail splitting 2g.
    pub dr_gap: f64,
    /// Logical T1 entering the Pauli-twirled idle channel.
    pub t1_logical: f64,
    /// Logical pure-dephasing time entering the idle channel.
    pub t_phi_logical: f64,
    /// Depolarizing infidelity of a single X90 pulse.
    pub x90_error: f64,
    /// Detuning of the leaked-state resonance relative to the probe frame.
    pub leak_shift: f64,
    /// Fraction of erasures that reheat on the fast time scale below.
    pub fast_reheat_prob: f64,
    pub t_fast_reheat: f64,
    /// Lifetime of the leaked state before it relaxes into the mixed logical state.
    pub t_leak_return: f64,
}

impl SystemParams {
    /// The measured device at its operating point.
    ///
    /// The probe sits on the gg-shifted resonance and its amplitude is set so a
    /// 384 ns integration reaches SNR 11.6. Logical pure dephasing is derived from
    /// the CPMG-16 T2 of 1116 us and T1 of 2176 us.
    pub fn device() -> Self {
        let chi = hz(-4.25e6);
        let t1 = 2176e-6;
        let t2 = 1116e-6;
        let mut p = SystemParams {
            chi,
            chi_dr: hz(-0.7e3),
            chi_dr_2: hz(-0.7e3),
            kappa_gg: hz(12.4e6),
            kappa_logical: hz(10.5e6),
            eta_eff: 0.125,
            drive_amp: 0.0,
            drive_detuning: chi,
            t_erasure_0l: 27e-6,
            t_erasure_1l: 24e-6,
            readout_degradation: 2.0,
            t_heat: 13e-3,
            mist_prob_per_check: 0.0,
            dr_gap: hz(94.15e6),
            t1_logical: t1,
            t_phi_logical: 1.0 / (1.0 / t2 - 1.0 / (2.0 * t1)),
            x90_error: 9e-5,
            leak_shift: 12.0 * chi,
            fast_reheat_prob: 0.0,
            t_fast_reheat: 1e-6,
            t_leak_return: 12e-6,
        };
        p.drive_amp = crate::dispersive::drive_for_snr(&p, 11.6, 384e-9).expect("device parameters are distinguishable");
        p
    }

    /// Disables every stochastic process: lifetimes infinite, no leakage,
    /// perfect gates. Fields and noise are untouched.
    pub fn frozen(mut self) -> Self {
        self.t_erasure_0l = f64::INFINITY;
        self.t_erasure_1l = f64::INFINITY;
        self.t_heat = f64::INFINITY;
        self.mist_prob_per_check = 0.0;
        self.t1_logical = f64::INFINITY;
        self.t_phi_logical = f64::INFINITY;
        self.x90_error = 0.0;
        self.fast_reheat_prob = 0.0;
        self.t_leak_return = f64::INFINITY;
        self
    }

    /// Runs [`validate`] and converts a failing report into an error.
    pub fn validated(self) -> Result<Self, crate::Error> {
        let report = validate(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(crate::Error::InvalidParams(report))
        }
    }
}

/// One violated parameter constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

/// All violations found in a parameter set; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &'static str, message: impl Into<String>) {
        self.violations.push(Violation { field, message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Checks every invariant of `params` and reports all violations at once.
pub fn validate(params: &SystemParams) -> ValidationReport {
    let mut r = ValidationReport::default();
    let p = params;

    let finite = [
        ("chi", p.chi),
        ("chi_dr", p.chi_dr),
        ("chi_dr_2", p.chi_dr_2),
        ("drive_amp", p.drive_amp),
        ("drive_detuning", p.drive_detuning),
        ("leak_shift", p.leak_shift),
        ("dr_gap", p.dr_gap),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            r.push(name, "must be finite");
        }
    }

    let positive_rates = [("kappa_gg", p.kappa_gg), ("kappa_logical", p.kappa_logical)];
    for (name, v) in positive_rates {
        if !(v > 0.0 && v.is_finite()) {
            r.push(name, "linewidth must be positive and finite");
        }
    }

    if !(p.eta_eff > 0.0) {
        r.push("eta_eff", "efficiency must be positive");
    } else if p.eta_eff > 0.5 {
        r.push("eta_eff", "efficiency cannot exceed 0.5");
    }

    // Infinite lifetimes are allowed and switch the process off.
    let lifetimes = [
        ("t_erasure_0l", p.t_erasure_0l),
        ("t_erasure_1l", p.t_erasure_1l),
        ("t_heat", p.t_heat),
        ("t1_logical", p.t1_logical),
        ("t_phi_logical", p.t_phi_logical),
        ("t_fast_reheat", p.t_fast_reheat),
        ("t_leak_return", p.t_leak_return),
    ];
    for (name, v) in lifetimes {
        if !(v > 0.0) {
            r.push(name, "lifetime must be positive");
        }
    }

    if !(p.readout_degradation >= 1.0 && p.readout_degradation.is_finite()) {
        r.push("readout_degradation", "must be finite and at least 1");
    }
    if !(0.0..1.0).contains(&p.mist_prob_per_check) {
        r.push("mist_prob_per_check", "must lie in [0, 1)");
    }
    if !(0.0..1.0).contains(&p.x90_error) {
        r.push("x90_error", "must lie in [0, 1)");
    }
    if !(0.0..=1.0).contains(&p.fast_reheat_prob) {
        r.push("fast_reheat_prob", "must lie in [0, 1]");
    }
    if p.chi.is_finite() && p.chi_dr.is_finite() && p.chi_dr.abs() >= p.chi.abs() {
        r.push("chi_dr", "mismatch regime violated: |chi_dr| must be below |chi|");
    }
    if p.drive_amp.is_finite() && p.drive_amp < 0.0 {
        r.push("drive_amp", "must be nonnegative");
    }
    r
}

/// Splitting of the dual-rail manifold for coupling `g` and bare detuning `delta`.
///
/// Second order in `delta`, which is the origin of the first-order insensitivity
/// to transmon frequency noise.
pub fn dual_rail_gap(g: f64, delta: f64) -> f64 {
    (2.0 * g).hypot(delta)
}

/// Pauli expectation values (x, y, z) within the logical subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bloch(pub [f64; 3]);

impl Bloch {
    pub const ZERO_L: Bloch = Bloch([0.0, 0.0, 1.0]);
    pub const ONE_L: Bloch = Bloch([0.0, 0.0, -1.0]);
    pub const PLUS_L: Bloch = Bloch([1.0, 0.0, 0.0]);
    pub const MIXED: Bloch = Bloch([0.0, 0.0, 0.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Option<Self> {
        let b = Bloch([x, y, z]);
        (b.norm() <= 1.0 + 1e-12).then_some(b)
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn norm(&self) -> f64 {
        let [x, y, z] = self.0;
        (x * x + y * y + z * z).sqrt()
    }
}

/// Which sector the two-transmon system occupies, with the logical Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DualRailState {
    Logical(Bloch),
    Erased,
    Leaked,
}

impl DualRailState {
    pub fn is_logical(&self) -> bool {
        matches!(self, DualRailState::Logical(_))
    }
}

/// Uniformly sampled complex readout voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub samples: Vec<Complex64>,
    pub dt: f64,
    pub origin_time: f64,
}

impl MeasurementRecord {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.origin_time + k as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_params_are_valid() {
        let p = SystemParams::device();
        assert!(validate(&p).is_valid(), "{}", validate(&p));
        assert!((to_hz(p.chi) + 4.25e6).abs() < 1e-6);
    }

    #[test]
    fn zero_efficiency_is_rejected() {
        let mut p = SystemParams::device();
        p.eta_eff = 0.0;
        let r = validate(&p);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "eta_eff");
        assert!(r.violations[0].message.contains("positive"));
    }

    #[test]
    fn large_mismatch_is_rejected() {
        let mut p = SystemParams::device();
        p.chi_dr = 2.0 * p.chi.abs();
        let r = validate(&p);
        assert!(r.violations.iter().any(|v| v.field == "chi_dr"));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut p = SystemParams::device();
        p.kappa_gg = -1.0;
        p.readout_degradation = 0.5;
        p.mist_prob_per_check = 1.0;
        let r = validate(&p);
        let fields: Vec<_> = r.violations.iter().map(|v| v.field).collect();
        assert_eq!(fields, ["kappa_gg", "readout_degradation", "mist_prob_per_check"]);
        assert_eq!(validate(&p), r);
    }

    #[test]
    fn infinite_lifetimes_are_allowed() {
        assert!(validate(&SystemParams::device().frozen()).is_valid());
    }

    #[test]
    fn gap_examples() {
        let g = hz(47.075e6);
        assert!((dual_rail_gap(g, 0.0) - hz(94.15e6)).abs() < 1e-3);
        let g = 1.7;
        assert_eq!(dual_rail_gap(g, 0.0), 2.0 * g);
        let four_g = dual_rail_gap(g, 2.0 * g * 3f64.sqrt());
        assert!((four_g - 4.0 * g).abs() < 1e-14 * 4.0 * g);
    }

    #[test]
    fn gap_is_flat_at_symmetry_point() {
        let g = hz(47.075e6);
        let h = hz(1e3);
        let slope = (dual_rail_gap(g, h) - dual_rail_gap(g, -h)) / (2.0 * h);
        assert_eq!(slope, 0.0);
        // Curvature matches 1/(2g) from the series expansion.
        let curv = (dual_rail_gap(g, h) - 2.0 * dual_rail_gap(g, 0.0) + dual_rail_gap(g, -h)) / (h * h);
        assert!((curv - 1.0 / (2.0 * g)).abs() < 1e-3 / (2.0 * g));
    }

    #[test]
    fn bloch_norm_bound() {
        assert!(Bloch::new(1.0, 0.0, 0.0).is_some());
        assert!(Bloch::new(0.8, 0.7, 0.0).is_none());
    }
}

//! Logical error channel of one erasure check, acting on the Pauli frame.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Bloch;

/// Bit-flip and pure-dephasing probabilities induced by one check.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorChannelParams {
    pub p1: f64,
    pub p_phi: f64,
}

impl ErrorChannelParams {
    pub const NONE: ErrorChannelParams = ErrorChannelParams { p1: 0.0, p_phi: 0.0 };

    pub fn new(p1: f64, p_phi: f64) -> Result<Self> {
        let unit = 0.0..=1.0;
        if !unit.contains(&p1) || !unit.contains(&p_phi) {
            return Err(Error::InvalidArgument { name: "p1/p_phi", reason: "probabilities must lie in [0, 1]".into() });
        }
        if p1 / 2.0 + p_phi / 2.0 > 1.0 {
            return Err(Error::InvalidArgument { name: "p1/p_phi", reason: "identity weight would be negative".into() });
        }
        Ok(ErrorChannelParams { p1, p_phi })
    }

    /// Total transverse decay per check.
    pub fn p2(&self) -> f64 {
        self.p1 / 2.0 + self.p_phi
    }

    pub fn pauli(&self) -> PauliChannel {
        PauliChannel { px: self.p1 / 4.0, py: self.p1 / 4.0, pz: self.p_phi / 2.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.p1 == 0.0 && self.p_phi == 0.0
    }
}

/// Probabilities of an X, Y or Z error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliChannel {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl PauliChannel {
    /// Depolarizing channel with average infidelity `r`.
    pub fn depolarizing(r: f64) -> Self {
        let q = r / 2.0;
        PauliChannel { px: q, py: q, pz: q }
    }

    pub fn total(&self) -> f64 {
        self.px + self.py + self.pz
    }

    pub fn infidelity(&self) -> f64 {
        2.0 / 3.0 * self.total()
    }
}

/// Ensemble action of one check on a Bloch vector.
pub fn apply_check(bloch: [f64; 3], ch: &ErrorChannelParams) -> [f64; 3] {
    let t = 1.0 - ch.p2();
    [t * bloch[0], t * bloch[1], (1.0 - ch.p1) * bloch[2]]
}

/// Average gate fidelity of the check channel.
pub fn avg_fidelity(ch: &ErrorChannelParams) -> f64 {
    1.0 - ch.p1 / 3.0 - ch.p_phi / 3.0
}

/// Pure dephasing per check from the measured transverse and longitudinal decays.
///
/// An unphysical pair (`p2 < p1/2`) is reported as [`Error::Unphysical`]; the
/// caller can still read the raw difference `p2 - p1/2`.
pub fn extract_p_phi(p2: f64, p1: f64) -> Result<f64> {
    let v = p2 - p1 / 2.0;
    if v < 0.0 {
        return Err(Error::Unphysical(format!("p2 = {p2:e} is below p1/2 = {:e}", p1 / 2.0)));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub label: String,
    pub expression: String,
    pub probability: f64,
}

impl BudgetEntry {
    pub fn new(label: &str, expression: &str, probability: f64) -> Self {
        BudgetEntry { label: label.into(), expression: expression.into(), probability }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub entries: Vec<BudgetEntry>,
    pub measured_total: Option<f64>,
}

impl ErrorBudget {
    pub fn accounted(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Accounted total as a fraction of the measured value.
    pub fn fraction_accounted(&self) -> Option<f64> {
        self.measured_total.map(|m| self.accounted() / m)
    }

    /// Aligned plain-text table, probabilities to two significant figures.
    pub fn render(&self) -> String {
        let lw = self.entries.iter().map(|e| e.label.len()).chain(["Total accounted".len()]).max().unwrap_or(0);
        let ew = self.entries.iter().map(|e| e.expression.len()).max().unwrap_or(0).max("Expression".len());
        let mut out = format!("{:<lw$}  {:<ew$}  {:>10}\n", "Contribution", "Expression", "Error");
        out.push_str(&format!("{}\n", "-".repeat(lw + ew + 14)));
        for e in &self.entries {
            out.push_str(&format!("{:<lw$}  {:<ew$}  {:>10.1e}\n", e.label, e.expression, e.probability));
        }
        out.push_str(&format!("{:<lw$}  {:<ew$}  {:>10.1e}\n", "Total accounted", "", self.accounted()));
        if let Some(m) = self.measured_total {
            out.push_str(&format!("{:<lw$}  {:<ew$}  {:>10.1e}\n", "Measured", "", m));
            out.push_str(&format!("{:<lw$}  {:<ew$}  {:>9.1}%\n", "Fraction accounted", "", 100.0 * self.accounted() / m));
        }
        out
    }
}

pub fn build_budget(entries: Vec<BudgetEntry>, measured_total: Option<f64>) -> Result<ErrorBudget> {
    if let Some(e) = entries.iter().find(|e| !(e.probability >= 0.0)) {
        return Err(Error::InvalidArgument { name: "budget", reason: format!("entry `{}` is negative", e.label) });
    }
    Ok(ErrorBudget { entries, measured_total })
}

/// Budget of per-check residual error contributions for a check lasting `t_check`.
pub fn standard_budget(t_check: f64, t1: f64, t_phi: f64, x90_error: f64, ch: &ErrorChannelParams) -> Vec<BudgetEntry> {
    vec![
        BudgetEntry::new("Idling T1", "T_m/3T1", t_check / (3.0 * t1)),
        BudgetEntry::new("Idling T_phi", "T_m/3T_phi", t_check / (3.0 * t_phi)),
        BudgetEntry::new("Echo X gate", "2 eps_X90", 2.0 * x90_error),
        BudgetEntry::new("Induced bit-flip", "p1/3", ch.p1 / 3.0),
        BudgetEntry::new("Induced pure dephasing", "p_phi/3", ch.p_phi / 3.0),
    ]
}

/// Ratio of erasure to residual error per check.
pub fn noise_bias(erasure_per_check: f64, residual_per_check: f64) -> Result<f64> {
    if !(residual_per_check > 0.0) {
        return Err(Error::InvalidArgument { name: "residual_per_check", reason: "must be positive".into() });
    }
    Ok(erasure_per_check / residual_per_check)
}

/// Reheating time implied by the equilibrium excited population.
pub fn heating_time(t_erasure: f64, p_equil: f64) -> Result<f64> {
    if !(p_equil > 0.0) {
        return Err(Error::InvalidArgument { name: "p_equil", reason: "must be positive".into() });
    }
    Ok(t_erasure / p_equil)
}

/// Ensemble map of a Pauli channel on a Bloch vector.
pub fn apply_pauli(b: Bloch, ch: &PauliChannel) -> Bloch {
    let [x, y, z] = b.0;
    Bloch([
        (1.0 - 2.0 * (ch.py + ch.pz)) * x,
        (1.0 - 2.0 * (ch.px + ch.pz)) * y,
        (1.0 - 2.0 * (ch.px + ch.py)) * z,
    ])
}

//! Steady-state dispersive readout of the dual-rail qubit.
//!
//! Detunings follow the frame in which the probe detuning `Δ_d` is zero midway
//! between the gg-shifted resonance and the mean logical resonance. The three
//! sectors then see effective detunings `Δ_d + χ ∓ χ_DR` (logical) and
//! `Δ_d − χ` (gg), so the gg resonance sits at `Δ_d = χ`.
//!
//! Closed-form expressions take a single linewidth. Unless a `_with_kappa`
//! variant is used that linewidth is `kappa_gg`.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Steady-state intracavity amplitudes for each sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateSet {
    pub alpha_0: Complex64,
    pub alpha_1: Complex64,
    pub alpha_gg: Complex64,
    /// Photon number with the qubit in the logical subspace, neglecting `χ_DR`.
    pub n_dr: f64,
    pub n_gg: f64,
}

/// Effective detunings `(Δ_0, Δ_1, Δ_gg)` of the three sectors.
pub fn sector_detunings(p: &SystemParams) -> (f64, f64, f64) {
    let d = p.drive_detuning;
    (d + p.chi - p.chi_dr, d + p.chi + p.chi_dr, d - p.chi)
}

/// Fixed point of `dα/dt = −iε − (κ/2 + iΔ)α`.
pub fn steady_amplitude(eps: f64, kappa: f64, delta: f64) -> Complex64 {
    Complex64::new(0.0, -eps) / Complex64::new(kappa / 2.0, delta)
}

pub fn steady_states(p: &SystemParams) -> SteadyStateSet {
    steady_states_with_kappa(p, p.kappa_gg)
}

pub fn steady_states_with_kappa(p: &SystemParams, kappa: f64) -> SteadyStateSet {
    let (d0, d1, dgg) = sector_detunings(p);
    let eps = p.drive_amp;
    let alpha_gg = steady_amplitude(eps, kappa, dgg);
    let a2 = (kappa / 2.0).powi(2);
    SteadyStateSet {
        alpha_0: steady_amplitude(eps, kappa, d0),
        alpha_1: steady_amplitude(eps, kappa, d1),
        alpha_gg,
        n_dr: eps * eps / (a2 + (p.drive_detuning + p.chi).powi(2)),
        n_gg: alpha_gg.norm_sqr(),
    }
}

/// Ratio of logical to gg photon number, `n_dr / n_gg`.
pub fn photon_ratio(p: &SystemParams) -> f64 {
    photon_ratio_with_kappa(p, p.kappa_gg)
}

pub fn photon_ratio_with_kappa(p: &SystemParams, kappa: f64) -> f64 {
    let d = 2.0 * p.drive_detuning / kappa;
    let c = 2.0 * p.chi / kappa;
    (1.0 + (d - c).powi(2)) / (1.0 + (d + c).powi(2))
}

/// Rate at which an erasure becomes distinguishable from the logical subspace.
///
/// Uses matched logical states (`χ_DR = 0`), so that `rate × T` is the SNR of an
/// integration of length `T`.
pub fn measurement_rate(p: &SystemParams) -> f64 {
    measurement_rate_with_kappa(p, p.kappa_gg)
}

pub fn measurement_rate_with_kappa(p: &SystemParams, kappa: f64) -> f64 {
    let matched = SystemParams { chi_dr: 0.0, ..*p };
    measurement_rate_exact_with_kappa(&matched, kappa)
}

/// Measurement rate with the finite-mismatch mean logical field.
pub fn measurement_rate_exact(p: &SystemParams) -> f64 {
    measurement_rate_exact_with_kappa(p, p.kappa_gg)
}

pub fn measurement_rate_exact_with_kappa(p: &SystemParams, kappa: f64) -> f64 {
    let s = steady_states_with_kappa(p, kappa);
    let delta = s.alpha_gg - (s.alpha_0 + s.alpha_1) / 2.0;
    2.0 * kappa * p.eta_eff * delta.norm_sqr()
}

/// Rational form of the matched measurement rate.
pub fn measurement_rate_closed_form(p: &SystemParams) -> f64 {
    let k = p.kappa_gg;
    let a2 = (k / 2.0).powi(2);
    let (d, c, e) = (p.drive_detuning, p.chi, p.drive_amp);
    2.0 * k * p.eta_eff * e * e * (2.0 * c).powi(2) / ((a2 + (d + c).powi(2)) * (a2 + (d - c).powi(2)))
}

/// Probe-induced logical dephasing rate, `2 χ_DR Im[α_0 α_1*]`.
///
/// This is nonnegative for every parameter set.
pub fn dephasing_rate(p: &SystemParams) -> f64 {
    dephasing_rate_with_kappa(p, p.kappa_gg)
}

pub fn dephasing_rate_with_kappa(p: &SystemParams, kappa: f64) -> f64 {
    let s = steady_states_with_kappa(p, kappa);
    2.0 * p.chi_dr * (s.alpha_0 * s.alpha_1.conj()).im
}

/// Rational form of [`dephasing_rate`].
pub fn dephasing_rate_closed_form(p: &SystemParams) -> f64 {
    let k = p.kappa_gg;
    let a2 = (k / 2.0).powi(2);
    let (d, c, r, e) = (p.drive_detuning, p.chi, p.chi_dr, p.drive_amp);
    2.0 * e * e * r * r * k / ((a2 + (d + c + r).powi(2)) * (a2 + (d + c - r).powi(2)))
}

/// Small-mismatch approximation of [`dephasing_rate`], exact to leading order in `χ_DR`.
pub fn dephasing_rate_approx(p: &SystemParams) -> f64 {
    let k = p.kappa_gg;
    let a2 = (k / 2.0).powi(2);
    let (d, c, r, e) = (p.drive_detuning, p.chi, p.chi_dr, p.drive_amp);
    2.0 * e * e * r * r * k / (a2 + (d + c).powi(2)).powi(2)
}

/// Misclassification probability of a midpoint threshold at a given SNR.
pub fn separation_error(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidArgument { name: "snr", reason: format!("must be nonnegative, got {snr}") });
    }
    Ok(0.5 * erfc(snr.sqrt() / 2.0))
}

fn check_snr_chi(snr: f64, p: &SystemParams) -> Result<()> {
    if !(snr > 0.0) {
        return Err(Error::InvalidArgument { name: "snr", reason: format!("must be positive, got {snr}") });
    }
    if p.chi == 0.0 {
        return Err(Error::InvalidArgument { name: "chi", reason: "must be nonzero".into() });
    }
    Ok(())
}

/// Logical dephasing accumulated while reaching `snr` against an erasure.
pub fn induced_dephasing_error(snr: f64, p: &SystemParams) -> Result<f64> {
    check_snr_chi(snr, p)?;
    Ok(dephasing_prefactor(snr, p) * photon_ratio(p))
}

fn dephasing_prefactor(snr: f64, p: &SystemParams) -> f64 {
    snr / (12.0 * p.eta_eff) * (p.chi_dr / p.chi).powi(2)
}

/// Probe detuning that minimizes the logical-to-gg photon ratio.
pub fn optimal_detuning(p: &SystemParams) -> f64 {
    p.chi.signum() * (p.kappa_gg / 2.0).hypot(p.chi)
}

/// Minimum of the photon ratio over detuning, `(√(1+s²) − s)²` with `s = 2|χ|/κ`.
pub fn bracket_factor(s: f64) -> f64 {
    // Rationalized to avoid cancellation at large s.
    let d = (1.0 + s * s).sqrt() + s;
    1.0 / (d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinDephasing {
    /// Exact minimum over probe detuning.
    pub value: f64,
    pub optimal_detuning: f64,
    /// Large-`|χ|/κ` form `SNR/(24η) (χ_DR/χ)² (κ/2χ)²` as commonly quoted.
    pub asymptotic: f64,
}

/// Induced dephasing error at the optimal probe detuning.
pub fn min_dephasing_error(snr: f64, p: &SystemParams) -> Result<MinDephasing> {
    check_snr_chi(snr, p)?;
    let s = 2.0 * p.chi.abs() / p.kappa_gg;
    let pre = dephasing_prefactor(snr, p);
    Ok(MinDephasing {
        value: pre * bracket_factor(s),
        optimal_detuning: optimal_detuning(p),
        asymptotic: pre * (p.kappa_gg / (2.0 * p.chi)).powi(2) / 2.0,
    })
}

/// Numerical minimization of [`induced_dephasing_error`] over `Δ_d ∈ [−10κ, 10κ]`.
///
/// A coarse grid locates the basin (the objective also has a maximum on the
/// bracket) and golden-section search refines it to `1e-9 κ`.
pub fn optimize_detuning_numeric(snr: f64, p: &SystemParams) -> Result<(f64, f64)> {
    check_snr_chi(snr, p)?;
    let k = p.kappa_gg;
    let (lo, hi) = (-10.0 * k, 10.0 * k);
    let f = |d: f64| induced_dephasing_error(snr, &SystemParams { drive_detuning: d, ..*p }).unwrap_or(f64::NAN);

    const N: usize = 4000;
    let step = (hi - lo) / N as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=N {
        let v = f(lo + i as f64 * step);
        if v < best.1 {
            best = (i, v);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Optimizer { lo, hi, reason: "objective not finite".into() });
    }
    if best.1 == 0.0 {
        // Perfectly matched: every detuning is optimal.
        return Ok((0.0, lo + best.0 as f64 * step));
    }
    if best.0 == 0 || best.0 == N {
        return Err(Error::Optimizer { lo, hi, reason: "minimum lies on the bracket edge".into() });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo + (best.0 - 1) as f64 * step, lo + (best.0 + 1) as f64 * step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = 1e-9 * k;
    let mut iterations = 0;
    while (b - a) > tol {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Optimizer { lo: a, hi: b, reason: "golden-section did not converge".into() });
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    Ok((f(x), x))
}

/// AC Stark shift and photon number for a probe of amplitude `amp` with
/// calibration constant `scale_c` (photon amplitude per unit drive).
pub fn stark_photon_number(chi_1: f64, scale_c: f64, amp: f64) -> Result<(f64, f64)> {
    if !(scale_c > 0.0) {
        return Err(Error::InvalidArgument { name: "scale_c", reason: "must be positive".into() });
    }
    let n = (scale_c * amp).powi(2);
    Ok((2.0 * chi_1 * n, n))
}

/// Photon-number-dependent dual-rail frequency shift `2χ_DR n + 2χ'_DR n²`.
pub fn dr_detuning_vs_photon(p: &SystemParams, n_r: f64) -> Result<f64> {
    if !(n_r >= 0.0) {
        return Err(Error::InvalidArgument { name: "n_r", reason: "photon number must be nonnegative".into() });
    }
    Ok(2.0 * p.chi_dr * n_r + 2.0 * p.chi_dr_2 * n_r * n_r)
}

/// Drive amplitude at which an integration of length `t` reaches `snr`.
pub fn drive_for_snr(p: &SystemParams, snr: f64, t: f64) -> Result<f64> {
    drive_for_snr_with_kappa(p, p.kappa_gg, snr, t)
}

pub fn drive_for_snr_with_kappa(p: &SystemParams, kappa: f64, snr: f64, t: f64) -> Result<f64> {
    let unit = measurement_rate_with_kappa(&SystemParams { drive_amp: 1.0, ..*p }, kappa);
    if !(unit > 0.0) || !(t > 0.0) || !(snr >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "snr",
            reason: "target unreachable: no distinguishability or nonpositive time".into(),
        });
    }
    Ok((snr / (unit * t)).sqrt())
}

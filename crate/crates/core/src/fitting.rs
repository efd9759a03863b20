//! Least-squares fits used by every extraction: exponential decays with a fixed
//! offset, Lorentzian pairs, and a quadratic through the origin.
//!
//! Nonlinear fits use Levenberg-Marquardt with analytic Jacobians. Unweighted
//! fits report `(JᵀJ)⁻¹` scaled by the reduced chi-squared. With explicit
//! uncertainties the covariance is `(JᵀWJ)⁻¹`, inflated by the reduced
//! chi-squared only when that exceeds one: a lucky small scatter on a handful
//! of points must not shrink the error bars below the supplied noise.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub converged: bool,
    /// Non-fatal diagnostics such as a decay constant above one.
    pub flags: Vec<String>,
}

impl FitResult {
    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.position(name).map(|i| self.covariance[i][i].max(0.0).sqrt())
    }
}

const MAX_ITER: usize = 500;

/// Model evaluation: returns f(x; θ) and writes ∂f/∂θ into `grad`.
trait Model {
    fn eval(&self, x: f64, theta: &[f64], grad: &mut [f64]) -> f64;
    fn admissible(&self, _theta: &[f64]) -> bool {
        true
    }
}

struct LmOutcome {
    theta: Vec<f64>,
    jtwj: DMatrix<f64>,
    chi2: f64,
    converged: bool,
}

fn chi2_of<M: Model>(m: &M, x: &[f64], y: &[f64], w: &[f64], theta: &[f64], grad: &mut [f64]) -> f64 {
    x.iter().zip(y).zip(w).map(|((&xi, &yi), &wi)| wi * (yi - m.eval(xi, theta, grad)).powi(2)).sum()
}

fn levenberg_marquardt<M: Model>(m: &M, x: &[f64], y: &[f64], w: &[f64], theta0: Vec<f64>) -> Result<LmOutcome> {
    let k = theta0.len();
    let mut theta = theta0;
    let mut grad = vec![0.0; k];
    let mut lambda = 1e-3;
    let mut chi2 = chi2_of(m, x, y, w, &theta, &mut grad);
    if !chi2.is_finite() {
        return Err(Error::NoConvergence { iterations: 0, residual: chi2 });
    }
    let y_scale: f64 = y.iter().zip(w).map(|(v, wi)| wi * v * v).sum::<f64>().max(f64::MIN_POSITIVE);

    let normal = |theta: &[f64], grad: &mut [f64]| {
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut g = DVector::<f64>::zeros(k);
        for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
            let r = yi - m.eval(xi, theta, grad);
            for i in 0..k {
                g[i] += wi * grad[i] * r;
                for j in 0..=i {
                    a[(i, j)] += wi * grad[i] * grad[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        (a, g)
    };

    let mut converged = false;
    let mut iterations = 0;
    let (mut a, mut g) = normal(&theta, &mut grad);
    while iterations < MAX_ITER {
        iterations += 1;
        if chi2 <= 1e-30 * y_scale {
            converged = true;
            break;
        }
        let mut damped = a.clone();
        for i in 0..k {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
        }
        let step = match damped.cholesky() {
            Some(c) => c.solve(&g),
            None => {
                lambda *= 10.0;
                if lambda > 1e20 {
                    break;
                }
                continue;
            }
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        let trial_chi2 = if m.admissible(&trial) { chi2_of(m, x, y, w, &trial, &mut grad) } else { f64::INFINITY };
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            let small_step = step.iter().zip(&theta).all(|(s, t)| s.abs() <= 1e-12 * (t.abs() + 1e-300));
            let small_gain = chi2 - trial_chi2 <= 1e-15 * chi2;
            theta = trial;
            chi2 = trial_chi2;
            (a, g) = normal(&theta, &mut grad);
            lambda = (lambda / 10.0).max(1e-15);
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e20 {
                // No descent direction left: a minimum to machine precision.
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, residual: chi2.sqrt() });
    }
    Ok(LmOutcome { theta, jtwj: a, chi2, converged })
}

fn covariance(jtwj: &DMatrix<f64>, chi2: f64, n: usize, absolute: bool) -> Result<Vec<Vec<f64>>> {
    let k = jtwj.nrows();
    let inv = jtwj.clone().try_inverse().ok_or(Error::RankDeficient)?;
    let reduced = if n > k { chi2 / (n - k) as f64 } else { 0.0 };
    let scale = if absolute { reduced.max(1.0) } else { reduced };
    Ok((0..k).map(|i| (0..k).map(|j| 0.5 * (inv[(i, j)] + inv[(j, i)]) * scale).collect()).collect())
}

fn check_xy(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument { name: "y", reason: "length differs from x".into() });
    }
    if x.len() < min {
        return Err(Error::InvalidArgument { name: "x", reason: format!("need at least {min} points, got {}", x.len()) });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument { name: "y", reason: "non-finite data".into() });
    }
    Ok(())
}

fn weights_from_sigma(sigma: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match sigma {
        None => Ok(vec![1.0; n]),
        Some(s) if s.len() != n => Err(Error::InvalidArgument { name: "sigma", reason: "length differs from x".into() }),
        Some(s) if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) => {
            Err(Error::InvalidArgument { name: "sigma", reason: "uncertainties must be positive".into() })
        }
        Some(s) => Ok(s.iter().map(|v| 1.0 / (v * v)).collect()),
    }
}

struct ExpDecay {
    offset: f64,
}

impl Model for ExpDecay {
    fn eval(&self, x: f64, t: &[f64], grad: &mut [f64]) -> f64 {
        let px = t[1].powf(x);
        grad[0] = px;
        grad[1] = if x == 0.0 { 0.0 } else { t[0] * x * t[1].powf(x - 1.0) };
        t[0] * px + self.offset
    }
    fn admissible(&self, t: &[f64]) -> bool {
        t[1] > 0.0
    }
}

/// Fits `y = A·p^x + offset` with the offset held fixed.
pub fn fit_exp_decay(x: &[f64], y: &[f64], fixed_offset: f64) -> Result<FitResult> {
    fit_exp_decay_weighted(x, y, None, fixed_offset)
}

/// As [`fit_exp_decay`], weighting each point by `1/sigma²` when given.
pub fn fit_exp_decay_weighted(x: &[f64], y: &[f64], sigma: Option<&[f64]>, fixed_offset: f64) -> Result<FitResult> {
    check_xy(x, y, 4)?;
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument { name: "x", reason: "must be strictly increasing".into() });
    }
    let w = weights_from_sigma(sigma, x.len())?;

    // Log-linear start on points that sit above the offset.
    let pts: Vec<(f64, f64, f64)> = x
        .iter()
        .zip(y)
        .zip(&w)
        .filter(|((_, &yi), _)| yi - fixed_offset > 0.0)
        .map(|((&xi, &yi), &wi)| (xi, (yi - fixed_offset).ln(), wi * (yi - fixed_offset).powi(2)))
        .collect();
    let (mut a0, mut p0) = (y.iter().map(|v| v - fixed_offset).fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m }), 0.99);
    if pts.len() >= 2 {
        let sw: f64 = pts.iter().map(|p| p.2).sum();
        let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
        let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            p0 = slope.exp();
            a0 = (my - slope * mx).exp();
        }
    }
    if !(p0 > 0.0 && p0.is_finite()) {
        p0 = 0.99;
    }
    if a0 == 0.0 {
        a0 = 1e-12;
    }

    let model = ExpDecay { offset: fixed_offset };
    let out = levenberg_marquardt(&model, x, y, &w, vec![a0, p0])?;
    let cov = covariance(&out.jtwj, out.chi2, x.len(), sigma.is_some())?;
    let mut flags = vec![];
    let p = out.theta[1];
    if !(p > 0.0 && p <= 1.0) {
        flags.push(format!("decay constant p = {p} outside (0, 1]"));
    }
    Ok(FitResult {
        names: vec!["A".into(), "p".into()],
        values: out.theta,
        covariance: cov,
        residual_norm: out.chi2.sqrt(),
        converged: out.converged,
        flags,
    })
}

/// Per-Clifford error from a reference decay constant.
pub fn rb_error_from_decay(p_ref: f64) -> f64 {
    (1.0 - p_ref) / 2.0
}

/// Error of the interleaved operation. Negative when `p_int > p_ref`; use
/// [`ilrb_error_checked`] to reject that case.
pub fn ilrb_error_from_decays(p_int: f64, p_ref: f64) -> f64 {
    (1.0 - p_int / p_ref) / 2.0
}

pub fn ilrb_error_checked(p_int: f64, p_ref: f64) -> Result<f64> {
    if !(p_ref > 0.0 && p_int > 0.0) {
        return Err(Error::InvalidArgument { name: "p", reason: "decay constants must be positive".into() });
    }
    if p_int > p_ref {
        return Err(Error::Unphysical(format!("interleaved decay {p_int} exceeds reference {p_ref}")));
    }
    Ok(ilrb_error_from_decays(p_int, p_ref))
}

/// Per-X90 error from a per-Clifford error, two X90 pulses per Clifford.
pub fn per_x90(per_clifford: f64) -> f64 {
    per_clifford / 2.0
}

struct LorentzPair;

impl Model for LorentzPair {
    fn eval(&self, x: f64, t: &[f64], grad: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for k in 0..2 {
            let (c, w, a) = (t[3 * k], t[3 * k + 1], t[3 * k + 2]);
            let u = (x - c) / w;
            let d = 1.0 / (1.0 + u * u);
            grad[3 * k] = a * 2.0 * u * d * d / w;
            grad[3 * k + 1] = a * 2.0 * u * u * d * d / w;
            grad[3 * k + 2] = d;
            total += a * d;
        }
        total
    }
    fn admissible(&self, t: &[f64]) -> bool {
        t[1] != 0.0 && t[4] != 0.0
    }
}

fn half_width_guess(x: &[f64], y: &[f64], i: usize) -> f64 {
    let half = y[i] / 2.0;
    let mut lo = i;
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    let w = (x[hi] - x[lo]) / 2.0;
    if w > 0.0 {
        w
    } else {
        (x[x.len() - 1] - x[0]) / 20.0
    }
}

/// Fits the sum of two Lorentzians `a/(1 + ((f − c)/w)²)`, `w` being the half width.
///
/// Peaks are returned in ascending center order as `c1, w1, a1, c2, w2, a2`.
pub fn fit_lorentzian_pair(freq: &[f64], response: &[f64]) -> Result<FitResult> {
    check_xy(freq, response, 8)?;
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[a].total_cmp(&freq[b]));
    let x: Vec<f64> = order.iter().map(|&i| freq[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| response[i]).collect();
    let sign = if y.iter().cloned().fold(f64::NEG_INFINITY, f64::max).abs()
        >= y.iter().cloned().fold(f64::INFINITY, f64::min).abs()
    {
        1.0
    } else {
        -1.0
    };
    let ys: Vec<f64> = y.iter().map(|v| sign * v).collect();

    let n = x.len();
    let mut maxima: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || ys[i] >= ys[i - 1]) && (i + 1 == n || ys[i] > ys[i + 1]))
        .collect();
    maxima.sort_by(|&a, &b| ys[b].total_cmp(&ys[a]));
    if maxima.len() < 2 {
        let c = maxima.first().map(|&i| x[i]).unwrap_or(f64::NAN);
        return Err(Error::Unresolved { c1: c, c2: c });
    }
    let (i1, i2) = (maxima[0], maxima[1]);
    let mut theta = vec![];
    for &i in &[i1, i2] {
        theta.extend([x[i], half_width_guess(&x, &ys, i), ys[i]]);
    }
    let w = vec![1.0; n];
    let out = levenberg_marquardt(&LorentzPair, &x, &ys, &w, theta)?;
    let cov = covariance(&out.jtwj, out.chi2, n, false)?;

    let mut t = out.theta;
    t[1] = t[1].abs();
    t[4] = t[4].abs();
    t[2] *= sign;
    t[5] *= sign;
    let mut perm = [0usize, 1, 2, 3, 4, 5];
    if t[3] < t[0] {
        perm = [3, 4, 5, 0, 1, 2];
    }
    let values: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
    let covariance: Vec<Vec<f64>> = perm
        .iter()
        .map(|&i| perm.iter().map(|&j| cov[i][j] * if (i % 3 == 2) ^ (j % 3 == 2) { sign } else { 1.0 }).collect())
        .collect();
    if (values[3] - values[0]).abs() < values[1].min(values[4]) {
        return Err(Error::Unresolved { c1: values[0], c2: values[3] });
    }
    Ok(FitResult {
        names: ["c1", "w1", "a1", "c2", "w2", "a2"].map(String::from).to_vec(),
        values,
        covariance,
        residual_norm: out.chi2.sqrt(),
        converged: out.converged,
        flags: vec![],
    })
}

/// Linear least squares of `y = c1·n + c2·n²`.
///
/// For dual-rail detuning data `c1 = 2χ_DR` and `c2 = 2χ'_DR`.
pub fn fit_poly2_through_origin(n_r: &[f64], detuning: &[f64]) -> Result<FitResult> {
    check_xy(n_r, detuning, 3)?;
    if n_r.iter().any(|&n| n < 0.0) {
        return Err(Error::InvalidArgument { name: "n_r", reason: "photon numbers must be nonnegative".into() });
    }
    let n = n_r.len();
    // Column scaling keeps the normal equations well conditioned.
    let s = n_r.iter().cloned().fold(0.0, f64::max);
    if s == 0.0 {
        return Err(Error::RankDeficient);
    }
    let design = DMatrix::from_fn(n, 2, |i, j| (n_r[i] / s).powi(j as i32 + 1));
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::RankDeficient);
    }
    let b = DVector::from_column_slice(detuning);
    let beta = svd.solve(&b, 1e-14).map_err(|_| Error::RankDeficient)?;
    let resid = &b - &design * &beta;
    let rss = resid.norm_squared();
    let xtx = design.transpose() * &design;
    let inv = xtx.try_inverse().ok_or(Error::RankDeficient)?;
    let scale = if n > 2 { rss / (n - 2) as f64 } else { 0.0 };
    let unscale = [1.0 / s, 1.0 / (s * s)];
    Ok(FitResult {
        names: vec!["c1".into(), "c2".into()],
        values: vec![beta[0] * unscale[0], beta[1] * unscale[1]],
        covariance: (0..2).map(|i| (0..2).map(|j| inv[(i, j)] * scale * unscale[i] * unscale[j]).collect()).collect(),
        residual_norm: rss.sqrt(),
        converged: true,
        flags: vec![],
    })
}

//! Turning readout records into erasure decisions.
//!
//! Points are complex integrated voltages. The binary classifier projects onto
//! the calibrated separation axis and compares with the midpoint; the circular
//! classifier accepts only points close to the logical mean, which also catches
//! leaked states whose signal lies off the separation axis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::MeasurementRecord;

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Non-overlapping rectangular windows of this duration.
    Boxcar { window: f64 },
    /// One weighted sum per record.
    MatchedFilter { template: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub kernel: Kernel,
    /// Unit vector from the logical mean towards the erased mean.
    pub projection_axis: Complex64,
    /// Projection of the midpoint between the two means.
    pub threshold: f64,
    /// Logical-state mean.
    pub center: Complex64,
    /// Per-quadrature standard deviation of the logical ensemble.
    pub logical_std: f64,
    /// Acceptance radius of the circular classifier.
    pub radius: f64,
}

impl ClassifierConfig {
    /// Sets the circular radius to `k` logical standard deviations.
    pub fn with_radius_sigmas(mut self, k: f64) -> Self {
        self.radius = k * self.logical_std;
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn project(&self, p: Complex64) -> f64 {
        (p * self.projection_axis.conj()).re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryLabel {
    Logical,
    Erased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircularLabel {
    Logical,
    ErasedOrLeaked,
}

/// Integrates a record with the configured kernel.
pub fn integrate(record: &MeasurementRecord, config: &ClassifierConfig) -> Result<Vec<Complex64>> {
    match &config.kernel {
        Kernel::Boxcar { window } => {
            if !(*window > 0.0) {
                return Err(Error::InvalidArgument { name: "window", reason: "must be positive".into() });
            }
            let n = (window / record.dt).round().max(1.0) as usize;
            if record.samples.len() < n {
                return Err(Error::RecordTooShort { samples: record.samples.len(), window: n });
            }
            Ok(record.samples.chunks_exact(n).map(|c| c.iter().sum::<Complex64>() / n as f64).collect())
        }
        Kernel::MatchedFilter { template } => {
            let n = template.len();
            if n == 0 || record.samples.len() < n {
                return Err(Error::RecordTooShort { samples: record.samples.len(), window: n });
            }
            let norm: f64 = template.iter().map(|w| w.norm()).sum();
            if norm == 0.0 {
                return Err(Error::Degenerate("matched-filter template is identically zero".into()));
            }
            let s: Complex64 = template.iter().zip(&record.samples).map(|(w, x)| w * x).sum();
            Ok(vec![s / norm])
        }
    }
}

/// Midpoint decision along the separation axis. A point exactly on the
/// threshold is flagged, since a false positive costs less than a miss.
pub fn classify_binary(point: Complex64, config: &ClassifierConfig) -> BinaryLabel {
    if config.project(point) >= config.threshold {
        BinaryLabel::Erased
    } else {
        BinaryLabel::Logical
    }
}

pub fn classify_circular(point: Complex64, config: &ClassifierConfig) -> CircularLabel {
    if (point - config.center).norm() <= config.radius {
        CircularLabel::Logical
    } else {
        CircularLabel::ErasedOrLeaked
    }
}

/// Every boxcar window of a continuous record with its point and binary label.
pub fn classify_windows(record: &MeasurementRecord, config: &ClassifierConfig) -> Result<Vec<(usize, Complex64, BinaryLabel)>> {
    Ok(integrate(record, config)?.into_iter().enumerate().map(|(i, p)| (i, p, classify_binary(p, config))).collect())
}

fn mean(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// `|Δμ|² / (2σ²)` with σ² the pooled variance along the separation axis.
pub fn estimate_snr(points_a: &[Complex64], points_b: &[Complex64]) -> Result<f64> {
    if points_a.len() < 30 || points_b.len() < 30 {
        return Err(Error::InvalidArgument { name: "points", reason: "need at least 30 points per ensemble".into() });
    }
    let (ma, mb) = (mean(points_a), mean(points_b));
    let d = mb - ma;
    let axis = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
    let ss = |pts: &[Complex64], m: Complex64| pts.iter().map(|p| ((p - m) * axis.conj()).re.powi(2)).sum::<f64>();
    let var = (ss(points_a, ma) + ss(points_b, mb)) / (points_a.len() + points_b.len() - 2) as f64;
    if !(var > 0.0) {
        return Err(Error::Degenerate("zero variance along the separation axis".into()));
    }
    Ok(d.norm_sqr() / (2.0 * var))
}

/// Calibrates a midpoint threshold and a 3σ circular region from labeled points.
pub fn calibrate(points_logical: &[Complex64], points_erased: &[Complex64]) -> Result<ClassifierConfig> {
    let snr = estimate_snr(points_logical, points_erased)?;
    if snr < 0.1 {
        return Err(Error::Uncalibratable { snr });
    }
    let (ml, me) = (mean(points_logical), mean(points_erased));
    let d = me - ml;
    let axis = d / d.norm();
    let mid = (ml + me) / 2.0;
    let var = points_logical.iter().map(|p| (p - ml).norm_sqr()).sum::<f64>() / (2.0 * (points_logical.len() - 1) as f64);
    let std = var.sqrt();
    Ok(ClassifierConfig {
        kernel: Kernel::Boxcar { window: 496e-9 },
        projection_axis: axis,
        threshold: (mid * axis.conj()).re,
        center: ml,
        logical_std: std,
        radius: 3.0 * std,
    })
}

/// Matched-filter weights: the conjugated mean separation trajectory.
pub fn matched_filter_template(logical: &[MeasurementRecord], erased: &[MeasurementRecord]) -> Result<Vec<Complex64>> {
    let len = logical.iter().chain(erased).map(|r| r.samples.len()).min().unwrap_or(0);
    if logical.is_empty() || erased.is_empty() || len == 0 {
        return Err(Error::Degenerate("empty calibration records".into()));
    }
    let avg = |recs: &[MeasurementRecord]| -> Vec<Complex64> {
        (0..len).map(|k| recs.iter().map(|r| r.samples[k]).sum::<Complex64>() / recs.len() as f64).collect()
    };
    let (a, b) = (avg(logical), avg(erased));
    Ok(a.iter().zip(&b).map(|(l, e)| (e - l).conj()).collect())
}

/// Fraction of erasures that slip through `checks_between` checks unflagged.
pub fn missed_erasure_fraction(checks_between: u32, erasure_per_check: f64, false_negative: f64) -> Result<f64> {
    for (name, v) in [("erasure_per_check", erasure_per_check), ("false_negative", false_negative)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument { name, reason: "must lie in [0, 1]".into() });
        }
    }
    Ok(checks_between as f64 * erasure_per_check * false_negative)
}

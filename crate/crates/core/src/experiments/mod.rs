//! Benchmarking protocols built on the trajectory simulator.
//!
//! Every protocol simulates shots in parallel with seeds derived from
//! `(config.seed, family, index)`, so results do not depend on the number of
//! worker threads. Curves, fits and derived scalars are collected in an
//! [`ExperimentResult`].

mod continuous;
mod ilrb;
mod ladders;
mod leak;
mod terasure;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ErrorChannelParams;
use crate::classifier::{calibrate, classify_binary, BinaryLabel, ClassifierConfig, Kernel};
use crate::error::{Error, Result};
use crate::fitting::{fit_exp_decay_weighted, FitResult};
use crate::params::{validate, Bloch, DualRailState, MeasurementRecord, SystemParams};
use crate::rng;
use crate::trajectory::{simulate_shot, Segment, ShotTimeline, Window, CLIFFORD_DURATION, DEFAULT_DT};

pub use continuous::{continuous_drive, run_continuous_rb, snr_vs_window};
pub use ilrb::run_ilrb;
pub use ladders::run_induced_ladders;
pub use leak::run_leak_sweep;
pub use terasure::run_t_erasure_compare;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    Ilrb,
    InducedBitflip,
    InducedDephasing,
    ContinuousRb,
    TErasureCompare,
    LeakSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Ilrb => "ilrb",
            ExperimentKind::InducedBitflip => "induced_bitflip",
            ExperimentKind::InducedDephasing => "induced_dephasing",
            ExperimentKind::ContinuousRb => "continuous_rb",
            ExperimentKind::TErasureCompare => "t_erasure_compare",
            ExperimentKind::LeakSweep => "leak_sweep",
        }
    }
}

/// Probe and ring-down durations of one erasure check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckTiming {
    pub probe: f64,
    pub ringdown: f64,
    /// Idle padding after each check in the fixed-time ladders.
    pub pad: f64,
}

impl Default for CheckTiming {
    fn default() -> Self {
        CheckTiming { probe: 384e-9, ringdown: 112e-9, pad: 24e-9 }
    }
}

impl CheckTiming {
    /// Integration window covering probe and ring-down.
    pub fn window(&self) -> f64 {
        self.probe + self.ringdown
    }

    pub fn slot(&self) -> f64 {
        self.window() + self.pad
    }
}

/// How mid-circuit erasures are detected in continuous-detection RB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContinuousMode {
    /// Probe always on, non-overlapping windows over the whole sequence.
    Windows,
    /// Probe off during gates, with this many evenly spaced discrete checks.
    Discrete(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Sequence lengths, check counts, or delays in units of `delay_unit`.
    pub lengths: Vec<usize>,
    pub shots_per_point: usize,
    pub params: SystemParams,
    pub injected: ErrorChannelParams,
    /// Check classifier; calibrated from simulated ensembles when absent.
    pub classifier: Option<ClassifierConfig>,
    pub seed: u64,
    pub dt: f64,
    pub timing: CheckTiming,
    /// Common checks run after every `check_every` Cliffords.
    pub check_every: usize,
    /// Symmetrize the final readout over |0_L> and |1_L> targets.
    pub symmetrize: bool,
    /// Continuous-detection window length.
    pub window: f64,
    pub continuous_mode: ContinuousMode,
    /// Fixed evolution time of the induced-error ladders.
    pub total_time: f64,
    /// Smallest check count included in the ladder tail fits.
    pub tail_start: usize,
    /// Circular radii, in logical standard deviations, for the leakage sweep.
    pub radii: Vec<f64>,
    /// Time unit of `lengths` for the lifetime comparison.
    pub delay_unit: f64,
    pub calibration_shots: usize,
    /// Points with fewer postselected shots are left out of survival fits.
    pub min_survivors: usize,
    /// Number of full records exported by continuous RB.
    pub record_exports: usize,
}

impl ExperimentConfig {
    /// Defaults for `kind` on the given device.
    pub fn new(kind: ExperimentKind, params: SystemParams) -> Self {
        let lengths = match kind {
            // Multiples of the check cadence, so every length has the same
            // number of Cliffords after its last common check.
            ExperimentKind::Ilrb => vec![5, 10, 20, 40, 60, 80, 100],
            ExperimentKind::InducedBitflip | ExperimentKind::InducedDephasing => vec![0, 4, 8, 12, 16, 24, 32, 48, 64, 96],
            ExperimentKind::ContinuousRb => vec![2, 5, 10, 20, 50, 100, 200],
            ExperimentKind::TErasureCompare => vec![0, 5, 10, 20, 30, 45, 60, 80],
            ExperimentKind::LeakSweep => vec![5, 10, 15, 20, 25, 30],
        };
        ExperimentConfig {
            experiment: kind,
            lengths,
            shots_per_point: 2000,
            params,
            injected: ErrorChannelParams::NONE,
            classifier: None,
            seed: 0,
            dt: DEFAULT_DT,
            timing: CheckTiming::default(),
            check_every: 5,
            symmetrize: true,
            window: 480e-9,
            continuous_mode: ContinuousMode::Windows,
            total_time: 49.92e-6,
            tail_start: 16,
            radii: vec![2.5, 3.0, 3.5, 4.0, 5.0, f64::INFINITY],
            delay_unit: 1e-6,
            calibration_shots: 2000,
            min_survivors: 50,
            record_exports: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let report = validate(&self.params);
        if !report.is_valid() {
            return Err(Error::InvalidParams(report));
        }
        if self.lengths.is_empty() || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument { name: "lengths", reason: "must be nonempty and strictly increasing".into() });
        }
        if self.shots_per_point < 100 {
            return Err(Error::InvalidArgument { name: "shots_per_point", reason: "must be at least 100".into() });
        }
        if self.calibration_shots < 100 {
            return Err(Error::InvalidArgument { name: "calibration_shots", reason: "must be at least 100".into() });
        }
        Ok(())
    }
}

/// A plotted series with one-sigma error bars.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Vec<f64>,
}

impl Curve {
    fn push(&mut self, x: f64, (y, e): (f64, f64)) {
        self.x.push(x);
        self.y.push(y);
        self.yerr.push(e);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Estimate { value, sigma }
    }

    /// Number of standard deviations between this estimate and `truth`.
    pub fn z_score(&self, truth: f64) -> f64 {
        (self.value - truth).abs() / self.sigma
    }
}

/// Full record of one shot kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedRecord {
    pub label: String,
    pub record: MeasurementRecord,
    pub points: Vec<Complex64>,
    pub labels: Vec<BinaryLabel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub curves: BTreeMap<String, Curve>,
    pub fits: BTreeMap<String, FitResult>,
    pub derived: BTreeMap<String, Estimate>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub records: Vec<ExportedRecord>,
}

impl ExperimentResult {
    pub fn derived(&self, name: &str) -> Option<Estimate> {
        self.derived.get(name).copied()
    }

    fn set(&mut self, name: &str, e: Estimate) {
        self.derived.insert(name.to_string(), e);
    }
}

/// Dispatches to the protocol selected by `config.experiment`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.experiment {
        ExperimentKind::Ilrb => run_ilrb(config),
        ExperimentKind::InducedBitflip | ExperimentKind::InducedDephasing => run_induced_ladders(config),
        ExperimentKind::ContinuousRb => run_continuous_rb(config),
        ExperimentKind::TErasureCompare => run_t_erasure_compare(config),
        ExperimentKind::LeakSweep => run_leak_sweep(config),
    }
}

/// Order-preserving parallel map over shot indices.
pub(crate) fn par_shots<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

/// Binomial proportion with a standard error that stays positive at 0 and n.
pub(crate) fn proportion(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = k as f64 / n as f64;
    let pt = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p, (pt * (1.0 - pt) / n as f64).sqrt())
}

/// Shot-noise weighted decay fit of a curve.
pub(crate) fn fit_curve(c: &Curve, offset: f64) -> Result<FitResult> {
    fit_exp_decay_weighted(&c.x, &c.y, Some(&c.yerr), offset)
}

pub(crate) fn decay(fit: &FitResult) -> Estimate {
    Estimate::new(fit.value("p").unwrap_or(f64::NAN), fit.sigma("p").unwrap_or(f64::NAN))
}

/// `1 − p_int/p_ref` with first-order error propagation for independent fits.
pub(crate) fn loss_ratio(p_int: Estimate, p_ref: Estimate) -> Estimate {
    let q = p_int.value / p_ref.value;
    let rel = ((p_int.sigma / p_int.value).powi(2) + (p_ref.sigma / p_ref.value).powi(2)).sqrt();
    Estimate::new(1.0 - q, q * rel)
}

/// Kind of check owning a timeline window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CheckKind {
    Common,
    Interleaved,
    EndOfLine,
    Continuous,
}

/// Incremental timeline construction with check windows.
#[derive(Default)]
pub(crate) struct Builder {
    pub segs: Vec<Segment>,
    pub windows: Vec<Window>,
    pub kinds: Vec<CheckKind>,
    pub t: f64,
}

impl Builder {
    pub fn push(&mut self, s: Segment) {
        self.t += s.duration;
        self.segs.push(s);
    }

    /// Probe pulse plus ring-down, optionally ending with an echo pulse inside
    /// the ring-down, windowed as one check.
    pub fn check(&mut self, kind: CheckKind, timing: &CheckTiming, inject: bool, echo: bool) {
        self.windows.push(Window { start: self.t, duration: timing.window() });
        self.kinds.push(kind);
        self.push(Segment::probe_on(timing.probe).with_inject(inject));
        if echo {
            let idle = timing.ringdown - CLIFFORD_DURATION;
            if idle > 0.0 {
                self.push(Segment::idle(idle));
            }
            self.push(Segment::echo());
        } else {
            self.push(Segment::idle(timing.ringdown));
        }
    }

    pub fn into_timeline(self, seed: u64, initial: DualRailState, dt: f64) -> ShotTimeline {
        let mut tl = ShotTimeline::new(self.segs, seed, initial);
        tl.windows = self.windows;
        tl.dt = dt;
        tl
    }
}

/// Check classifier calibrated on pure-sector ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckCalibration {
    pub classifier: ClassifierConfig,
    pub snr: f64,
    pub false_positive: f64,
    pub false_negative: f64,
    /// Mean distance of leaked-state points from the logical center, in logical std.
    pub leak_distance: f64,
}

/// Simulates `shots` isolated checks per sector with all stochastic processes
/// disabled and calibrates a classifier on the resulting points.
pub fn calibrate_check(params: &SystemParams, timing: &CheckTiming, dt: f64, shots: usize, seed: u64) -> Result<CheckCalibration> {
    let frozen = params.frozen();
    let run = |initial: DualRailState, tag: u64| -> Result<Vec<Complex64>> {
        par_shots(shots, |i| {
            let init = match initial {
                DualRailState::Logical(_) if i % 2 == 1 => DualRailState::Logical(Bloch::ONE_L),
                s => s,
            };
            let mut b = Builder::default();
            b.check(CheckKind::Common, timing, false, false);
            let tl = b.into_timeline(rng::derive(seed, tag, i as u64), init, dt);
            Ok(simulate_shot(&tl, &frozen, &ErrorChannelParams::NONE)?.points[0])
        })
    };
    let logical = run(DualRailState::Logical(Bloch::ZERO_L), 0xCA1)?;
    let erased = run(DualRailState::Erased, 0xCA2)?;
    let leaked = run(DualRailState::Leaked, 0xCA3)?;
    let classifier = calibrate(&logical, &erased)?.with_kernel(Kernel::Boxcar { window: timing.window() });
    let snr = crate::classifier::estimate_snr(&logical, &erased)?;
    let rate = |pts: &[Complex64], label: BinaryLabel| {
        pts.iter().filter(|p| classify_binary(**p, &classifier) == label).count() as f64 / pts.len() as f64
    };
    let leak_mean = leaked.iter().sum::<Complex64>() / leaked.len() as f64;
    Ok(CheckCalibration {
        false_positive: rate(&logical, BinaryLabel::Erased),
        false_negative: rate(&erased, BinaryLabel::Logical),
        leak_distance: (leak_mean - classifier.center).norm() / classifier.logical_std,
        snr,
        classifier,
    })
}

/// Uses the configured classifier or calibrates one for the check window.
pub(crate) fn check_classifier(cfg: &ExperimentConfig) -> Result<(ClassifierConfig, Option<CheckCalibration>)> {
    match &cfg.classifier {
        Some(c) => Ok((c.clone(), None)),
        None => {
            let cal = calibrate_check(&cfg.params, &cfg.timing, cfg.dt, cfg.calibration_shots, rng::derive(cfg.seed, 0xCA1B, 0))?;
            Ok((cal.classifier.clone(), Some(cal)))
        }
    }
}

pub(crate) fn record_calibration(res: &mut ExperimentResult, cal: &Option<CheckCalibration>, shots: usize) {
    if let Some(c) = cal {
        let n = shots as f64;
        res.set("check_snr", Estimate::new(c.snr, c.snr * (2.0 / n).sqrt()));
        res.set("check_false_positive", Estimate::new(c.false_positive, (c.false_positive.max(1.0 / n) / n).sqrt()));
        res.set("check_false_negative", Estimate::new(c.false_negative, (c.false_negative.max(1.0 / n) / n).sqrt()));
    }
}

/// Probability that an ideal Z-basis readout reports the target state.
pub(crate) fn z_success(state: &DualRailState, target_one: bool) -> f64 {
    match state {
        DualRailState::Logical(b) => {
            if target_one {
                (1.0 - b.z()) / 2.0
            } else {
                (1.0 + b.z()) / 2.0
            }
        }
        _ => 0.5,
    }
}

/// Probability that an ideal X-basis readout reports |+_L>.
pub(crate) fn x_success(state: &DualRailState) -> f64 {
    match state {
        DualRailState::Logical(b) => (1.0 + b.x()) / 2.0,
        _ => 0.5,
    }
}

pub(crate) fn draw(seed: u64, p: f64) -> bool {
    use rand::Rng;
    rng::stream(seed, rng::Stream::Readout).random::<f64>() < p
}

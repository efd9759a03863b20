//! RB with erasure detection running throughout the gate sequence.

use num_complex::Complex64;

use super::*;
use crate::classifier::{classify_binary, estimate_snr, integrate, BinaryLabel};
use crate::clifford::{compose, generate_sequence, CliffordElement};
use crate::dispersive::{steady_states_with_kappa, steady_amplitude, sector_detunings};
use crate::fitting::rb_error_from_decay;
use crate::trajectory::{generate_record, RecordMode};

use super::ilrb::{curves, fit_pair, tally, RbShot};

const TAG_SHOT: u64 = 0xC0A7;
const TAG_EXPORT: u64 = 0xC0A8;
const TAG_CAL: u64 = 0xC0A9;
const TAG_SNR: u64 = 0xC0AA;

/// Steady fields `(gg, logical mean)` at unit drive, each sector with its own linewidth.
fn unit_fields(p: &SystemParams) -> (Complex64, Complex64) {
    let unit = SystemParams { drive_amp: 1.0, ..*p };
    let l = steady_states_with_kappa(&unit, p.kappa_logical);
    let (_, _, dgg) = sector_detunings(&unit);
    (steady_amplitude(1.0, p.kappa_gg, dgg), (l.alpha_0 + l.alpha_1) / 2.0)
}

/// Drive amplitude giving SNR `snr` between the gg and logical steady fields
/// after integrating for `window`.
pub fn continuous_drive(p: &SystemParams, window: f64, snr: f64) -> Result<f64> {
    let (gg, l) = unit_fields(p);
    let unit = 2.0 * p.kappa_gg * p.eta_eff * (gg - l).norm_sqr();
    if !(unit > 0.0) || !(window > 0.0) || !(snr >= 0.0) {
        return Err(Error::InvalidArgument { name: "snr", reason: "target unreachable".into() });
    }
    Ok((snr / (unit * window)).sqrt())
}

/// Empirical SNR of constant gg and logical fields for each window length,
/// from `records` noisy records per sector.
pub fn snr_vs_window(p: &SystemParams, windows: &[f64], records: usize, dt: f64, seed: u64) -> Result<Curve> {
    let (gg, l) = unit_fields(p);
    let (gg, l) = (gg * p.drive_amp, l * p.drive_amp);
    let mut c = Curve::default();
    for (wi, &w) in windows.iter().enumerate() {
        let n = (w / dt).round() as usize;
        let cfg = ClassifierConfig {
            kernel: Kernel::Boxcar { window: n as f64 * dt },
            projection_axis: Complex64::new(1.0, 0.0),
            threshold: 0.0,
            center: Complex64::new(0.0, 0.0),
            logical_std: 1.0,
            radius: 1.0,
        };
        let points = |alpha: Complex64, tag: u64| -> Result<Vec<Complex64>> {
            let path = vec![alpha; n];
            par_shots(records, |i| {
                let rec = generate_record(&path, p, dt, rng::derive(seed, tag, ((wi as u64) << 32) | i as u64));
                Ok(integrate(&rec, &cfg)?[0])
            })
        };
        let snr = estimate_snr(&points(l, TAG_SNR)?, &points(gg, TAG_SNR + 1)?)?;
        c.push(n as f64 * dt, (snr, snr * (2.0 / records as f64).sqrt()));
    }
    Ok(c)
}

/// Window classifier calibrated on steady-state fields.
fn window_classifier(cfg: &ExperimentConfig) -> Result<ClassifierConfig> {
    let frozen = cfg.params.frozen();
    let run = |initial: DualRailState, tag: u64| -> Result<Vec<Complex64>> {
        par_shots(cfg.calibration_shots, |i| {
            let init = match initial {
                DualRailState::Logical(_) if i % 2 == 1 => DualRailState::Logical(Bloch::ONE_L),
                s => s,
            };
            let mut tl = ShotTimeline::new(vec![Segment::probe_on(cfg.window)], rng::derive(cfg.seed, tag, i as u64), init);
            tl.dt = cfg.dt;
            tl.prefill = true;
            tl.windows = vec![Window { start: 0.0, duration: cfg.window }];
            Ok(simulate_shot(&tl, &frozen, &ErrorChannelParams::NONE)?.points[0])
        })
    };
    let logical = run(DualRailState::Logical(Bloch::ZERO_L), TAG_CAL)?;
    let erased = run(DualRailState::Erased, TAG_CAL + 1)?;
    Ok(calibrate(&logical, &erased)?.with_kernel(Kernel::Boxcar { window: cfg.window }))
}

fn continuous_timeline(cfg: &ExperimentConfig, m: usize, seed: u64, target_one: bool) -> Result<Builder> {
    let seq = generate_sequence(m, rng::derive(seed, 0x5E0, 0), None, 0)?;
    let recovery = if target_one { compose(seq.recovery, CliffordElement::x()) } else { seq.recovery };
    let gates: Vec<_> = seq.elements.iter().copied().chain([recovery]).collect();
    let mut b = Builder::default();
    match cfg.continuous_mode {
        ContinuousMode::Windows => {
            for &g in &gates {
                b.push(Segment::gate(g).with_probe(true).with_inject(true));
            }
            let n = (b.t / cfg.window + 1e-9).floor() as usize;
            for k in 0..n {
                b.windows.push(Window { start: k as f64 * cfg.window, duration: cfg.window });
                b.kinds.push(CheckKind::Continuous);
            }
        }
        ContinuousMode::Discrete(n) => {
            let mut positions: Vec<usize> = (1..=n).map(|j| (j * m + (n + 1) / 2) / (n + 1)).filter(|&k| k >= 1 && k < m).collect();
            positions.dedup();
            let mut next = positions.iter().peekable();
            for (i, &g) in gates.iter().enumerate() {
                b.push(Segment::gate(g).with_inject(true));
                if next.peek() == Some(&&(i + 1)) {
                    next.next();
                    b.check(CheckKind::Common, &cfg.timing, false, false);
                }
            }
        }
    }
    b.check(CheckKind::EndOfLine, &cfg.timing, false, false);
    Ok(b)
}

fn continuous_shot(cfg: &ExperimentConfig, m: usize, shot: usize, mode: RecordMode, tag: u64) -> Result<(RbShot, Option<MeasurementRecord>)> {
    let seed = rng::derive(cfg.seed, tag, ((m as u64) << 32) | shot as u64);
    let target_one = cfg.symmetrize && shot % 2 == 1;
    let b = continuous_timeline(cfg, m, seed, target_one)?;
    let kinds = b.kinds.clone();
    let mut tl = b.into_timeline(seed, DualRailState::Logical(Bloch::ZERO_L), cfg.dt);
    tl.record_mode = mode;
    let res = simulate_shot(&tl, &cfg.params, &cfg.injected)?;
    let shot = RbShot {
        success: draw(seed, z_success(&res.final_state, target_one)),
        leaked: false,
        points: res.points,
        kinds,
    };
    Ok((shot, res.record))
}

/// Continuous-detection RB comparing end-of-line-only postselection with
/// postselection on every mid-circuit window or discrete check.
///
/// The injected channel is applied after every Clifford.
pub fn run_continuous_rb(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (eol_classifier, cal) = check_classifier(cfg)?;
    let mid_classifier = match cfg.continuous_mode {
        ContinuousMode::Windows => window_classifier(cfg)?,
        ContinuousMode::Discrete(_) => eol_classifier.clone(),
    };
    let mut res = ExperimentResult::default();
    record_calibration(&mut res, &cal, cfg.calibration_shots);

    let label_of = |p: &Complex64, k: &CheckKind| {
        let c = if *k == CheckKind::EndOfLine { &eol_classifier } else { &mid_classifier };
        classify_binary(*p, c)
    };
    let mut eol_t = vec![];
    let mut mid_t = vec![];
    for &m in &cfg.lengths {
        let shots: Vec<RbShot> = par_shots(cfg.shots_per_point, |s| Ok(continuous_shot(cfg, m, s, RecordMode::Windows, TAG_SHOT)?.0))?;
        eol_t.push(tally(&shots, |s| {
            s.points.iter().zip(&s.kinds).all(|(p, k)| *k != CheckKind::EndOfLine || label_of(p, k) == BinaryLabel::Logical)
        }));
        mid_t.push(tally(&shots, |s| s.points.iter().zip(&s.kinds).all(|(p, k)| label_of(p, k) == BinaryLabel::Logical)));
    }
    let mid_label = match cfg.continuous_mode {
        ContinuousMode::Windows => "windowed",
        ContinuousMode::Discrete(_) => "discrete",
    };
    let n = cfg.min_survivors;
    let eol = fit_pair(&mut res, "eol_only", &curves(&cfg.lengths, &eol_t, n), n)?;
    let mid = fit_pair(&mut res, mid_label, &curves(&cfg.lengths, &mid_t, n), n)?;
    for (suffix, (post, surv)) in [("", mid), ("_eol_only", eol)] {
        res.set(&format!("residual_per_clifford{suffix}"), Estimate::new(rb_error_from_decay(surv.value), surv.sigma / 2.0));
        res.set(&format!("erasure_per_clifford{suffix}"), Estimate::new(1.0 - post.value, post.sigma));
    }

    if cfg.record_exports > 0 {
        let m = *cfg.lengths.last().expect("validated nonempty");
        for s in 0..cfg.record_exports {
            let (shot, record) = continuous_shot(cfg, m, s, RecordMode::Full, TAG_EXPORT)?;
            if let Some(record) = record {
                let labels = shot.points.iter().zip(&shot.kinds).map(|(p, k)| label_of(p, k)).collect();
                res.records.push(ExportedRecord { label: format!("m{m}_shot{s}"), record, points: shot.points, labels });
            }
        }
    }
    Ok(res)
}

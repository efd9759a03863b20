//! Erasure lifetime with the probe off versus continuously on.

use super::*;
use crate::classifier::{classify_binary, BinaryLabel};

const TAG_DELAY: u64 = 0x7E00;
const TAG_FN: u64 = 0x7E01;

/// Fraction of erased-state checks that the classifier reports as logical.
fn false_negative(cfg: &ExperimentConfig, classifier: &ClassifierConfig) -> Result<f64> {
    let frozen = cfg.params.frozen();
    let missed = par_shots(cfg.calibration_shots, |i| {
        let mut b = Builder::default();
        b.check(CheckKind::Common, &cfg.timing, false, false);
        let tl = b.into_timeline(rng::derive(cfg.seed, TAG_FN, i as u64), DualRailState::Erased, cfg.dt);
        let p = simulate_shot(&tl, &frozen, &ErrorChannelParams::NONE)?.points[0];
        Ok(classify_binary(p, classifier) == BinaryLabel::Logical)
    })?;
    Ok(missed.iter().filter(|m| **m).count() as f64 / missed.len() as f64)
}

/// Survival in the dual-rail subspace after a delay with the probe off and on.
///
/// Each delay curve is fitted with its offset fixed to the false-negative rate,
/// so that the fitted lifetime refers to the erasure process alone. Preparations
/// alternate between |0_L> and |1_L>.
pub fn run_t_erasure_compare(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (classifier, cal) = check_classifier(cfg)?;
    let mut res = ExperimentResult::default();
    record_calibration(&mut res, &cal, cfg.calibration_shots);
    let fn_rate = match &cal {
        Some(c) => c.false_negative,
        None => false_negative(cfg, &classifier)?,
    };

    let mut lifetimes = vec![];
    for (probe, label) in [(false, "idle"), (true, "probe_on")] {
        let mut curve = Curve::default();
        for &d in &cfg.lengths {
            let delay = ((d as f64 * cfg.delay_unit) / cfg.dt).round() * cfg.dt;
            let kept = par_shots(cfg.shots_per_point, |s| {
                let seed = rng::derive(cfg.seed, TAG_DELAY + probe as u64, ((d as u64) << 32) | s as u64);
                let mut b = Builder::default();
                if delay > 0.0 {
                    b.push(if probe { Segment::probe_on(delay) } else { Segment::idle(delay) });
                }
                b.check(CheckKind::EndOfLine, &cfg.timing, false, false);
                let init = if s % 2 == 0 { Bloch::ZERO_L } else { Bloch::ONE_L };
                let tl = b.into_timeline(seed, DualRailState::Logical(init), cfg.dt);
                let p = simulate_shot(&tl, &cfg.params, &cfg.injected)?.points[0];
                Ok(classify_binary(p, &classifier) == BinaryLabel::Logical)
            })?;
            curve.push(d as f64, proportion(kept.iter().filter(|k| **k).count(), kept.len()));
        }
        let fit = fit_curve(&curve, fn_rate)?;
        for flag in &fit.flags {
            res.warnings.push(format!("{label} fit: {flag}"));
        }
        let p = decay(&fit);
        let t = -cfg.delay_unit / p.value.ln();
        let sigma = cfg.delay_unit * p.sigma / (p.value * p.value.ln().powi(2));
        let est = Estimate::new(t, sigma);
        res.set(&format!("t_erasure_{label}"), est);
        lifetimes.push(est);
        res.curves.insert(label.to_string(), curve);
        res.fits.insert(label.to_string(), fit);
    }
    let (idle, on) = (lifetimes[0], lifetimes[1]);
    let ratio = on.value / idle.value;
    let rel = ((on.sigma / on.value).powi(2) + (idle.sigma / idle.value).powi(2)).sqrt();
    res.set("lifetime_ratio", Estimate::new(ratio, ratio * rel));
    res.set("false_negative_offset", Estimate::new(fn_rate, (fn_rate.max(1.0 / cfg.calibration_shots as f64) / cfg.calibration_shots as f64).sqrt()));
    Ok(res)
}

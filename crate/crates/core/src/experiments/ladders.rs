//! Induced-error ladders: a growing number of checks in a fixed time.
//!
//! Total evolution time is held fixed, so idle relaxation is common to every
//! point and only the per-check error changes with the check count N. The
//! polarization of |0_L>/|1_L> preparations yields the bit-flip probability
//! per check; an echoed |+_L> preparation yields the total Pauli error
//! `p2 = p1/2 + p_phi`.

use super::*;
use crate::classifier::{classify_binary, BinaryLabel};

const TAG_Z: u64 = 0x1AD0;
const TAG_X: u64 = 0x1AD1;

/// Fixed-duration timeline with `n` evenly spaced checks and an optional echo
/// at the midpoint, followed by the end-of-line check. The echo pulse adds to
/// the fixed duration.
pub(crate) fn ladder_timeline(cfg: &ExperimentConfig, n: usize, echo: bool) -> Result<Builder> {
    let dt = cfg.dt;
    let free = cfg.total_time - n as f64 * cfg.timing.slot();
    if free < -0.5 * dt {
        return Err(Error::InvalidArgument {
            name: "lengths",
            reason: format!("{n} checks do not fit into {:e} s", cfg.total_time),
        });
    }
    let free_steps = (free.max(0.0) / dt).round() as u64;
    let gaps = n as u64 + 1;
    let gap_len = |k: u64| (free_steps / gaps + u64::from(k < free_steps % gaps)) as f64 * dt;
    let mut b = Builder::default();
    let mid = n / 2;
    for k in 0..=n as u64 {
        let g = gap_len(k);
        if echo && k == mid as u64 {
            let half = ((g / dt).round() as u64 / 2) as f64 * dt;
            if half > 0.0 {
                b.push(Segment::idle(half));
            }
            b.push(Segment::echo());
            if g - half > 0.5 * dt {
                b.push(Segment::idle(g - half));
            }
        } else if g > 0.0 {
            b.push(Segment::idle(g));
        }
        if k < n as u64 {
            b.check(CheckKind::Common, &cfg.timing, true, false);
            if cfg.timing.pad > 0.0 {
                b.push(Segment::idle(cfg.timing.pad));
            }
        }
    }
    b.check(CheckKind::EndOfLine, &cfg.timing, false, false);
    Ok(b)
}

struct LadderShot {
    kept: bool,
    success: bool,
}

fn ladder_shot(cfg: &ExperimentConfig, classifier: &ClassifierConfig, n: usize, prep: Bloch, echo: bool, tag: u64, shot: usize) -> Result<LadderShot> {
    let seed = rng::derive(cfg.seed, tag, ((n as u64) << 32) | shot as u64);
    let tl = ladder_timeline(cfg, n, echo)?.into_timeline(seed, DualRailState::Logical(prep), cfg.dt);
    let res = simulate_shot(&tl, &cfg.params, &cfg.injected)?;
    let kept = res.points.iter().all(|p| classify_binary(*p, classifier) == BinaryLabel::Logical);
    let p = if prep.x() > 0.5 {
        // The echo maps |+_L> onto itself, so the X readout targets |+_L>.
        x_success(&res.final_state)
    } else {
        z_success(&res.final_state, prep.z() < 0.0)
    };
    Ok(LadderShot { kept, success: draw(seed, p) })
}

/// Mean of `2s − 1` over kept shots with its standard error.
fn contrast(shots: &[LadderShot]) -> ((f64, f64), usize) {
    let kept: Vec<_> = shots.iter().filter(|s| s.kept).collect();
    let k = kept.iter().filter(|s| s.success).count();
    let (p, e) = proportion(k, kept.len());
    ((2.0 * p - 1.0, 2.0 * e), kept.len())
}

fn tail_fit(res: &mut ExperimentResult, label: &str, curve: &Curve, start: usize) -> Result<Estimate> {
    let idx: Vec<_> = (0..curve.x.len()).filter(|&i| curve.x[i] >= start as f64).collect();
    let tail = Curve {
        x: idx.iter().map(|&i| curve.x[i]).collect(),
        y: idx.iter().map(|&i| curve.y[i]).collect(),
        yerr: idx.iter().map(|&i| curve.yerr[i]).collect(),
    };
    let fit = fit_curve(&tail, 0.0)?;
    for flag in &fit.flags {
        res.warnings.push(format!("{label} tail fit: {flag}"));
    }
    let p = decay(&fit);
    res.fits.insert(format!("{label}_tail"), fit);
    Ok(Estimate::new(1.0 - p.value, p.sigma))
}

/// Bit-flip and echo ladders with tail fits for `p1`, `p2` and `p_phi`.
pub fn run_induced_ladders(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (classifier, cal) = check_classifier(cfg)?;
    let mut res = ExperimentResult::default();
    record_calibration(&mut res, &cal, cfg.calibration_shots);

    let mut polarization = Curve::default();
    let mut coherence = Curve::default();
    let mut kept_z = Curve::default();
    let mut kept_x = Curve::default();
    let half = cfg.shots_per_point / 2;
    for &n in &cfg.lengths {
        let zero = par_shots(half, |s| ladder_shot(cfg, &classifier, n, Bloch::ZERO_L, false, TAG_Z, 2 * s))?;
        let one = par_shots(half, |s| ladder_shot(cfg, &classifier, n, Bloch::ONE_L, false, TAG_Z, 2 * s + 1))?;
        let plus = par_shots(cfg.shots_per_point, |s| ladder_shot(cfg, &classifier, n, Bloch::PLUS_L, true, TAG_X, s))?;
        let ((z0, e0), k0) = contrast(&zero);
        let ((z1, e1), k1) = contrast(&one);
        let ((c, ec), kx) = contrast(&plus);
        for (k, label) in [(k0.min(k1), "z"), (kx, "x")] {
            if k < cfg.min_survivors {
                res.warnings.push(format!("ladder {label}: N = {n} kept only {k} shots"));
            }
        }
        // Each contrast is taken against its own preparation.
        polarization.push(n as f64, ((z0 + z1) / 2.0, 0.5 * (e0 * e0 + e1 * e1).sqrt()));
        coherence.push(n as f64, (c, ec));
        kept_z.push(n as f64, proportion(k0 + k1, 2 * half));
        kept_x.push(n as f64, proportion(kx, cfg.shots_per_point));
    }

    let p1 = tail_fit(&mut res, "polarization", &polarization, cfg.tail_start)?;
    let p2 = tail_fit(&mut res, "coherence", &coherence, cfg.tail_start)?;
    res.set("p1", p1);
    res.set("p2", p2);
    res.set("p_phi", Estimate::new(p2.value - p1.value / 2.0, (p2.sigma.powi(2) + (p1.sigma / 2.0).powi(2)).sqrt()));
    if coherence.x.len() >= 2 {
        let gain = coherence.y[1] - coherence.y[0];
        let sigma = coherence.yerr[1].hypot(coherence.yerr[0]);
        res.set("coherence_gain_first_checks", Estimate::new(gain, sigma));
    }
    res.curves.insert("polarization".into(), polarization);
    res.curves.insert("coherence".into(), coherence);
    res.curves.insert("postselection_z".into(), kept_z);
    res.curves.insert("postselection_x".into(), kept_x);
    Ok(res)
}

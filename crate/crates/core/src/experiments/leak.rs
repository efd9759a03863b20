//! Trade-off between erasure and residual error under circular classification.
//!
//! Leaked states produce resonator responses off the logical/erased axis that
//! the midpoint threshold mostly accepts. A check is accepted only if the
//! threshold reports logical and the point also lies inside a circle around the
//! logical mean; shrinking the circle catches more leakage at the cost of more
//! false positives, and an infinite radius recovers the threshold alone.

use super::*;
use crate::classifier::{classify_binary, BinaryLabel};

use super::ilrb::{curves, fit_pair, per_check, rb_shot, tally, RbShot};

struct ShotSummary {
    threshold_flag: bool,
    /// Largest distance of any check point from the logical mean, in logical std.
    max_distance: f64,
    success: bool,
    leaked: bool,
}

impl ShotSummary {
    fn passes(&self, radius: f64) -> bool {
        !self.threshold_flag && self.max_distance <= radius
    }
}

impl super::ilrb::Outcome for ShotSummary {
    fn success(&self) -> bool {
        self.success
    }
}

fn radius_label(r: f64) -> String {
    if r.is_finite() {
        format!("r{r}")
    } else {
        "rinf".to_string()
    }
}

/// Interleaved RB postselected on every check, reclassified with each radius.
pub fn run_leak_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.radii.is_empty() || cfg.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument { name: "radii", reason: "must be nonempty and positive".into() });
    }
    let (base, cal) = check_classifier(cfg)?;
    let mut res = ExperimentResult::default();
    record_calibration(&mut res, &cal, cfg.calibration_shots);

    // A shot passes at radius r iff every check passes the threshold and its
    // farthest point from the logical mean lies within r, so each shot reduces
    // to a few numbers regardless of how many radii are swept.
    let summarize = |s: RbShot| ShotSummary {
        threshold_flag: s.points.iter().any(|p| classify_binary(*p, &base) == BinaryLabel::Erased),
        max_distance: s.points.iter().map(|p| (p - base.center).norm() / base.logical_std).fold(0.0, f64::max),
        success: s.success,
        leaked: s.leaked,
    };
    let mut reference: Vec<Vec<ShotSummary>> = vec![];
    let mut interleaved: Vec<Vec<ShotSummary>> = vec![];
    for &m in &cfg.lengths {
        reference.push(par_shots(cfg.shots_per_point, |s| rb_shot(cfg, m, false, s).map(summarize))?);
        interleaved.push(par_shots(cfg.shots_per_point, |s| rb_shot(cfg, m, true, s).map(summarize))?);
    }

    let leaked: Vec<&ShotSummary> = interleaved.iter().flatten().filter(|s| s.leaked).collect();
    let flag_fraction = |flagged: &dyn Fn(&ShotSummary) -> bool| {
        proportion(leaked.iter().filter(|s| flagged(s)).count(), leaked.len())
    };
    res.set("leaked_shots", Estimate::new(leaked.len() as f64, (leaked.len() as f64).sqrt()));
    let (f, e) = flag_fraction(&|s| s.threshold_flag);
    res.set("leak_flagged_binary", Estimate::new(f, e));

    let mut erasure = Curve::default();
    let mut residual = Curve::default();
    let mut flagged = Curve::default();
    let n = cfg.min_survivors;
    for &r in &cfg.radii {
        let label = radius_label(r);
        let clean = |s: &ShotSummary| s.passes(r);
        let (f, e) = flag_fraction(&|s| !clean(s));
        res.set(&format!("leak_flagged_{label}"), Estimate::new(f, e));
        flagged.push(r, (f, e));

        let ref_t: Vec<_> = reference.iter().map(|v| tally(v, clean)).collect();
        let int_t: Vec<_> = interleaved.iter().map(|v| tally(v, clean)).collect();
        let fitted = fit_pair(&mut res, &format!("reference_{label}"), &curves(&cfg.lengths, &ref_t, n), n)
            .and_then(|a| Ok((a, fit_pair(&mut res, &format!("interleaved_{label}"), &curves(&cfg.lengths, &int_t, n), n)?)));
        match fitted {
            Ok((a, b)) => {
                per_check(&mut res, &format!("_{label}"), (a.0, b.0), (a.1, b.1));
                let er = res.derived[&format!("erasure_per_check_{label}")];
                let re = res.derived[&format!("residual_per_check_{label}")];
                erasure.push(r, (er.value, er.sigma));
                residual.push(r, (re.value, re.sigma));
            }
            Err(e) => res.warnings.push(format!("radius {r}: {e}")),
        }
    }
    res.curves.insert("erasure_vs_radius".into(), erasure);
    res.curves.insert("residual_vs_radius".into(), residual);
    res.curves.insert("leak_flagged_vs_radius".into(), flagged);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_labels() {
        assert_eq!(radius_label(3.0), "r3");
        assert_eq!(radius_label(2.5), "r2.5");
        assert_eq!(radius_label(f64::INFINITY), "rinf");
    }

    #[test]
    fn pass_requires_threshold_and_circle() {
        let s = |threshold_flag, max_distance| ShotSummary { threshold_flag, max_distance, success: true, leaked: false };
        assert!(s(false, 2.0).passes(3.0));
        assert!(!s(false, 4.0).passes(3.0));
        assert!(s(false, 4.0).passes(f64::INFINITY));
        assert!(!s(true, 0.0).passes(f64::INFINITY));
    }

    #[test]
    fn zero_radius_is_rejected() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::LeakSweep, SystemParams::device());
        cfg.radii = vec![0.0];
        assert!(matches!(run_leak_sweep(&cfg), Err(Error::InvalidArgument { name: "radii", .. })));
    }
}

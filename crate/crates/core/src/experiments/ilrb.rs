//! Interleaved randomized benchmarking of the erasure check.

use num_complex::Complex64;

use super::*;
use crate::classifier::{classify_binary, BinaryLabel};
use crate::clifford::{compose, generate_sequence, CliffordElement, Interleave};
use crate::fitting::{ilrb_error_from_decays, rb_error_from_decay};

pub(crate) struct RbShot {
    pub points: Vec<Complex64>,
    pub kinds: Vec<CheckKind>,
    pub success: bool,
    pub leaked: bool,
}

const TAG_REF: u64 = 0x1F00;
const TAG_INT: u64 = 0x1F01;

/// One reference or interleaved sequence of length `m`, ending with a check
/// and an ideal readout of the target state.
pub(crate) fn rb_shot(cfg: &ExperimentConfig, m: usize, interleaved: bool, shot: usize) -> Result<RbShot> {
    let tag = if interleaved { TAG_INT } else { TAG_REF };
    let index = ((m as u64) << 32) | shot as u64;
    let seed = rng::derive(cfg.seed, tag, index);
    let seq = generate_sequence(m, rng::derive(seed, 0x5E0, 0), interleaved.then_some(Interleave::ErasureCheck), cfg.check_every)?;
    let target_one = cfg.symmetrize && shot % 2 == 1;
    let recovery = if target_one { compose(seq.recovery, CliffordElement::x()) } else { seq.recovery };

    let mut b = Builder::default();
    let mut next_check = seq.check_positions.iter().peekable();
    for (i, &e) in seq.elements.iter().enumerate() {
        b.push(Segment::gate(e));
        if interleaved {
            b.check(CheckKind::Interleaved, &cfg.timing, true, true);
        }
        if next_check.peek() == Some(&&(i + 1)) {
            next_check.next();
            b.check(CheckKind::Common, &cfg.timing, true, false);
        }
    }
    b.push(Segment::gate(recovery));
    b.check(CheckKind::EndOfLine, &cfg.timing, true, false);
    let kinds = b.kinds.clone();
    let tl = b.into_timeline(seed, DualRailState::Logical(Bloch::ZERO_L), cfg.dt);
    let res = simulate_shot(&tl, &cfg.params, &cfg.injected)?;
    Ok(RbShot {
        success: draw(seed, z_success(&res.final_state, target_one)),
        leaked: res.contains(crate::trajectory::Event::LeakJump),
        points: res.points,
        kinds,
    })
}

/// Counts for one length under a given postselection rule.
pub(crate) struct Tally {
    pub kept: usize,
    pub total: usize,
    pub survived: usize,
}

/// Anything carrying a final readout outcome.
pub(crate) trait Outcome {
    fn success(&self) -> bool;
}

impl Outcome for RbShot {
    fn success(&self) -> bool {
        self.success
    }
}

pub(crate) fn tally<S: Outcome>(shots: &[S], accept: impl Fn(&S) -> bool) -> Tally {
    let mut t = Tally { kept: 0, total: shots.len(), survived: 0 };
    for s in shots.iter().filter(|s| accept(s)) {
        t.kept += 1;
        t.survived += s.success() as usize;
    }
    t
}

/// Postselection and survival curves for a family of tallies.
pub(crate) struct CurvePair {
    pub post: Curve,
    pub surv: Curve,
    pub dropped: Vec<usize>,
}

pub(crate) fn curves(lengths: &[usize], tallies: &[Tally], min_survivors: usize) -> CurvePair {
    let mut cp = CurvePair { post: Curve::default(), surv: Curve::default(), dropped: vec![] };
    for (&m, t) in lengths.iter().zip(tallies) {
        cp.post.push(m as f64, proportion(t.kept, t.total));
        if t.kept >= min_survivors {
            cp.surv.push(m as f64, proportion(t.survived, t.kept));
        } else {
            cp.dropped.push(m);
        }
    }
    cp
}

pub(crate) fn fit_pair(res: &mut ExperimentResult, label: &str, cp: &CurvePair, min_survivors: usize) -> Result<(Estimate, Estimate)> {
    for m in &cp.dropped {
        res.warnings.push(format!("{label}: length {m} has fewer than {min_survivors} postselected shots, left out of the survival fit"));
    }
    if cp.surv.x.len() < 4 {
        return Err(Error::InsufficientSurvivors { curve: label.to_string(), usable: cp.surv.x.len(), min_survivors });
    }
    let post = fit_curve(&cp.post, 0.0)?;
    let surv = fit_curve(&cp.surv, 0.5)?;
    for (kind, f) in [("postselection", &post), ("survival", &surv)] {
        for flag in &f.flags {
            res.warnings.push(format!("{label} {kind} fit: {flag}"));
        }
    }
    let out = (decay(&post), decay(&surv));
    res.curves.insert(format!("{label}_postselection"), cp.post.clone());
    res.curves.insert(format!("{label}_survival"), cp.surv.clone());
    res.fits.insert(format!("{label}_postselection"), post);
    res.fits.insert(format!("{label}_survival"), surv);
    Ok(out)
}

/// Converts decay parameters into per-check erasure and residual errors.
pub(crate) fn per_check(res: &mut ExperimentResult, suffix: &str, post: (Estimate, Estimate), surv: (Estimate, Estimate)) {
    let erasure = loss_ratio(post.1, post.0);
    let loss = loss_ratio(surv.1, surv.0);
    let residual = Estimate::new(ilrb_error_from_decays(surv.1.value, surv.0.value), loss.sigma / 2.0);
    res.set(&format!("erasure_per_check{suffix}"), erasure);
    res.set(&format!("residual_per_check{suffix}"), residual);
    let bias = erasure.value / residual.value;
    let rel = ((erasure.sigma / erasure.value).powi(2) + (residual.sigma / residual.value).powi(2)).sqrt();
    res.set(&format!("noise_bias{suffix}"), Estimate::new(bias, bias.abs() * rel));
}

/// Reference and check-interleaved RB with erasure postselection.
///
/// Common checks and the end-of-line check define the main postselection.
/// The `_all_checks` variant additionally discards shots flagged by the
/// interleaved checks.
pub fn run_ilrb(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (classifier, cal) = check_classifier(cfg)?;
    let mut res = ExperimentResult::default();
    record_calibration(&mut res, &cal, cfg.calibration_shots);

    let flagged = |s: &RbShot, include_interleaved: bool| {
        s.points.iter().zip(&s.kinds).any(|(p, k)| {
            (include_interleaved || *k != CheckKind::Interleaved) && classify_binary(*p, &classifier) == BinaryLabel::Erased
        })
    };
    let mut ref_t = vec![];
    let mut int_t = vec![];
    let mut all_t = vec![];
    for &m in &cfg.lengths {
        let r = par_shots(cfg.shots_per_point, |s| rb_shot(cfg, m, false, s))?;
        ref_t.push(tally(&r, |s| !flagged(s, false)));
        let i = par_shots(cfg.shots_per_point, |s| rb_shot(cfg, m, true, s))?;
        int_t.push(tally(&i, |s| !flagged(s, false)));
        all_t.push(tally(&i, |s| !flagged(s, true)));
    }
    let n = cfg.min_survivors;
    let reference = fit_pair(&mut res, "reference", &curves(&cfg.lengths, &ref_t, n), n)?;
    let interleaved = fit_pair(&mut res, "interleaved", &curves(&cfg.lengths, &int_t, n), n)?;
    let all_checks = fit_pair(&mut res, "interleaved_all_checks", &curves(&cfg.lengths, &all_t, n), n)?;

    per_check(&mut res, "", (reference.0, interleaved.0), (reference.1, interleaved.1));
    per_check(&mut res, "_all_checks", (reference.0, all_checks.0), (reference.1, all_checks.1));
    res.set("residual_per_clifford", Estimate::new(rb_error_from_decay(reference.1.value), reference.1.sigma / 2.0));
    res.set("erasure_per_clifford", loss_ratio(reference.0, Estimate::new(1.0, 0.0)));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_sequences_always_survive() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Ilrb, SystemParams::device().frozen());
        cfg.check_every = 3;
        for interleaved in [false, true] {
            for s in 0..8 {
                let shot = rb_shot(&cfg, 7, interleaved, s).unwrap();
                assert!(shot.success);
                let checks = 3 + if interleaved { 7 } else { 0 };
                assert_eq!(shot.points.len(), checks);
            }
        }
    }

    #[test]
    fn too_few_survivors_is_an_error() {
        let t: Vec<Tally> = (0..5).map(|i| Tally { kept: if i < 2 { 100 } else { 3 }, total: 100, survived: 2 }).collect();
        let cp = curves(&[1, 2, 3, 4, 5], &t, 50);
        assert_eq!(cp.dropped, vec![3, 4, 5]);
        let mut res = ExperimentResult::default();
        assert!(matches!(fit_pair(&mut res, "x", &cp, 50), Err(Error::InsufficientSurvivors { usable: 2, .. })));
        assert_eq!(res.warnings.len(), 3);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p dualrail-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use dualrail_core::channel::*;
use dualrail_core::classifier::{calibrate, classify_binary, missed_erasure_fraction, BinaryLabel};
use dualrail_core::dispersive::*;
use dualrail_core::experiments::*;
use dualrail_core::trajectory::{simulate_shot, Segment, ShotTimeline};
use dualrail_core::{hz, Bloch, DualRailState, SystemParams};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn within(e: Estimate, truth: f64, k: f64) -> bool {
    (e.value - truth).abs() <= k * e.sigma
}

fn est(e: Estimate) -> String {
    format!("{:.3e} ± {:.1e}", e.value, e.sigma)
}

fn separation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let mut pass = true;
    let mut parts = vec![];
    for (snr, anchor, half_unit) in [(11.6, 0.008, 0.0005), (16.1, 0.0023, 0.00005), (19.0, 0.001, 0.0005)] {
        // Unit variance per quadrature: SNR = d²/2.
        let d = (2.0f64 * snr).sqrt();
        let mut cloud = |x0: f64| -> Vec<Complex64> {
            (0..n).map(|_| Complex64::new(x0 + rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))).collect()
        };
        let (logical, erased) = (cloud(0.0), cloud(d));
        let cfg = calibrate(&logical, &erased).unwrap();
        let wrong = logical.iter().filter(|p| classify_binary(**p, &cfg) == BinaryLabel::Erased).count()
            + erased.iter().filter(|p| classify_binary(**p, &cfg) == BinaryLabel::Logical).count();
        let total = 2 * n;
        let measured = wrong as f64 / total as f64;
        let expected = separation_error(snr).unwrap();
        let sigma = (expected * (1.0 - expected) / total as f64).sqrt();
        let ok = (measured - expected).abs() < 3.0 * sigma && (expected - anchor).abs() < half_unit;
        pass &= ok;
        parts.push(format!("SNR {snr}: MC {:.4}% vs {:.4}% (anchor {:.2}%)", 100.0 * measured, 100.0 * expected, 100.0 * anchor));
    }
    Outcome::new(pass, parts.join("; "))
}

/// RK4 integration of `dα/dt = −iε − (κ/2 + iΔ)α` from an empty cavity.
fn ode_field(eps: f64, kappa: f64, delta: f64, horizon: f64) -> Complex64 {
    let steps = 40_000;
    let h = horizon / steps as f64;
    let f = |a: Complex64| Complex64::new(0.0, -eps) - Complex64::new(kappa / 2.0, delta) * a;
    let mut a = Complex64::new(0.0, 0.0);
    for _ in 0..steps {
        let k1 = f(a);
        let k2 = f(a + k1 * (h / 2.0));
        let k3 = f(a + k2 * (h / 2.0));
        let k4 = f(a + k3 * h);
        a += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    }
    a
}

fn steady_state() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = SystemParams::device();
        p.kappa_gg = hz(rng.random_range(2e6..20e6));
        p.chi = -hz(rng.random_range(0.5e6..10e6));
        p.chi_dr = p.chi * rng.random_range(-1e-2..1e-2);
        p.drive_detuning = hz(rng.random_range(-20e6..20e6));
        p.drive_amp = hz(rng.random_range(0.5e6..5e6));
        let s = steady_states(&p);
        let (d0, d1, dgg) = sector_detunings(&p);
        for (alpha, delta) in [(s.alpha_0, d0), (s.alpha_1, d1), (s.alpha_gg, dgg)] {
            let ode = ode_field(p.drive_amp, p.kappa_gg, delta, 40.0 / p.kappa_gg);
            worst = worst.max((ode - alpha).norm() / alpha.norm());
        }
    }
    Outcome::new(worst < 1e-6, format!("worst relative deviation {worst:.2e} over 20 sets × 3 sectors"))
}

/// Ensemble `|⟨X + iY⟩|` after a constant probe of length `t`, with its 1σ error.
fn probe_coherence(p: &SystemParams, t: f64, shots: u64) -> (f64, f64) {
    let (mut sx, mut sy, mut sxx) = (0.0, 0.0, 0.0);
    for s in 0..shots {
        let mut tl = ShotTimeline::new(vec![Segment::probe_on(t)], s, DualRailState::Logical(Bloch::PLUS_L));
        tl.prefill = true;
        let r = simulate_shot(&tl, p, &ErrorChannelParams::NONE).unwrap();
        let DualRailState::Logical(b) = r.final_state else { panic!("frozen shot left the logical subspace") };
        sx += b.x();
        sy += b.y();
        sxx += b.x() * b.x() + b.y() * b.y();
    }
    let n = shots as f64;
    let c = Complex64::new(sx / n, sy / n).norm();
    (c, ((sxx / n - c * c).max(0.0) / n).sqrt())
}

fn dephasing() -> Outcome {
    let mut p = SystemParams::device().frozen();
    p.chi_dr = 0.05 * p.chi;
    let unit = SystemParams { drive_amp: 1.0, ..p };
    let gamma_unit = dephasing_rate_with_kappa(&unit, p.kappa_logical);
    let t = 2e-6;
    // Γ·T = 0.5 at the end of the probe.
    p.drive_amp = (0.5 / (gamma_unit * t)).sqrt();
    let gamma = dephasing_rate_with_kappa(&p, p.kappa_logical);
    let shots = 10_000;
    let mut pass = true;
    let mut parts = vec![];
    for frac in [0.5, 1.0] {
        let (c, e) = probe_coherence(&p, frac * t, shots);
        let expected = (-gamma * frac * t).exp();
        pass &= (c - expected).abs() < 3.0 * e;
        parts.push(format!("T = {:.1} µs: {c:.4} ± {e:.4} vs e^(-ΓT) = {expected:.4}", frac * t * 1e6));
    }
    let (c0, _) = probe_coherence(&SystemParams { chi_dr: 0.0, ..p }, t, shots);
    pass &= c0 == 1.0;
    parts.push(format!("χ_DR = 0: {c0}"));
    Outcome::new(pass, parts.join("; "))
}

fn optimal_detuning_check() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    let k = hz(10e6);
    let at = |s: f64| SystemParams { kappa_gg: k, chi: -s * k / 2.0, chi_dr: -1e-2 * s * k / 2.0, eta_eff: 0.2, ..SystemParams::device() };
    let prefactor = 19.0 / (12.0 * 0.2) * 1e-4;

    let mut worst: f64 = 0.0;
    for s in [0.3, 1.0, 3.0, 10.0] {
        let p = at(s);
        let (_, arg) = optimize_detuning_numeric(19.0, &p).unwrap();
        let closed = p.chi.signum() * (k / 2.0).hypot(p.chi);
        worst = worst.max(rel(arg, closed));
    }
    pass &= worst < 1e-6;
    parts.push(format!("Δ_min worst rel {worst:.1e}"));

    let factor = |s: f64| optimize_detuning_numeric(19.0, &at(s)).unwrap().0 / prefactor;
    let (small, unit) = (factor(1e-7), factor(1.0));
    let target_unit = (2f64.sqrt() - 1.0).powi(2);
    pass &= rel(small, 1.0) < 1e-6 && rel(unit, target_unit) < 1e-6;
    parts.push(format!("factor(s→0) = {small:.9}, factor(1) = {unit:.9} vs {target_unit:.9}"));

    // The numeric bracket ±10κ contains the optimum only up to s ≈ 20; the
    // limit itself is taken on the exact minimum.
    let s = 1e6;
    let limit = bracket_factor(s);
    let half = (1.0 / s).powi(2) / 2.0;
    let quarter = (1.0 / s).powi(2) / 4.0;
    let large_ok = rel(limit, half) < 1e-6;
    pass &= large_ok;
    parts.push(format!(
        "factor(s=1e6)·s² = {:.6} vs quoted 1/2 ({}), 1/4 form rel {:.1e}; numeric s=10: {:.6}",
        limit * s * s,
        if large_ok { "ok" } else { "off by 2" },
        rel(limit, quarter),
        factor(10.0) * 100.0
    ));

    let example = min_dephasing_error(19.0, &at(1.0)).unwrap().asymptotic;
    pass &= (example - 4e-4).abs() < 0.5e-4;
    parts.push(format!("worked example {example:.3e}"));
    Outcome::new(pass, parts.join("; "))
}

type M = Matrix2<Complex64>;

fn kraus_fidelity(ch: &ErrorChannelParams) -> f64 {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let paulis = [M::new(l, o, o, l), M::new(o, l, l, o), M::new(o, -i, i, o), M::new(l, o, o, -l)];
    let q = ch.pauli();
    let w = [1.0 - q.total(), q.px, q.py, q.pz];
    let sum: f64 = paulis.iter().zip(w).map(|(s, w)| (s * c(w.sqrt(), 0.0)).trace().norm_sqr()).sum();
    (1.0 + sum / 2.0) / 3.0
}

fn channel_algebra() -> Outcome {
    let ch = ErrorChannelParams::new(2.8e-4, 8e-5).unwrap();
    let (mut z, mut x) = ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
    let mut worst_n: f64 = 0.0;
    for n in 1..=1000 {
        z = apply_check(z, &ch);
        x = apply_check(x, &ch);
        worst_n = worst_n.max((z[2] - (1.0 - ch.p1).powi(n)).abs()).max((x[0] - (1.0 - ch.p1 / 2.0 - ch.p_phi).powi(n)).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_k: f64 = 0.0;
    for _ in 0..100 {
        let r = ErrorChannelParams::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.5)).unwrap();
        worst_k = worst_k.max((kraus_fidelity(&r) - avg_fidelity(&r)).abs());
    }
    let p_phi = extract_p_phi(2.2e-4, 2.8e-4).unwrap();
    let infidelity = 1.0 - avg_fidelity(&ErrorChannelParams::new(2.8e-4, p_phi).unwrap());
    let pass = worst_n < 1e-12 && worst_k < 1e-14 && (p_phi - 8e-5).abs() < 1e-18 && (infidelity - 1.2e-4).abs() < 1e-15;
    Outcome::new(
        pass,
        format!("N-fold worst {worst_n:.1e}; Kraus worst {worst_k:.1e}; pφ = {p_phi:.3e}; infidelity = {infidelity:.4e}"),
    )
}

/// Mean erasure probability over one check window with the probe degrading the
/// erasure rate by `deg`, averaged over the cardinal states reached by random Cliffords.
fn check_erasure(p: &SystemParams, deg: f64) -> f64 {
    let t = 384e-9 * deg + 112e-9;
    [(1.0, 1.0 / 6.0), (-1.0, 1.0 / 6.0), (0.0, 2.0 / 3.0)]
        .iter()
        .map(|&(z, w)| {
            let w0 = (1.0 + z) / 2.0;
            let gamma = w0 / p.t_erasure_0l + (1.0 - w0) / p.t_erasure_1l;
            w * (1.0 - (-gamma * t).exp())
        })
        .sum()
}

fn ilrb() -> Outcome {
    let mut p = SystemParams::device();
    let (mut lo, mut hi) = (1.0, 4.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if check_erasure(&p, mid) < 2.54e-2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    p.readout_degradation = 0.5 * (lo + hi);
    // Residual per check = idle T1 + idle Tφ + echo X + p1/3 + pφ/3.
    let t_check = 496e-9;
    let p1 = 2.8e-4;
    let rest = 6.0e-4 - t_check / (3.0 * p.t1_logical) - t_check / (3.0 * p.t_phi_logical) - 2.0 * p.x90_error - p1 / 3.0;
    let mut cfg = ExperimentConfig::new(ExperimentKind::Ilrb, p);
    cfg.injected = ErrorChannelParams::new(p1, 3.0 * rest).unwrap();
    cfg.shots_per_point = 2000;
    let r = run_ilrb(&cfg).unwrap();
    let (er, re) = (r.derived("erasure_per_check").unwrap(), r.derived("residual_per_check").unwrap());
    let mut pass = within(er, 2.54e-2, 2.0) && within(re, 6.0e-4, 2.0);
    let mut detail = format!(
        "deg {:.4}, pφ {:.3e}: erasure {} (2.54e-2), residual {} (6.0e-4)",
        cfg.params.readout_degradation,
        cfg.injected.p_phi,
        est(er),
        est(re)
    );

    // Fast seepage episodes give the interleaved checks something to remove.
    cfg.params.fast_reheat_prob = 0.3;
    cfg.params.t_fast_reheat = 3e-6;
    let r = run_ilrb(&cfg).unwrap();
    let (er, re) = (r.derived("erasure_per_check").unwrap(), r.derived("residual_per_check").unwrap());
    let (era, rea) = (r.derived("erasure_per_check_all_checks").unwrap(), r.derived("residual_per_check_all_checks").unwrap());
    pass &= rea.value < re.value && era.value > er.value;
    detail.push_str(&format!(
        "; with seepage, interleaved postselection: residual {} -> {} (5.4e-4), erasure {} -> {} (3.12e-2)",
        est(re),
        est(rea),
        est(er),
        est(era)
    ));
    Outcome::new(pass, detail)
}

fn ladders() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::InducedDephasing, SystemParams::device());
    cfg.injected = ErrorChannelParams::new(2.8e-4, 8e-5).unwrap();
    cfg.shots_per_point = 300_000;
    let r = run_induced_ladders(&cfg).unwrap();
    let (p1, p2) = (r.derived("p1").unwrap(), r.derived("p2").unwrap());
    let gain = r.derived("coherence_gain_first_checks").unwrap();
    let first = r.curves["coherence"].x[1];
    let pass = within(p1, 2.8e-4, 2.0) && within(p2, 2.2e-4, 2.0) && gain.value > 0.0;
    Outcome::new(pass, format!("p1 {} (2.8e-4), p2 {} (2.2e-4), coherence(N={first}) − coherence(0) = {}", est(p1), est(p2), est(gain)))
}

fn continuous() -> Outcome {
    let mut p = SystemParams::device();
    p.drive_amp = continuous_drive(&p, 480e-9, 16.1).unwrap();
    let windows: Vec<f64> = (1..=8).map(|k| 60e-9 * k as f64).collect();
    let c = snr_vs_window(&p, &windows, 20_000, 0.5e-9, 8).unwrap();
    let n = c.x.len() as f64;
    let (mx, my) = (c.x.iter().sum::<f64>() / n, c.y.iter().sum::<f64>() / n);
    let sxy: f64 = c.x.iter().zip(&c.y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = c.x.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = c.y.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let last = *c.y.last().unwrap();
    let mut pass = r2 > 0.999 && rel(last, 16.1) < 0.05;
    let mut detail = format!("R² = {r2:.5}; SNR(480 ns) = {last:.2} (16.1)");

    let mut rp = p;
    rp.x90_error = (1.3e-4 - 48e-9 / (3.0 * p.t1_logical) - 48e-9 / (3.0 * p.t_phi_logical)) / 2.0;
    let mut cfg = ExperimentConfig::new(ExperimentKind::ContinuousRb, rp);
    cfg.shots_per_point = 20_000;
    cfg.record_exports = 0;
    let r = run_continuous_rb(&cfg).unwrap();
    let e = r.derived("residual_per_clifford").unwrap();
    pass &= within(e, 1.3e-4, 2.0);
    detail.push_str(&format!("; residual per Clifford {} (1.3e-4), per X90 {:.2e}", est(e), e.value / 2.0));

    // Faster reheating makes the two postselections differ measurably.
    cfg.params = SystemParams { t_heat: 100e-6, ..p };
    cfg.shots_per_point = 4000;
    let r = run_continuous_rb(&cfg).unwrap();
    let (ws, es) = (&r.curves["windowed_survival"], &r.curves["eol_only_survival"]);
    let dominated = (0..ws.x.len()).all(|i| ws.y[i] >= es.y[i] - 2.0 * ws.yerr[i].hypot(es.yerr[i]));
    let gaps: Vec<f64> = (0..ws.x.len()).map(|i| ws.y[i] - es.y[i]).collect();
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
    pass &= dominated;
    detail.push_str(&format!("; windowed − EOL-only survival in [{lo:.4}, {hi:.4}] over {} depths", ws.x.len()));
    Outcome::new(pass, detail)
}

fn scalars() -> Outcome {
    let rows = [
        ("Idling T1", "T_m/3T1", 7.7e-5),
        ("Idling T_phi", "T_m/3T_phi", 1.11e-4),
        ("Echo X gate", "2 eps_X90", 1.8e-4),
        ("Induced bit-flip", "p1/3", 9.3e-5),
        ("Induced pure dephasing", "p_phi/3", 2.7e-5),
    ];
    let budget = build_budget(rows.iter().map(|(l, e, v)| BudgetEntry::new(l, e, *v)).collect(), Some(6.0e-4)).unwrap();
    let total = format!("{:.1e}", budget.accounted());
    let bias = noise_bias(2.54e-2, 6.0e-4).unwrap();
    let missed = missed_erasure_fraction(5, 0.0254, 0.0089).unwrap();
    let t_heat = heating_time(30e-6, 0.0023).unwrap();
    let pass = total == "4.9e-4" && format!("{bias:.1}") == "42.3" && format!("{:.2}", 100.0 * missed) == "0.11" && rel(t_heat, 13e-3) < 0.1;
    Outcome::new(pass, format!("budget {total}; bias {bias:.2}; missed {:.3}%; T_heat {:.2} ms", 100.0 * missed, t_heat * 1e3))
}

fn leak_sweep() -> Outcome {
    let mut p = SystemParams::device();
    p.mist_prob_per_check = 0.01;
    let mut cfg = ExperimentConfig::new(ExperimentKind::LeakSweep, p);
    cfg.shots_per_point = 50_000;
    let r = run_leak_sweep(&cfg).unwrap();
    let (er, re) = (&r.curves["erasure_vs_radius"], &r.curves["residual_vs_radius"]);
    let n = er.x.len();
    let mut pass = n == cfg.radii.len();
    for i in 1..n {
        pass &= re.y[i] >= re.y[i - 1] - 2.0 * re.yerr[i].hypot(re.yerr[i - 1]);
        pass &= er.y[i] <= er.y[i - 1] + 2.0 * er.yerr[i].hypot(er.yerr[i - 1]);
    }
    // The ends of the sweep must differ, not merely be consistent.
    pass &= re.y[n - 1] - re.y[0] > 2.0 * re.yerr[n - 1].hypot(re.yerr[0]);
    pass &= er.y[0] - er.y[n - 1] > 2.0 * er.yerr[n - 1].hypot(er.yerr[0]);
    let flagged = r.derived("leak_flagged_r3").unwrap();
    pass &= flagged.value >= 0.9;
    let fmt = |c: &Curve| c.y.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" ");
    Outcome::new(pass, format!("radii {:?}: residual [{}], erasure [{}]; leaked flagged at 3σ {:.3}", cfg.radii, fmt(re), fmt(er), flagged.value))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("separation error", separation),
        ("steady state", steady_state),
        ("probe dephasing", dephasing),
        ("optimal detuning", optimal_detuning_check),
        ("channel algebra", channel_algebra),
        ("ILRB closed loop", ilrb),
        ("induced ladders", ladders),
        ("continuous detection", continuous),
        ("scalar reproductions", scalars),
        ("leakage sweep", leak_sweep),
    ];
    let filter: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !filter.is_empty() && !filter.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("criterion {k:>2} {verdict}: {name} [{:.1} s] {}", start.elapsed().as_secs_f64(), o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! Closed-form readout physics against independent numerical oracles.

use dualrail_core::dispersive::*;
use dualrail_core::{hz, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let mut p = SystemParams::device();
    p.kappa_gg = hz(rng.random_range(2e6..20e6));
    p.chi = -hz(rng.random_range(0.5e6..10e6));
    p.chi_dr = p.chi * rng.random_range(-1e-2..1e-2);
    p.drive_detuning = hz(rng.random_range(-20e6..20e6));
    p.drive_amp = hz(rng.random_range(0.5e6..5e6));
    p.eta_eff = rng.random_range(0.05..0.5);
    p
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn steady_states_match_time_domain_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let s = steady_states(&p);
        let (d0, d1, dgg) = sector_detunings(&p);
        for (alpha, delta) in [(s.alpha_0, d0), (s.alpha_1, d1), (s.alpha_gg, dgg)] {
            let ode = ode_field(p.drive_amp, p.kappa_gg, delta, 40.0 / p.kappa_gg);
            assert!((ode - alpha).norm() / alpha.norm() < 1e-6, "{ode} vs {alpha}");
        }
    }
}

#[test]
fn gg_photon_number_from_ode() {
    let k = hz(10e6);
    let p = SystemParams { kappa_gg: k, drive_amp: k, drive_detuning: 0.0, chi: k / 2.0, chi_dr: 0.0, ..SystemParams::device() };
    let (_, _, dgg) = sector_detunings(&p);
    let n = ode_field(p.drive_amp, k, dgg, 40.0 / k).norm_sqr();
    assert!((n - 2.0).abs() < 1e-6);
    assert!((steady_states(&p).n_gg - 2.0).abs() < 1e-12);
}

#[test]
fn optimal_photon_ratio_from_amplitudes() {
    let k = hz(8e6);
    let p = SystemParams { kappa_gg: k, chi: k / 2.0, chi_dr: 0.0, drive_detuning: -(2f64).sqrt() * k / 2.0, drive_amp: k, ..SystemParams::device() };
    let s = steady_states(&p);
    let closed = (1.0 + (2f64.sqrt() + 1.0).powi(2)) / (1.0 + (2f64.sqrt() - 1.0).powi(2));
    assert!(rel(photon_ratio(&p), closed) < 1e-12);
    assert!(rel(s.alpha_0.norm_sqr() / s.n_gg, closed) < 1e-12);
}

#[test]
fn measurement_rate_closed_form_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        assert!(rel(measurement_rate(&p), measurement_rate_closed_form(&p)) < 1e-9);
        assert!(rel(dephasing_rate(&p), dephasing_rate_closed_form(&p)) < 1e-9);
    }
}

#[test]
fn device_drive_round_trips_through_the_rate() {
    let p = SystemParams::device();
    let eps = drive_for_snr(&p, 11.6, 384e-9).unwrap();
    assert!(rel(eps, p.drive_amp) < 1e-12);
    // Independent inversion: the rate scales as ε², so one evaluation at unit drive fixes ε.
    let unit = measurement_rate_closed_form(&SystemParams { drive_amp: 1.0, ..p });
    assert!(rel((11.6 / (unit * 384e-9)).sqrt(), eps) < 1e-9);
    assert!(rel(measurement_rate(&p) * 384e-9, 11.6) < 1e-12);
}

#[test]
fn small_mismatch_approximation_matches_expansion() {
    // approx/exact − 1 = 2r²(a² − D²)/(a² + D²)² + O(r⁴) with a = κ/2, D = Δ_d + χ, r = χ_DR.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let p = random_params(&mut rng);
        let (a2, d2, r2) = ((p.kappa_gg / 2.0).powi(2), (p.drive_detuning + p.chi).powi(2), p.chi_dr.powi(2));
        let leading = 2.0 * r2 * (a2 - d2) / (a2 + d2).powi(2);
        let actual = dephasing_rate_approx(&p) / dephasing_rate(&p) - 1.0;
        assert!((actual - leading).abs() < 1e-3 * leading.abs() + 1e-12, "{actual} vs {leading}");
    }
}

#[test]
fn small_mismatch_approximation_at_gg_resonance() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let mut p = random_params(&mut rng);
        p.drive_detuning = p.chi;
        let bound = (p.chi_dr / p.chi).powi(2);
        assert!(rel(dephasing_rate_approx(&p), dephasing_rate(&p)) <= bound);
    }
}

#[test]
fn numeric_minimum_matches_closed_form() {
    for two_chi_over_kappa in [0.3, 1.0, 3.0] {
        let k = hz(10e6);
        let chi = -two_chi_over_kappa * k / 2.0;
        let p = SystemParams { kappa_gg: k, chi, chi_dr: 1e-2 * chi, eta_eff: 0.2, ..SystemParams::device() };
        let (value, arg) = optimize_detuning_numeric(19.0, &p).unwrap();
        let closed = min_dephasing_error(19.0, &p).unwrap();
        assert!(rel(value, closed.value) < 1e-6);
        assert!((arg - closed.optimal_detuning).abs() < 1e-4 * k);
    }
}

#[test]
fn worked_example_exact_branch() {
    let k = hz(10e6);
    let chi = -k / 2.0;
    let p = SystemParams { kappa_gg: k, chi, chi_dr: 1e-2 * chi, eta_eff: 0.2, ..SystemParams::device() };
    let (value, _) = optimize_detuning_numeric(19.0, &p).unwrap();
    let expected = 19.0 / (12.0 * 0.2) * 1e-4 * (2f64.sqrt() - 1.0).powi(2);
    assert!(rel(value, expected) < 1e-6);
    assert!((value - 1.36e-4).abs() < 0.01e-4);
}

#[test]
fn resolved_regime_minimum_approaches_quarter_form() {
    // 2|χ|/κ = 10: the exact bracket tends to (κ/2χ)²/4.
    let k = hz(2e6);
    let chi = -5.0 * k;
    let p = SystemParams { kappa_gg: k, chi, chi_dr: 1e-2 * chi, eta_eff: 0.2, ..SystemParams::device() };
    let (value, _) = optimize_detuning_numeric(19.0, &p).unwrap();
    let pre = 19.0 / (12.0 * 0.2) * 1e-4;
    let quarter = pre * (k / (2.0 * chi)).powi(2) / 4.0;
    assert!(rel(value, quarter) < 0.01);
}

#[test]
fn separation_error_matches_gaussian_overlap() {
    // Two unit-variance Gaussians a distance d apart: SNR = d²/2.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let n = 100_000;
    let wrong = (0..n).filter(|_| rng.sample(normal) > 1.0).count();
    let expected = separation_error(2.0).unwrap();
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((wrong as f64 / n as f64 - expected).abs() < 3.0 * sigma);
}

#[test]
fn stark_calibration_arithmetic() {
    let (shift, n) = stark_photon_number(hz(-4e6), 1.0, 1.0).unwrap();
    assert!((shift - hz(-8e6)).abs() < 1e-6);
    assert_eq!(n, 1.0);
}

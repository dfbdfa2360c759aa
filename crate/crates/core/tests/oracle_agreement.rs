use core::f64::consts::PI;

use g2hbt_core::{
    attenuate, displaced_squeezed, fock_displaced_squeezed, g2_fock, g2_isserlis, g2_tau_gaussian, g2_tau_pure,
    g2_zero_pure, FilterSpec, GaussianState,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Valid mixed states away from the vacuum: purity in [1, 3], n >= 0.01.
fn gaussian_state() -> impl Strategy<Value = GaussianState> {
    (0.05f64..20.0, 1.0f64..3.0, -3.0f64..3.0)
        .prop_map(|(vp, purity, alpha)| GaussianState::new(vp, purity / vp, alpha).unwrap())
        .prop_filter("away from vacuum", |s| s.mean_photon_number() >= 0.01)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn moment_oracle_matches_closed_form(state in gaussian_state(), tau_omega in 0.0f64..3.0 * PI) {
        let f = FilterSpec::normalized();
        let closed = g2_tau_gaussian(&state, &f, tau_omega).unwrap();
        let oracle = g2_isserlis(&state, &f, tau_omega).unwrap();
        prop_assert!(rel(closed, oracle) <= 1e-10, "{closed} vs {oracle}");
    }

    #[test]
    fn loss_invariance(state in gaussian_state(), eta in 0.01f64..=1.0, tau_omega in 0.0f64..3.0 * PI) {
        let f = FilterSpec::normalized();
        let lossy = attenuate(&state, eta).unwrap();
        let g = g2_tau_gaussian(&state, &f, tau_omega).unwrap();
        prop_assert!(rel(g2_tau_gaussian(&lossy, &f, tau_omega).unwrap(), g) <= 1e-10);
        prop_assert!(rel(g2_isserlis(&lossy, &f, tau_omega).unwrap(), g) <= 1e-10);
    }

    #[test]
    fn sinc_zeros_normalise(state in gaussian_state(), k in 1u32..6) {
        let f = FilterSpec::normalized();
        let g = g2_tau_gaussian(&state, &f, k as f64 * PI).unwrap();
        prop_assert!((g - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn pure_formula_matches_general(r in -1.5f64..1.5, alpha in 0.0f64..2.0, tau_omega in 0.0f64..3.0 * PI) {
        prop_assume!(r.abs() > 0.02 || alpha > 0.1);
        let f = FilterSpec::normalized();
        let state = displaced_squeezed(r, alpha).unwrap();
        let p = g2_tau_pure(r, alpha, &f, tau_omega).unwrap();
        let g = g2_tau_gaussian(&state, &f, tau_omega).unwrap();
        prop_assert!(rel(p, g) <= 1e-12, "{p} vs {g}");
    }

    #[test]
    fn coherent_flatline(alpha in 0.01f64..5.0, tau_omega in 0.0f64..20.0) {
        let f = FilterSpec::normalized();
        let s = GaussianState::coherent(alpha).unwrap();
        prop_assert_eq!(g2_tau_gaussian(&s, &f, tau_omega).unwrap(), 1.0);
    }

    #[test]
    fn thermal_identities(v in 1.0001f64..100.0) {
        let f = FilterSpec::normalized();
        let sym = GaussianState::new(v, v, 0.0).unwrap();
        let biased = GaussianState::new(v, 1.0, 0.0).unwrap();
        prop_assert!((g2_tau_gaussian(&sym, &f, 0.0).unwrap() - 2.0).abs() <= 1e-12);
        prop_assert!((g2_tau_gaussian(&biased, &f, 0.0).unwrap() - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn squeezed_vacuum_identity(r in 0.001f64..=2.0) {
        let sh = r.sinh();
        prop_assert!(rel(g2_zero_pure(r, 0.0).unwrap(), 3.0 + 1.0 / (sh * sh)) <= 1e-10);
    }
}

#[test]
fn fock_oracle_matches_pure_formula_on_grid() {
    for i in 0..=24 {
        let r = 0.02 + 0.02 * i as f64;
        for j in 0..=20 {
            let alpha = 0.05 * j as f64;
            let psi = fock_displaced_squeezed(r, alpha, 60).unwrap();
            let fock = g2_fock(&psi).unwrap();
            let closed = g2_zero_pure(r, alpha).unwrap();
            assert!((fock - closed).abs() <= 1e-6, "r={r} a={alpha}: {fock} vs {closed}");
        }
    }
}

#[test]
fn single_mode_and_beamsplitter_forms_agree() {
    let f = FilterSpec::normalized();
    for &(r, alpha) in &[(0.05, 0.25), (0.3, 0.0), (0.5, 1.0), (-0.4, 0.8), (0.0516, 0.287)] {
        let fock = g2_fock(&fock_displaced_squeezed(r, alpha, 60).unwrap()).unwrap();
        let split = g2_isserlis(&displaced_squeezed(r, alpha).unwrap(), &f, 0.0).unwrap();
        assert!((fock - split).abs() <= 1e-9, "r={r} a={alpha}");
    }
}

#[test]
fn large_displacement_approaches_unity_monotonically() {
    let f = FilterSpec::normalized();
    for &(vp, vm) in &[(0.902, 1.137), (12.8, 1.039), (3.0, 3.0)] {
        let g = |a: f64| g2_tau_gaussian(&GaussianState::new(vp, vm, a).unwrap(), &f, 0.0).unwrap();
        let mut prev_gap = f64::INFINITY;
        for k in 0..40 {
            let alpha = 1.0 + k as f64 * 0.5;
            let gap = (g(alpha) - 1.0).abs();
            assert!(gap < prev_gap, "not monotone at alpha = {alpha}");
            prev_gap = gap;
        }
        assert!((g(1e3) - 1.0).abs() < 1e-4);
    }
}

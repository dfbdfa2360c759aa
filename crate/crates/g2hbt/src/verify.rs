//! Self-check suite: the closed-form `g2` against both oracles, plus the
//! exact identities, as a machine-readable report.

use std::f64::consts::PI;

use g2hbt_core::coherence::gaussian_g2_with_coefficients;
use g2hbt_core::{
    attenuate, fock_displaced_squeezed, g2_fock, g2_isserlis, g2_tau_gaussian, g2_zero_pure, sinc, FilterSpec,
    FockVector, GaussianState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Coarse,
    Fine,
}

impl Grid {
    fn random_states(self) -> usize {
        match self {
            Grid::Coarse => 1_000,
            Grid::Fine => 20_000,
        }
    }

    fn fock_step(self) -> (f64, f64) {
        match self {
            Grid::Coarse => (0.02, 0.05),
            Grid::Fine => (0.005, 0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub grid: Grid,
    pub mutated: bool,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

/// Coefficient substituted for the mean-field constant under `mutate`.
pub const MUTATED_COEFFICIENT: f64 = 16.5;

struct Closed {
    mutate: bool,
}

impl Closed {
    fn g2(&self, state: &GaussianState, tau_omega: f64) -> Option<f64> {
        if self.mutate {
            gaussian_g2_with_coefficients(state, sinc(tau_omega), MUTATED_COEFFICIENT, 2.0)
                .ok()
                .map(|e| e.value)
        } else {
            g2_tau_gaussian(state, &FilterSpec::normalized(), tau_omega).ok()
        }
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    max_error: f64,
    failed: bool,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            max_error: 0.0,
            failed: false,
        }
    }

    /// Record one comparison; a missing value counts as a failure.
    fn record(&mut self, error: Option<f64>) {
        self.cases += 1;
        match error {
            Some(e) if e.is_finite() => {
                self.max_error = self.max_error.max(e);
                if e > self.tolerance {
                    self.failed = true;
                }
            }
            _ => {
                self.failed = true;
                self.max_error = f64::INFINITY;
            }
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            passed: !self.failed && self.cases > 0,
            cases: self.cases,
            max_error: self.max_error,
            tolerance: self.tolerance,
        }
    }
}

fn rel(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? - b?).abs() / b?.abs())
}

fn abs(a: Option<f64>, b: f64) -> Option<f64> {
    Some((a? - b).abs())
}

/// Mixed states with purity in `[1, 3]` and mean photon number >= 0.01.
fn random_state(rng: &mut ChaCha8Rng) -> GaussianState {
    loop {
        let vp = rng.random_range(0.05..20.0);
        let purity = rng.random_range(1.0..3.0);
        let alpha = rng.random_range(-3.0..3.0);
        let s = GaussianState::new(vp, purity / vp, alpha).expect("purity >= 1");
        if s.mean_photon_number() >= 0.01 {
            return s;
        }
    }
}

pub fn run_verify(grid: Grid, mutate: bool) -> VerifyReport {
    let closed = Closed { mutate };
    let f = FilterSpec::normalized();
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(0x6732);
    let mut oracle = Tally::new("closed_form_vs_moment_oracle", 1e-10);
    let mut loss = Tally::new("loss_invariance_via_moment_oracle", 1e-10);
    for _ in 0..grid.random_states() {
        let s = random_state(&mut rng);
        let t = rng.random_range(0.0..3.0 * PI);
        let eta = rng.random_range(0.01..=1.0);
        let g = closed.g2(&s, t);
        oracle.record(rel(g, g2_isserlis(&s, &f, t).ok()));
        let lossy = attenuate(&s, eta).expect("eta in range");
        loss.record(rel(g2_isserlis(&lossy, &f, t).ok(), g));
    }
    checks.push(oracle.finish());
    checks.push(loss.finish());

    let (dr, da) = grid.fock_step();
    let mut fock = Tally::new("pure_formula_vs_fock_oracle", 1e-6);
    let nr = ((0.5 - 0.02) / dr).round() as usize;
    let na = (1.0 / da).round() as usize;
    for i in 0..=nr {
        let r = 0.02 + i as f64 * dr;
        for j in 0..=na {
            let alpha = j as f64 * da;
            let psi = fock_displaced_squeezed(r, alpha, 60).ok();
            let gf = psi.as_ref().and_then(|p| g2_fock(p).ok());
            fock.record(rel(gf, g2_zero_pure(r, alpha).ok()));
        }
    }
    checks.push(fock.finish());

    let mut split = Tally::new("fock_vs_beamsplitter_moments", 1e-9);
    for &(r, alpha) in &[(0.05, 0.25), (0.3, 0.0), (0.5, 1.0), (-0.4, 0.8), (0.0516, 0.287)] {
        let gf = fock_displaced_squeezed(r, alpha, 60).ok().and_then(|p| g2_fock(&p).ok());
        let s = g2hbt_core::displaced_squeezed(r, alpha).expect("valid");
        split.record(rel(gf, g2_isserlis(&s, &f, 0.0).ok()));
    }
    checks.push(split.finish());

    let mut coherent = Tally::new("coherent_is_one", 1e-10);
    let mut thermal = Tally::new("symmetric_thermal_is_two", 1e-10);
    let mut biased = Tally::new("biased_thermal_is_three", 1e-10);
    let mut squeezed = Tally::new("squeezed_vacuum_identity", 1e-10);
    let mut zeros = Tally::new("unity_at_sinc_zeros", 1e-10);
    for k in 0..50 {
        let x = 0.05 + k as f64 * 0.1;
        let t = k as f64 * 0.2;
        coherent.record(abs(closed.g2(&GaussianState::coherent(x).unwrap(), t), 1.0));
        let v = 1.0 + x * 4.0;
        thermal.record(abs(closed.g2(&GaussianState::new(v, v, 0.0).unwrap(), 0.0), 2.0));
        biased.record(abs(closed.g2(&GaussianState::new(v, 1.0, 0.0).unwrap(), 0.0), 3.0));
        let r = 0.01 + k as f64 * 0.04;
        let sh = r.sinh();
        let sv = g2hbt_core::displaced_squeezed(r, 0.0).unwrap();
        squeezed.record(rel(closed.g2(&sv, 0.0), Some(3.0 + 1.0 / (sh * sh))));
        let s = GaussianState::new(0.5 + x, 2.5 + x, 0.1 * k as f64).unwrap();
        for m in 1..=3 {
            zeros.record(abs(closed.g2(&s, m as f64 * PI), 1.0));
        }
    }
    checks.extend([coherent, thermal, biased, squeezed, zeros].map(Tally::finish));

    let mut two_photon = Tally::new("two_photon_fock_is_half", 1e-12);
    two_photon.record(abs(g2_fock(&FockVector::number_state(2)).ok(), 0.5));
    checks.push(two_photon.finish());

    VerifyReport {
        grid,
        mutated: mutate,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_suite_passes() {
        let r = run_verify(Grid::Coarse, false);
        assert!(r.passed, "{:#?}", r.checks);
        assert_eq!(r.failures(), 0);
    }

    #[test]
    fn mutation_is_detected() {
        let r = run_verify(Grid::Coarse, true);
        assert!(!r.passed);
        let oracle = r.checks.iter().find(|c| c.name == "closed_form_vs_moment_oracle").unwrap();
        assert!(!oracle.passed);
    }
}

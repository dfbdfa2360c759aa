//! Gaussian-moment oracle for the beamsplitter form of `g2(tau)`.
//!
//! The four homodyne observables `Xb+(t+tau), Xb-(t+tau), Xc+(t), Xc-(t)`
//! are jointly Gaussian. Every fourth moment in the quadrature expression
//! for `g2` follows from their means and covariances by the non-central
//! Isserlis (Wick) expansion, written out term by term below. This path never
//! touches the closed-form coherence formulas.

use crate::error::OracleError;
use crate::filter::FilterSpec;
use crate::moments::{Arm, Quadrature, QuadratureMoments};
use crate::state::GaussianState;

const B_PLUS: usize = 0;
const B_MINUS: usize = 1;
const C_PLUS: usize = 2;
const C_MINUS: usize = 3;

fn slot(arm: Arm, q: Quadrature) -> usize {
    2 * arm.index() + q.index()
}

/// Means and covariances of `(Xb+(t+tau), Xb-(t+tau), Xc+(t), Xc-(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTable {
    pub mean: [f64; 4],
    pub cov: [[f64; 4]; 4],
}

impl MomentTable {
    /// Moments after mixing `state` with vacuum on a 50:50 beamsplitter.
    ///
    /// Arm variances are `(V^i + 1)/2`, same-quadrature cross-arm
    /// covariances `(V^i - 1)/2 * overlap`, and both arms carry
    /// `<X+> = 2 alpha / sqrt2`.
    pub fn beamsplitter(state: &GaussianState, overlap: f64) -> Self {
        let mu = core::f64::consts::SQRT_2 * state.alpha();
        let (vp, vm) = (state.v_plus(), state.v_minus());
        let mut cov = [[0.0; 4]; 4];
        cov[B_PLUS][B_PLUS] = (vp + 1.0) / 2.0;
        cov[C_PLUS][C_PLUS] = (vp + 1.0) / 2.0;
        cov[B_MINUS][B_MINUS] = (vm + 1.0) / 2.0;
        cov[C_MINUS][C_MINUS] = (vm + 1.0) / 2.0;
        let plus = (vp - 1.0) / 2.0 * overlap;
        let minus = (vm - 1.0) / 2.0 * overlap;
        cov[B_PLUS][C_PLUS] = plus;
        cov[C_PLUS][B_PLUS] = plus;
        cov[B_MINUS][C_MINUS] = minus;
        cov[C_MINUS][B_MINUS] = minus;
        Self {
            mean: [mu, 0.0, mu, 0.0],
            cov,
        }
    }

    /// Symmetric, positive semidefinite, and free of same-mode
    /// cross-quadrature terms.
    pub fn is_valid(&self, tol: f64) -> bool {
        for i in 0..4 {
            for j in 0..4 {
                if (self.cov[i][j] - self.cov[j][i]).abs() > tol {
                    return false;
                }
            }
        }
        if self.cov[B_PLUS][B_MINUS].abs() > tol || self.cov[C_PLUS][C_MINUS].abs() > tol {
            return false;
        }
        // Cholesky with a small diagonal shift tolerates semidefinite input.
        let mut l = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..=i {
                let mut s = self.cov[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s < -tol {
                        return false;
                    }
                    l[i][i] = libm::sqrt(s.max(0.0) + tol);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    pub fn second_moment(&self, k: usize) -> f64 {
        self.cov[k][k] + self.mean[k] * self.mean[k]
    }

    /// `E[x_i x_j x_k x_l]` for jointly Gaussian variables with nonzero means.
    pub fn fourth_moment(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = &self.mean;
        let c = &self.cov;
        // all four means
        let mut e = m[i] * m[j] * m[k] * m[l];
        // one covariance, two means (six pairings)
        e += c[i][j] * m[k] * m[l];
        e += c[i][k] * m[j] * m[l];
        e += c[i][l] * m[j] * m[k];
        e += c[j][k] * m[i] * m[l];
        e += c[j][l] * m[i] * m[k];
        e += c[k][l] * m[i] * m[j];
        // two covariances (three pairings)
        e += c[i][j] * c[k][l] + c[i][k] * c[j][l] + c[i][l] * c[j][k];
        e
    }

    /// The ten raw moments entering the quadrature expression for `g2`.
    pub fn quadrature_moments(&self) -> QuadratureMoments {
        let mut out = QuadratureMoments::default();
        for qb in Quadrature::BOTH {
            for qc in Quadrature::BOTH {
                let (x, y) = (slot(Arm::B, qb), slot(Arm::C, qc));
                out.fourth[qb.index()][qc.index()] = self.fourth_moment(x, x, y, y);
            }
        }
        for arm in Arm::BOTH {
            for q in Quadrature::BOTH {
                out.second[arm.index()][q.index()] = self.second_moment(slot(arm, q));
            }
        }
        out
    }
}

/// `g2(tau)` from the beamsplitter-output moments of `state`.
pub fn g2_isserlis(state: &GaussianState, filter: &FilterSpec, tau: f64) -> Result<f64, OracleError> {
    let table = MomentTable::beamsplitter(state, filter.autocorrelation(tau));
    table
        .quadrature_moments()
        .g2(0.0)
        .filter(|g| g.is_finite())
        .ok_or(OracleError::Undefined)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_moment_reduces_to_textbook_cases() {
        let t = MomentTable {
            mean: [0.0; 4],
            cov: [
                [2.0, 0.0, 0.5, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.5, 0.0, 2.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        };
        // E[x^4] = 3 sigma^4
        assert_eq!(t.fourth_moment(0, 0, 0, 0), 12.0);
        // E[x^2 y^2] = sx^2 sy^2 + 2 c^2
        assert_eq!(t.fourth_moment(0, 0, 2, 2), 4.5);

        let mut shifted = t;
        shifted.mean = [1.0, 0.0, 0.0, 0.0];
        // E[(1+z)^4] = 1 + 6 s^2 + 3 s^4
        assert_eq!(shifted.fourth_moment(0, 0, 0, 0), 1.0 + 12.0 + 12.0);
    }

    #[test]
    fn examples() {
        let f = FilterSpec::normalized();
        let coh = GaussianState::coherent(0.6).unwrap();
        for t in [0.0, 1.3, 4.0] {
            assert!((g2_isserlis(&coh, &f, t).unwrap() - 1.0).abs() < 1e-14);
        }
        let sym = GaussianState::new(3.0, 3.0, 0.0).unwrap();
        assert!((g2_isserlis(&sym, &f, 0.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(
            g2_isserlis(&GaussianState::vacuum(), &f, 0.0),
            Err(OracleError::Undefined)
        );
    }

    #[test]
    fn tables_are_valid() {
        let s = GaussianState::new(0.902, 1.137, 0.257).unwrap();
        for overlap in [1.0, 0.5, 0.0, -0.2] {
            assert!(MomentTable::beamsplitter(&s, overlap).is_valid(1e-12));
        }
        let mut bad = MomentTable::beamsplitter(&s, 1.0);
        bad.cov[B_PLUS][B_MINUS] = 0.1;
        bad.cov[B_MINUS][B_PLUS] = 0.1;
        assert!(!bad.is_valid(1e-12));
    }
}

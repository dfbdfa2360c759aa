//! Single-mode Gaussian states at a sideband frequency.
//!
//! Quadratures are normalised so that the vacuum has unit variance
//! (`X+ = a + a^dag`, `X- = -i(a - a^dag)`). The displacement is real and
//! lies along the amplitude quadrature, so `<X+> = 2 alpha` and `<X-> = 0`.

use crate::error::StateError;
use crate::math;

/// Slack allowed below the uncertainty bound before a state is rejected.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-12;

/// Amplitude/phase quadrature variances and a real coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    v_plus: f64,
    v_minus: f64,
    alpha: f64,
}

impl GaussianState {
    pub fn new(v_plus: f64, v_minus: f64, alpha: f64) -> Result<Self, StateError> {
        if !(v_plus.is_finite() && v_minus.is_finite() && alpha.is_finite()) {
            return Err(StateError::NonFinite);
        }
        if v_plus <= 0.0 || v_minus <= 0.0 {
            return Err(StateError::NonPositiveVariance { v_plus, v_minus });
        }
        let product = v_plus * v_minus;
        if product < 1.0 - UNCERTAINTY_TOLERANCE {
            return Err(StateError::UncertaintyViolation { product });
        }
        Ok(Self {
            v_plus,
            v_minus,
            alpha,
        })
    }

    pub const fn vacuum() -> Self {
        Self {
            v_plus: 1.0,
            v_minus: 1.0,
            alpha: 0.0,
        }
    }

    /// Coherent state `|alpha>` with vacuum-level noise.
    pub fn coherent(alpha: f64) -> Result<Self, StateError> {
        Self::new(1.0, 1.0, alpha)
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    pub fn v_minus(&self) -> f64 {
        self.v_minus
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `v_plus * v_minus`; equal to one exactly for pure states.
    pub fn purity(&self) -> f64 {
        self.v_plus * self.v_minus
    }

    pub fn mean_photon_number(&self) -> f64 {
        (self.v_plus + self.v_minus - 2.0) / 4.0 + self.alpha * self.alpha
    }

    pub fn is_vacuum(&self) -> bool {
        self.v_plus == 1.0 && self.v_minus == 1.0 && self.alpha == 0.0
    }

    /// Same variances with a different displacement.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, StateError> {
        Self::new(self.v_plus, self.v_minus, alpha)
    }
}

/// `D(alpha) S(r) |0>`: amplitude squeezed for `r > 0`.
pub fn displaced_squeezed(r: f64, alpha: f64) -> Result<GaussianState, StateError> {
    if !(r.is_finite() && alpha.is_finite()) {
        return Err(StateError::NonFinite);
    }
    let v_plus = math::exp(-2.0 * r);
    let v_minus = math::exp(2.0 * r);
    // The product rounds to within a few ulp of one; skip the bound check.
    Ok(GaussianState {
        v_plus,
        v_minus,
        alpha,
    })
}

/// Adds broadband white noise to the amplitude quadrature only.
pub fn bias_thermal(state: &GaussianState, noise_variance: f64) -> Result<GaussianState, StateError> {
    if !noise_variance.is_finite() {
        return Err(StateError::NonFinite);
    }
    if noise_variance < 0.0 {
        return Err(StateError::NegativeNoise(noise_variance));
    }
    GaussianState::new(state.v_plus + noise_variance, state.v_minus, state.alpha)
}

/// Mixes the state with vacuum on a beamsplitter of power transmission `eta`.
pub fn attenuate(state: &GaussianState, eta: f64) -> Result<GaussianState, StateError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(StateError::TransmissionOutOfRange(eta));
    }
    // eta * v + (1 - eta), written around the vacuum level.
    let v_plus = 1.0 + eta * (state.v_plus - 1.0);
    let v_minus = 1.0 + eta * (state.v_minus - 1.0);
    Ok(GaussianState {
        v_plus,
        v_minus,
        alpha: math::sqrt(eta) * state.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn rejects_unphysical_states() {
        assert!(matches!(
            GaussianState::new(0.5, 1.5, 0.0),
            Err(StateError::UncertaintyViolation { .. })
        ));
        assert!(matches!(
            GaussianState::new(-1.0, 2.0, 0.0),
            Err(StateError::NonPositiveVariance { .. })
        ));
        assert_eq!(GaussianState::new(f64::NAN, 1.0, 0.0), Err(StateError::NonFinite));
        // Just inside the tolerance band.
        assert!(GaussianState::new(1.0 - 5e-13, 1.0, 0.0).is_ok());
    }

    #[test]
    fn displaced_squeezed_examples() {
        assert_eq!(displaced_squeezed(0.0, 0.0).unwrap(), GaussianState::vacuum());
        let coh = displaced_squeezed(0.0, 0.5).unwrap();
        assert_eq!((coh.v_plus(), coh.v_minus(), coh.alpha()), (1.0, 1.0, 0.5));
        let s = displaced_squeezed(0.0516, 0.257).unwrap();
        // e^{-0.1032}
        assert!(close(s.v_plus(), 0.901_946_566_128_156_8, 1e-14));
        assert!((s.v_plus() - 0.902).abs() < 1e-3);
        assert!(close(s.purity(), 1.0, 1e-14));
    }

    #[test]
    fn bias_thermal_examples() {
        let vac = GaussianState::vacuum();
        assert_eq!(bias_thermal(&vac, 0.0).unwrap(), vac);
        let t = bias_thermal(&vac, 11.80).unwrap();
        assert!(close(t.v_plus(), 12.80, 1e-15));
        assert_eq!((t.v_minus(), t.alpha()), (1.0, 0.0));
        let t = bias_thermal(&vac, 2.0).unwrap();
        assert_eq!((t.v_plus(), t.v_minus(), t.alpha()), (3.0, 1.0, 0.0));
        assert_eq!(bias_thermal(&vac, -0.1), Err(StateError::NegativeNoise(-0.1)));
    }

    #[test]
    fn attenuate_examples() {
        let s = GaussianState::new(0.894, 1.139, 0.255).unwrap();
        assert_eq!(attenuate(&s, 1.0).unwrap(), s);
        let half = attenuate(&s, 0.5).unwrap();
        assert!(close(half.v_plus(), 0.947, 1e-14));
        assert!(close(half.v_minus(), 1.0695, 1e-14));
        assert!(close(half.alpha(), 0.255 / core::f64::consts::SQRT_2, 1e-14));
        for eta in [0.0, 0.3, 0.86, 1.0] {
            assert_eq!(attenuate(&GaussianState::vacuum(), eta).unwrap(), GaussianState::vacuum());
        }
        assert_eq!(attenuate(&s, 1.2), Err(StateError::TransmissionOutOfRange(1.2)));
        assert_eq!(attenuate(&s, -0.1), Err(StateError::TransmissionOutOfRange(-0.1)));
    }

    #[test]
    fn photon_number() {
        assert_eq!(GaussianState::vacuum().mean_photon_number(), 0.0);
        let s = displaced_squeezed(0.3, 0.7).unwrap();
        let sh = libm::sinh(0.3);
        assert!(close(s.mean_photon_number(), sh * sh + 0.49, 1e-14));
    }
}

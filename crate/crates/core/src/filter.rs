//! The measurement filter that defines the detected temporal mode.

use crate::math;

/// Passband shape of the measurement filter. Only the top-hat is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum FilterShape {
    #[default]
    TopHat,
}

/// Top-hat filter passing `|omega| <= band edge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    omega: f64,
    shape: FilterShape,
}

impl FilterSpec {
    /// Returns `None` unless `omega` is positive and finite.
    pub fn top_hat(omega: f64) -> Option<Self> {
        (omega.is_finite() && omega > 0.0).then_some(Self {
            omega,
            shape: FilterShape::TopHat,
        })
    }

    /// Filter with unit band edge, so that delays are read directly as `tau * Omega`.
    pub fn normalized() -> Self {
        Self {
            omega: 1.0,
            shape: FilterShape::TopHat,
        }
    }

    /// One-sided band edge in rad/s (or normalised units).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn shape(&self) -> FilterShape {
        self.shape
    }

    /// Delay corresponding to a dimensionless `tau * Omega`.
    pub fn tau_for(&self, tau_omega: f64) -> f64 {
        tau_omega / self.omega
    }

    /// Normalised autocorrelation of the filtered mode at delay `tau`.
    pub fn autocorrelation(&self, tau: f64) -> f64 {
        match self.shape {
            FilterShape::TopHat => sinc(self.omega * tau),
        }
    }
}

/// `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if math::abs(x) < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        math::sin(x) / x
    }
}

/// `[a(0), a^dag(tau)] = [a(tau), a^dag(0)]` for the filtered mode.
pub fn filter_commutator(filter: &FilterSpec, tau: f64) -> f64 {
    filter.autocorrelation(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn commutator_examples() {
        let f = FilterSpec::top_hat(2.0 * PI * 60e3).unwrap();
        assert_eq!(filter_commutator(&f, 0.0), 1.0);
        assert!(filter_commutator(&f, f.tau_for(PI)).abs() < 1e-15);
        let half = filter_commutator(&f, f.tau_for(FRAC_PI_2));
        assert!((half - 2.0 / PI).abs() < 1e-15);
        assert!((half - 0.6366).abs() < 1e-4);
    }

    #[test]
    fn sinc_series_branch_is_continuous() {
        for x in [9.9e-5, 1e-4, 1.01e-4, -9.9e-5, -1.01e-4] {
            let direct = libm::sin(x) / x;
            assert!((sinc(x) - direct).abs() <= 4.0 * f64::EPSILON, "x = {x}");
        }
        for k in 1..6 {
            assert!(sinc(k as f64 * PI).abs() < 1e-15);
        }
    }

    #[test]
    fn band_must_be_positive() {
        assert!(FilterSpec::top_hat(0.0).is_none());
        assert!(FilterSpec::top_hat(-1.0).is_none());
        assert!(FilterSpec::top_hat(f64::INFINITY).is_none());
    }
}

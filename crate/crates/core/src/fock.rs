//! Photon-number basis oracle for pure displaced squeezed states.
//!
//! The state `D(alpha) S(r) |0>` is the unique state annihilated by
//! `cosh(r) (a - alpha) + sinh(r) (a^dag - alpha)`. In the number basis this
//! gives the recursion
//!
//! ```text
//! cosh(r) sqrt(n+1) c[n+1] = alpha e^r c[n] - sinh(r) sqrt(n) c[n-1]
//! ```
//!
//! started from `c[0]`, whose modulus is known in closed form
//! (`|c0|^2 = exp(-alpha^2 e^r / cosh r) / cosh r`). No coherence formula
//! is used anywhere in this module.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::OracleError;
use crate::math;

pub const DEFAULT_TRUNCATION: usize = 60;
pub const MIN_TRUNCATION: usize = 20;
/// Largest admissible `|c_N|^2`.
pub const TAIL_LIMIT: f64 = 1e-12;
/// Largest admissible norm lost to truncation.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Amplitudes `c_0 .. c_N` in the photon-number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// The number state `|n>`, represented up to `max(n, 2)`.
    pub fn number_state(n: usize) -> Self {
        let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); n.max(2) + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Highest retained photon number `N`.
    pub fn truncation(&self) -> usize {
        self.amplitudes.len().saturating_sub(1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Number-basis amplitudes of `D(alpha) S(r) |0>` truncated at `trunc`.
pub fn fock_displaced_squeezed(r: f64, alpha: f64, trunc: usize) -> Result<FockVector, OracleError> {
    if trunc < MIN_TRUNCATION {
        return Err(OracleError::TruncationTooSmall(trunc));
    }
    if !(r.is_finite() && alpha.is_finite()) || math::abs(r) > 2.0 || math::abs(alpha) > 3.0 {
        return Err(OracleError::OutOfDomain);
    }
    let ch = math::cosh(r);
    let sh = math::sinh(r);
    let drive = alpha * math::exp(r);

    let c0 = math::sqrt(math::exp(-alpha * alpha * math::exp(r) / ch) / ch);
    let mut c = Vec::with_capacity(trunc + 1);
    c.push(c0);
    let mut prev = 0.0;
    for n in 0..trunc {
        let nf = n as f64;
        let next = (drive * c[n] - sh * math::sqrt(nf) * prev) / (ch * math::sqrt(nf + 1.0));
        prev = c[n];
        c.push(next);
    }

    let tail = c[trunc] * c[trunc];
    if tail >= TAIL_LIMIT {
        return Err(OracleError::TruncationInsufficient { tail });
    }
    let norm: f64 = c.iter().map(|x| x * x).sum();
    if norm < 1.0 - NORM_TOLERANCE {
        return Err(OracleError::NormLeak { norm });
    }
    let scale = 1.0 / math::sqrt(norm);
    Ok(FockVector {
        amplitudes: c.into_iter().map(|x| Complex64::new(x * scale, 0.0)).collect(),
    })
}

/// `<n (n - 1)> / <n>^2` at zero delay.
pub fn g2_fock(psi: &FockVector) -> Result<f64, OracleError> {
    let (mut pairs, mut mean, mut norm) = (0.0, 0.0, 0.0);
    for (n, c) in psi.amplitudes.iter().enumerate() {
        let p = c.norm_sqr();
        let nf = n as f64;
        norm += p;
        mean += nf * p;
        pairs += nf * (nf - 1.0) * p;
    }
    if norm <= 0.0 {
        return Err(OracleError::Undefined);
    }
    let (pairs, mean) = (pairs / norm, mean / norm);
    if mean <= 1e-12 {
        return Err(OracleError::Undefined);
    }
    Ok(pairs / (mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum() {
        let v = fock_displaced_squeezed(0.0, 0.0, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(v.truncation(), 60);
        assert_eq!(v.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|c| c.norm_sqr() == 0.0));
        assert_eq!(g2_fock(&v), Err(OracleError::Undefined));
    }

    #[test]
    fn coherent_closed_form() {
        let v = fock_displaced_squeezed(0.0, 1.0, DEFAULT_TRUNCATION).unwrap();
        let mut fact = 1.0;
        for (n, c) in v.amplitudes().iter().enumerate().take(30) {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = libm::exp(-0.5) / libm::sqrt(fact);
            assert!((c.re - expect).abs() < 1e-14, "n = {n}");
        }
        assert!((g2_fock(&v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_has_even_parity() {
        let v = fock_displaced_squeezed(0.3, 0.0, DEFAULT_TRUNCATION).unwrap();
        for (n, c) in v.amplitudes().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(c.norm_sqr(), 0.0);
            }
        }
        assert!(v.amplitudes()[2].norm_sqr() > 0.0);
        // Unnormalised norm must already be one: the c0 closed form is exact.
        let sh = libm::sinh(0.3);
        assert!((v.mean_photon_number() - sh * sh).abs() < 1e-13);
    }

    #[test]
    fn number_states() {
        assert_eq!(g2_fock(&FockVector::number_state(1)).unwrap(), 0.0);
        assert_eq!(g2_fock(&FockVector::number_state(2)).unwrap(), 0.5);
    }

    #[test]
    fn truncation_guard() {
        assert_eq!(
            fock_displaced_squeezed(0.1, 0.1, 10),
            Err(OracleError::TruncationTooSmall(10))
        );
        assert_eq!(fock_displaced_squeezed(2.5, 0.0, 60), Err(OracleError::OutOfDomain));
        assert!(matches!(
            fock_displaced_squeezed(2.0, 0.0, 60),
            Err(OracleError::TruncationInsufficient { .. })
        ));
        assert!(fock_displaced_squeezed(2.0, 0.0, 800).is_ok());
    }
}

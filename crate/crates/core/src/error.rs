use core::fmt;

/// Rejected state construction or state map argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateError {
    /// A variance was zero, negative or not finite.
    NonPositiveVariance { v_plus: f64, v_minus: f64 },
    /// `v_plus * v_minus` fell below the uncertainty bound.
    UncertaintyViolation { product: f64 },
    NonFinite,
    NegativeNoise(f64),
    TransmissionOutOfRange(f64),
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositiveVariance { v_plus, v_minus } => write!(
                f,
                "quadrature variances must be positive (v_plus = {v_plus}, v_minus = {v_minus})"
            ),
            Self::UncertaintyViolation { product } => write!(
                f,
                "v_plus * v_minus = {product} violates the uncertainty bound (must be >= 1)"
            ),
            Self::NonFinite => write!(f, "state parameters must be finite"),
            Self::NegativeNoise(v) => write!(f, "added noise variance must be >= 0, got {v}"),
            Self::TransmissionOutOfRange(eta) => {
                write!(f, "transmission must lie in [0, 1], got {eta}")
            }
        }
    }
}

/// Failure to evaluate a closed-form coherence expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherenceError {
    /// `g2` has no value for the vacuum (zero mean photon number).
    Undefined,
    /// The displacement minimising `g2(0)` only exists with amplitude squeezing.
    NoMinimum { v_plus: f64 },
    InvalidState(StateError),
}

impl fmt::Display for CoherenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Undefined => write!(f, "g2 undefined for vacuum (zero mean photon number)"),
            Self::NoMinimum { v_plus } => write!(
                f,
                "no finite minimising displacement: v_plus = {v_plus} is not amplitude squeezed"
            ),
            Self::InvalidState(e) => write!(f, "invalid state: {e}"),
        }
    }
}

impl From<StateError> for CoherenceError {
    fn from(e: StateError) -> Self {
        Self::InvalidState(e)
    }
}

/// Failure inside the brute-force oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleError {
    /// Parameters outside the domain where the truncated basis is trusted.
    OutOfDomain,
    TruncationTooSmall(usize),
    /// The last retained amplitude still carries too much weight.
    TruncationInsufficient { tail: f64 },
    /// The retained norm is below `1 - tail_tol`.
    NormLeak { norm: f64 },
    Undefined,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OutOfDomain => write!(f, "parameters outside |r| <= 2, |alpha| <= 3"),
            Self::TruncationTooSmall(n) => write!(f, "truncation {n} below minimum of 20"),
            Self::TruncationInsufficient { tail } => {
                write!(f, "truncation insufficient: |c_N|^2 = {tail:e} >= 1e-12")
            }
            Self::NormLeak { norm } => write!(f, "truncated norm {norm} below 1 - 1e-10"),
            Self::Undefined => write!(f, "g2 undefined for vacuum (zero mean photon number)"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StateError {}
#[cfg(feature = "std")]
impl std::error::Error for CoherenceError {}
#[cfg(feature = "std")]
impl std::error::Error for OracleError {}

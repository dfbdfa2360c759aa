use g2hbt_core::{CoherenceError, QuadPair, StateError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time series: {0}")]
    InvalidSeries(&'static str),
    #[error("invalid quadrature label {0:?}")]
    InvalidLabel(String),
    #[error("filter band {band} rad/s is not below the Nyquist frequency {nyquist} rad/s")]
    BandAboveNyquist { band: f64, nyquist: f64 },
    #[error("decimation by {factor} would alias: band edge {band} rad/s exceeds new Nyquist {nyquist} rad/s")]
    AliasingRejected { factor: usize, band: f64, nyquist: f64 },
    #[error("decimation factor must be at least 1")]
    ZeroFactor,
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("lag {lag} out of range: must be below run length / 10 ({limit})")]
    LagOutOfRange { lag: usize, limit: usize },
    #[error("quadrature pair {0} missing from the acquisition")]
    MissingPair(QuadPair),
    #[error("datasets disagree: {0}")]
    Inconsistent(String),
    #[error("denominator vanishing: arm excess b = {excess_b:e}, c = {excess_c:e} (g2 undefined for near-vacuum input)")]
    DenominatorVanishing { excess_b: f64, excess_c: f64 },
    #[error("arms disagree on {parameter}: b = {b}, c = {c} (more than 5 standard errors apart)")]
    CalibrationMismatch { parameter: &'static str, b: f64, c: f64 },
    #[error("recovered variances violate the uncertainty bound beyond statistical error (product {product})")]
    UnphysicalEstimate { product: f64 },
    #[error("at least two runs are needed for a confidence interval")]
    TooFewRuns,
    #[error("transmission {0} outside (0, 1]")]
    InvalidEta(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Failure of a command; maps onto the process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
    #[error("verification failed: {0} check(s) did not pass")]
    Verify(usize),
}

impl RunError {
    /// 2 for usage and configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<SignalError> for RunError {
    fn from(e: SignalError) -> Self {
        RunError::Estimate(e.into())
    }
}

impl From<CoherenceError> for RunError {
    fn from(e: CoherenceError) -> Self {
        RunError::Estimate(e.into())
    }
}

impl From<StateError> for RunError {
    fn from(e: StateError) -> Self {
        RunError::Estimate(e.into())
    }
}

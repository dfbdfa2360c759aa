//! Homodyne Hanbury-Brown–Twiss simulator and `g2(tau)` estimator.
//!
//! The pipeline mirrors a homodyne HBT measurement: a Gaussian state is split
//! with vacuum on a 50:50 beamsplitter, each output is measured in a chosen
//! quadrature, the detector records are low-passed with a digital top-hat
//! and decimated, and `g2(tau)` is rebuilt from time-averaged quadrature
//! moments of the four quadrature-pair settings.
//!
//! The closed-form theory and the oracles live in [`g2hbt_core`]; this crate
//! adds the stochastic simulation ([`signal`]), the estimator ([`estimate`]),
//! file formats ([`io`]), configuration ([`config`]), scenario presets
//! ([`scenario`]) and the self-check suite ([`verify`]).

pub mod config;
pub mod error;
pub mod estimate;
pub mod io;
pub mod scenario;
pub mod signal;
pub mod verify;

pub use error::{EstimateError, SignalError};
pub use estimate::{
    g2_from_moments, loss_sweep, moment_estimates, recover_input_state, CiMethod, CurvePoint, EstimatorOptions,
    G2Curve, MomentEstimates, StateEstimate,
};
pub use signal::{acquire, acquire_all, decimate, synth_raw_pair, tophat_filter, HbtAcquisition, HbtRunConfig, QuadPairDataset, TimeSeries};

//! Second-order coherence `g2(tau)` of single-mode Gaussian light.
//!
//! This crate holds the allocation-light numerical kernel shared by the
//! simulator and the command line tools:
//!
//! - [`state`]: Gaussian states described by their amplitude/phase quadrature
//!   variances and a real displacement, plus the maps that act on them
//!   (squeezing + displacement, thermal biasing, linear loss).
//! - [`filter`]: the top-hat measurement filter and its `sinc` mode overlap.
//! - [`coherence`]: closed-form `g2` for pure displaced squeezed states and
//!   for arbitrary single-mode Gaussian states.
//! - [`fock`] and [`isserlis`]: two independent oracles, a truncated
//!   photon-number basis evaluation and a Gaussian fourth-moment expansion of
//!   the beamsplitter (HBT) form.
//! - [`moments`]: assembly of `g2` from measured quadrature moments, used both
//!   by the estimator and by the moment oracle.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::excessive_precision)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod coherence;
mod error;
pub mod filter;
pub mod fock;
pub mod isserlis;
mod math;
pub mod moments;
pub mod state;

pub use coherence::{
    g2_tau_gaussian, g2_tau_gaussian_checked, g2_tau_pure, g2_zero_pure, optimal_displacement,
    G2Evaluation, DEFAULT_ILL_CONDITIONED_THRESHOLD,
};
pub use error::{CoherenceError, OracleError, StateError};
pub use filter::{filter_commutator, sinc, FilterShape, FilterSpec};
pub use fock::{fock_displaced_squeezed, g2_fock, FockVector};
pub use isserlis::{g2_isserlis, MomentTable};
pub use moments::{Arm, QuadPair, Quadrature, QuadratureMoments};
pub use state::{attenuate, bias_thermal, displaced_squeezed, GaussianState};

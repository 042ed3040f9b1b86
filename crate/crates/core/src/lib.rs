//! Nonparametric estimation of Lévy densities from high-frequency increments.
//!
//! The pipeline: simulate or load increments, count exceedances of a
//! threshold ε to estimate the tail mass λ_ε, fit a linear Daubechies
//! wavelet estimator to the exceeding increments, and multiply the two.
//! The `analysis` and `bench` modules check the accompanying bounds and
//! convergence rates by Monte Carlo.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bench;
pub mod error;
pub mod intensity;
pub mod io;
pub mod levy_models;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod wavelet;

pub use error::{LevyError, Result};
pub use levy_models::{Density1D, Family, JumpLaw, LevyModel, TruncationGeometry, Variation};

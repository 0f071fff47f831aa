//! Tail analysis on hazard scales.
//!
//! The central object is the cumulative hazard R(x) = −log F̄(x) of a
//! positive random variable, compared against scale functions h through
//! windowed liminf surrogates. The crate provides the model catalogue,
//! empirical hazard estimation, scale-function machinery (hulls, envelopes,
//! subadditivity verdicts), tail indices, closure rules for sums, products
//! and maxima, process simulation, and moment-determinacy diagnostics.

pub mod algebra;
pub mod determinacy;
pub mod dist;
pub mod empirical;
pub mod error;
pub mod indices;
pub mod rng;
pub mod scale;
pub mod simulate;

pub use error::{Error, Result};

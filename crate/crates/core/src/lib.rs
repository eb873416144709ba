//! Stationary discrete shock profiles of scalar conservation laws.
//!
//! The crate builds discrete shock profiles of conservative finite-difference
//! schemes, linearizes the scheme about them, computes the Green's function of
//! the linearization and its leading-order decomposition, and runs the
//! weighted-norm decay experiment for zero-mass perturbations.

pub mod error;
pub mod fit;
pub mod green;
pub mod linop;
pub mod profile;
pub mod quad;
pub mod scheme;
pub mod seq;
pub mod stability;
pub mod svg;

pub use error::{Error, Result, SeqIndex};
pub use seq::{diff_seq, mass, shift, unshift, weighted_norm, NormExponent, TailedSeq, WeightedNormSpec};

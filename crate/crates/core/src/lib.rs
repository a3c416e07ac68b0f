//! Numerics for ignition fronts driven by heavy-tailed jump kernels.
//!
//! The crate covers the kernel and its Fourier symbol, the nonlocal
//! operator on truncated grids, an explicit front solver, the linear heat
//! kernel of the jump process, and an explicit sub-solution together with
//! a numerical certificate of its inequality.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod greens;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod reaction;
pub mod solver;
pub mod stats;
pub mod subsolution;

pub use error::{Error, Result};

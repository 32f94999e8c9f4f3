//! Free-probability toolkit for operator models of transformer language models.
//!
//! Tokens, positions, queries, keys and values are dense self-adjoint matrices
//! over a finite-dimensional algebra carrying the normalized trace state
//! `φ = Tr / d`. On top of that sit:
//!
//! - [`algebra`]: operators, commutators, eigendecomposition, Haar rotation.
//! - [`spectra`]: spectral measures, kernel density estimates, distances, entropy.
//! - [`freeconv`]: Cauchy and R-transforms, free additive convolution by
//!   subordination, and a Haar-rotation Monte Carlo oracle.
//! - [`attention`]: trace-kernel attention, positional cross terms, multi-head
//!   aggregation and amalgamated-freeness diagnostics.
//! - [`depth`]: layer-by-layer propagation versus the iterated convolution prediction.
//! - [`entropy`]: logit operators, free entropy and the generalization bound.
//! - [`cli`]: the command-line driver behind the `freeformer` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod attention;
pub mod cli;
pub mod depth;
pub mod entropy;
mod error;
pub mod freeconv;
pub mod io;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;

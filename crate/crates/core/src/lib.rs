//! Iterated function systems acting on distribution functions over `[0,1]`.
//!
//! The crate provides the IFS operator on distribution functions together
//! with the machinery around it:
//!
//! - [`distfn`]: distribution-function representations and sup-norm distances.
//! - [`ifs`]: affine-map systems, the operator, fixed points and error bounds.
//! - [`inverse`]: the collage objective and its minimax linear-program solver.
//! - [`constructions`]: exact e.d.f. systems, quantile systems for a known CDF
//!   and the empirical-quantile estimator.
//! - [`randstats`]: Beta CDF/quantiles and a reproducible seeded generator.
//! - [`sim`]: the estimator-versus-e.d.f. simulation harness.
//! - [`cli`]: the command-line driver behind the `ifsdist` binary.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constructions;
pub mod distfn;
mod error;
pub mod ifs;
pub mod inverse;
pub mod randstats;
pub mod sim;

pub use error::{Error, Result};

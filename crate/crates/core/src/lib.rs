//! Bayesian nonparametric inference for the M/G/1 queue from its marked
//! departure process.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod matrix;
pub mod pgf;
pub mod quadrature;
pub mod rate;
pub mod service;
pub mod sim;
pub mod snapshot;
pub mod tau;
pub mod transforms;
pub mod validation;

pub use error::{Error, Result};

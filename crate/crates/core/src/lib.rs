//! Wasserstein distributionally robust logistic regression for data with
//! numerical and categorical features.
//!
//! The robust problem is an exponential-cone program whose size grows with
//! the number of category combinations. [`cutgen`] solves it by constraint
//! generation, using the exact greedy separation in [`separation`].

pub mod baselines;
pub mod conic;
pub mod cutgen;
pub mod data;
pub mod error;
pub mod experiments;
pub mod metric;
pub mod separation;
pub mod solver;

pub use error::{DroError, Result};

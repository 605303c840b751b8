//! Invariant Finsler metrics on matrix Lie groups and the metrics they induce
//! on quotient groups `G/H` through horizontal lifts.
//!
//! - [`minkowski`]: Minkowski norms, fundamental tensors, axiom sampling.
//! - [`liegroup`]: the group catalog, translation differentials, invariant metrics.
//! - [`quotient`]: subgroup splits, horizontal lifts, the induced metric and its checks.
//! - [`harness`]: configuration, orchestration, and canonical JSON reports.

pub mod error;
pub mod harness;
pub mod liegroup;
pub mod linalg;
pub mod minkowski;
pub mod quotient;
pub mod sampling;

pub use error::{Error, Result};

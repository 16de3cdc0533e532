//! Single-pulse radar detection probability for an aircraft pose, with
//! first-order propagation of Gaussian pose uncertainty and a Monte Carlo
//! oracle for validating the linearisation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod geometry;
pub mod jacobians;
pub mod montecarlo;
pub mod rcs;
pub mod scenario;

pub use error::{Error, Result};

//! Simulation and verification toolkit for a pair of coupled 1-D damped
//! nonlinear wave equations with nonlinear Robin boundary conditions.
//!
//! The pipeline is [`model`] → [`discretization`] → [`timestepper`], with
//! [`diagnostics`] evaluating energy functionals on the resulting states
//! and [`verification`] comparing against the manufactured solution.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod discretization;
mod error;
pub mod linalg;
pub mod model;
pub mod timestepper;
pub mod verification;

pub use error::Error;

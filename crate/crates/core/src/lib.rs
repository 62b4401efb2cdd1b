//! Geometric L1 adaptive attitude control for a quadrotor on SO(3).
//!
//! The crate provides attitude primitives, rigid-body dynamics, trajectory and
//! disturbance generators, baseline and adaptive controllers, and a harness
//! that runs the disturbance-rejection experiments and checks Lyapunov
//! diagnostics along the way.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controllers;
pub mod disturbances;
pub mod error;
pub mod harness;
pub mod l1;
pub mod rigid_body;
pub mod so3;
pub mod trajectories;

pub use error::{Error, Result};

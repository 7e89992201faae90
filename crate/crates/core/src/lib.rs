//! Left-trivialized linearization of moving-base multibody dynamics.
//!
//! The configuration of a floating-base tree lives on `SE(3) × R^nJ`. This
//! crate computes the extended inverse dynamics, its derivatives with
//! respect to pose, joint positions and velocities, the inverse mass matrix,
//! and assembles the state and input matrices of the linearized dynamics on
//! the Lie algebra. A finite-difference oracle checks the result.

#![allow(clippy::needless_range_loop)]

pub mod derivatives;
pub mod dynamics;
pub mod error;
pub mod findiff;
pub mod linearization;
pub mod model;
pub mod spatial;

pub use error::{Error, Result};

//! Contact-admissible sampling-based motion planning for serial arms.
// Parameter checks use `!(x > 0.0)` to catch NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod costs;
pub mod error;
pub mod evaluation;
pub mod kinematics;
pub mod planners;
pub mod world;

pub use error::{Error, Result};

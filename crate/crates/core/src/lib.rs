//! Simulation and classical-control design toolkit for a two-axis
//! inertially stabilised platform.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod metrics;
pub mod sensing;
pub mod simulation;
pub mod tracking;
pub mod verify;

pub use error::{IspError, Result};

//! Reachable-set safety verification for vehicles modelled by a
//! dynamic bicycle model.
//!
//! The crate provides interval and zonotope sets, a sound one-step
//! reachable-set oracle, halfspace and occupancy safety checks, a dataset
//! pipeline that labels random scenarios with the oracle, and a transformer
//! surrogate trained to imitate the oracle's one-step map.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod datagen;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod parallel;
pub mod reach;
pub mod safety;
pub mod sets;
pub mod surrogate;

pub use error::{Error, Result};

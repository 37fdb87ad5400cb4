//! Linear control systems on Lie groups and their invariance entropy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod entropy;
pub mod error;
pub mod group;
pub mod presets;
pub mod quotient;
pub mod runner;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};

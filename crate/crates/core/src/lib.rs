//! Entropy solutions of the hyperbolic Kompaneets model
//! `n_t + ((2x - x^2) n - n^2)_x = 0` on the half-line.
//!
//! The crate provides a monotone Godunov solver with an exact boundary-flux
//! ledger, a viscous reference solver on the extended line, the closed-form
//! stationary profiles and bounds, and diagnostics that turn the qualitative
//! properties of entropy solutions into executable checks.

// `!(a > b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod godunov;
pub mod grid;
pub mod model;
pub mod presets;
pub mod scenario;
pub mod timeloop;
pub mod verify;
pub mod viscous;

pub use error::{Error, Result};
pub use grid::{CellField, GridSpec, Snapshot};
pub use model::{EquilibriumProfile, FluxModel};
pub use presets::Preset;

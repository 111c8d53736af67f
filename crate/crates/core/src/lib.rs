//! Reaction-diffusion SIRB epidemic model with environmental bacteria.
//!
//! The crate covers the reaction kinetics ([`model`]), cell-centered spatial
//! discretization ([`grid`]), time integration ([`integrator`]), constant
//! steady states ([`steady_state`]) and their linear stability
//! ([`stability`]).

mod error;
pub mod grid;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod stability;
pub mod steady_state;

pub use error::{Error, Result};

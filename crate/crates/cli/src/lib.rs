//! Command-line workflows for the SIRB reaction-diffusion lab.

pub mod commands;
pub mod error;
pub mod scenario;
pub mod sweep;

pub use error::{CliError, Result};

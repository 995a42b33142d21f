//! IO, file formats, experiment harness and CLI for the lattice/VQE toolkit.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod harness;

pub use error::{Error, Result};

//! Command-line driver, file formats and parallel scans for boundary-driven
//! tight-binding lattices.

pub mod cli;
pub mod config;
pub mod error;
pub mod executor;
pub mod figures;
pub mod format;
pub mod manifest;

pub use cli::run;

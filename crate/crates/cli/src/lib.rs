//! Config-driven front end for the oscillator analysis pipeline: single
//! runs, parameter sweeps, and symmetry searches, with CSV and SVG
//! artifacts.

pub mod config;
pub mod csvio;
pub mod runner;
pub mod svg;

pub use config::{ConfigError, RunConfig};
pub use runner::{run, Command, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER};

//! Metrics, file I/O, built-in scenes, experiment drivers and the CLI.

pub mod cli;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod scenes;

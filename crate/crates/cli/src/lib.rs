//! Command-line harness for the SKAN simulator: configuration loading,
//! experiment presets and artifact writers.

pub mod config;
pub mod presets;
pub mod report;

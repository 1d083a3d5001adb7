//! Error types shared across the crate.

use thiserror::Error;

/// A structurally invalid parameter set.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("parameter {0} must be positive")]
    NotPositive(&'static str),
    #[error("parameter {key} out of range: {reason}")]
    OutOfRange { key: &'static str, reason: &'static str },
}

/// Stimulus construction failures.
#[derive(Debug, Error, PartialEq)]
pub enum StimulusError {
    #[error("schedule refers to pattern {index} but only {available} patterns exist")]
    PatternIndexOutOfRange { index: u32, available: usize },
    #[error("pattern has {pattern_channels} channels but the stream needs {expected}")]
    ChannelMismatch { pattern_channels: usize, expected: usize },
    #[error("presentation probabilities must be non-negative and sum to a positive value")]
    BadProbabilities,
}

/// Analysis failures.
#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("receptive-field sweep requires a 2-input snapshot, got {0} channels")]
    UnsupportedDimension(usize),
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two channels, got {0}")]
    TooFewChannels(usize),
}

/// First point where the optimized engine's behaviour departed from the
/// reference engine.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("engines diverged at tick {tick}: {detail}")]
pub struct Divergence {
    pub tick: u64,
    pub detail: String,
}

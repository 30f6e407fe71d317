use std::path::PathBuf;

use thiserror::Error;

/// Rejected model parameters or configuration input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("{ratio} must be a positive integer, got {value}")]
    NotIntegerMultiple { ratio: &'static str, value: f64 },
    #[error("negative argument {value} passed to {function}")]
    NegativeArgument { function: &'static str, value: f64 },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value `{value}` for key `{key}`: {message}")]
    InvalidValue {
        key: String,
        value: String,
        message: String,
    },
}

/// Failures inside the numerical solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("fixed point at step {step} did not converge in {iterations} iterations (last change {residual:e})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("continuation operator row {cell} is not a contraction: {detail}")]
    NotContraction { cell: usize, detail: String },
    #[error("inventory index {volume} exceeds holdings {inventory}")]
    VolumeExceedsInventory { volume: usize, inventory: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("policy grid {policy:?} does not match discretization {grid:?}")]
    GridMismatch {
        policy: (usize, usize, usize),
        grid: (usize, usize, usize),
    },
    #[error("market order of {volume} units exceeds inventory {inventory}")]
    OverSell { volume: usize, inventory: usize },
    #[error("market order volume must be positive")]
    ZeroVolume,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least 2 paths, got {0}")]
    TooFewPaths(usize),
    #[error("frictionless wealth x0 * p0 is zero")]
    ZeroNotional,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported artifact version {found} (this build reads version {supported}); re-run `execqvi solve` to regenerate it")]
    UnsupportedVersion {
        path: PathBuf,
        found: String,
        supported: u32,
    },
    #[error("{path}: malformed header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}: corrupt payload: {message}")]
    Payload { path: PathBuf, message: String },
    #[error("artifact parameter `{key}` differs: artifact has `{artifact}`, config has `{config}`")]
    ParamMismatch {
        key: String,
        artifact: String,
        config: String,
    },
    #[error(transparent)]
    Params(#[from] ParamError),
}

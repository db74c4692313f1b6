//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors reported by the simulation, solver, filtering, and pricing layers.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    /// Model or configuration validation failure; `field` names the offender.
    InvalidModel { field: &'static str, message: String },
    /// Failure while generating paths, located at (path, step).
    Simulation { path: usize, step: usize, message: String },
    /// Strategy violates the jump admissibility constraint at a default.
    Admissibility { path: usize, step: usize, value: f64 },
    /// Regression failure inside the backward solver.
    Regression { step: usize, message: String },
    /// Solver iterate escaped the declared bound.
    Divergence { step: usize, max_abs: f64, bound: f64 },
    /// Filtering failure, located at a time step.
    Filter { step: usize, message: String },
    /// Pricing-level failure (non-positive value, bad claim, ...).
    Pricing { message: String },
    /// A non-finite number surfaced where a finite one is required.
    NonFinite { context: &'static str },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::InvalidModel { field, message } => {
                write!(f, "invalid model: {field}: {message}")
            }
            EngineError::Simulation { path, step, message } => {
                write!(f, "simulation failed at path {path}, step {step}: {message}")
            }
            EngineError::Admissibility { path, step, value } => write!(
                f,
                "inadmissible strategy at path {path}, step {step}: 1 + pi'beta = {value} < 0 at a default"
            ),
            EngineError::Regression { step, message } => {
                write!(f, "regression failed at step {step}: {message}")
            }
            EngineError::Divergence { step, max_abs, bound } => write!(
                f,
                "solver diverged at step {step}: |Y| = {max_abs} exceeds 10x declared bound {bound}"
            ),
            EngineError::Filter { step, message } => {
                write!(f, "filter failed at step {step}: {message}")
            }
            EngineError::Pricing { message } => write!(f, "pricing failed: {message}"),
            EngineError::NonFinite { context } => {
                write!(f, "non-finite value encountered in {context}")
            }
        }
    }
}

impl core::error::Error for EngineError {}

pub type Result<T> = core::result::Result<T, EngineError>;

use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by the dispatch library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("reduced susceptance matrix is singular (network disconnected: bus {bus} unreachable from slack)")]
    Disconnected { bus: usize },

    #[error("case failed validation:\n{0}")]
    InvalidCase(ValidationReport),

    #[error("solver backend error: {0}")]
    Backend(String),

    #[error("pattern budget exceeded: {patterns} patterns needed, limit is {limit}")]
    BudgetExceeded { patterns: u128, limit: u64 },

    #[error("every complementarity pattern is infeasible")]
    AllPatternsInfeasible,

    #[error("solution and oracle were computed on different cases ({left} vs {right})")]
    CaseMismatch { left: String, right: String },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("line {line}: {message}")]
    Matpower { line: usize, message: String },

    #[error("could not generate an instance for target {target} after {attempts} attempts")]
    TargetingFailed { target: String, attempts: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

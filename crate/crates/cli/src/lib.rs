//! Command-line front end for extreme-point certification.
//!
//! Exit codes: 0 when a verdict was computed, 1 when an assertion or a
//! certificate check failed, 2 for unreadable or malformed input, 3 when the
//! input state is not a member of the prescribed set.

pub mod certificate;
pub mod commands;
pub mod files;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("membership error: {0}")]
    Membership(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("certificate verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) | CliError::Verification(_) => 1,
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Membership(_) => 3,
        }
    }
}

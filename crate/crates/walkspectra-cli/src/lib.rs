//! Config ingestion, named-walk presets, command dispatch, and report
//! emission. The binary is a thin wrapper over this crate so tests can
//! drive the same paths in-process.

pub mod config;
pub mod presets;
pub mod report;
pub mod run;

use std::fmt;
use walkspectra::error::Error;
use walkspectra::lattice::UnitarityReport;

/// Failure classes mapped onto exit codes: config errors (2), library
/// preconditions and diagnostics (3), internal numeric failures (4).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    NotUnitary {
        report: UnitarityReport,
        tol: f64,
    },
    Diagnostic(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::NotUnitary { .. } => 2,
            CliError::Diagnostic(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::NotUnitary { report, tol } => write!(
                f,
                "config error: coins fail the unitarity relations (max residual {:.3e} > tol {:.3e})",
                report.max_residual, tol
            ),
            CliError::Diagnostic(msg) => write!(f, "{msg}"),
            CliError::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(msg) => CliError::Numeric(msg),
            other => CliError::Diagnostic(other.to_string()),
        }
    }
}

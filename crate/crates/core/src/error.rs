use std::fmt;

use thiserror::Error;

use crate::solver::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a time integration stopped before reaching its horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbortReason {
    /// sup-norm exceeded the guard factor times the initial sup-norm, or a sample went non-finite
    BlowUp { t: f64, sup_norm: f64 },
    /// mass fraction in the outer shell exceeded the wall threshold
    Wall { t: f64, boundary_mass: f64 },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::BlowUp { t, sup_norm } => {
                write!(f, "blow-up guard tripped at t = {t} (sup-norm {sup_norm:e})")
            }
            AbortReason::Wall { t, boundary_mass } => write!(
                f,
                "truncation wall reached at t = {t} (boundary mass fraction {boundary_mass:e})"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure at index {index}: {detail}")]
    Convergence { index: usize, detail: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("run aborted: {reason}")]
    Aborted {
        reason: AbortReason,
        partial: Box<Trajectory>,
    },

    #[error("config error at line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failure classes, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureClass {
    Config,
    Numerics,
    NonConvergence,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Config => 2,
            FailureClass::Numerics => 3,
            FailureClass::NonConvergence => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> FailureClass {
        match self {
            Error::ConfigLine { .. } | Error::Config(_) | Error::InvalidParams(_) | Error::Io(_) => {
                FailureClass::Config
            }
            Error::Convergence { .. } | Error::NotConverged(_) => FailureClass::NonConvergence,
            Error::Domain(_) | Error::GridMismatch(_) | Error::Numerics(_) | Error::Aborted { .. } => {
                FailureClass::Numerics
            }
        }
    }
}

use thiserror::Error;

use crate::analysis::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The model is evaluated at or above the oscillation threshold.
    #[error("pump power {:.3} mW is at or above threshold {:.3} mW", power_w * 1e3, threshold_w * 1e3)]
    AboveThreshold { power_w: f64, threshold_w: f64 },

    /// Several pump powers in a sweep are at or above threshold.
    #[error("{} pump power(s) at or above threshold {:.3} mW", powers_w.len(), threshold_w * 1e3)]
    PowersAboveThreshold {
        powers_w: Vec<f64>,
        threshold_w: f64,
    },

    /// Physically meaningless input (non-positive variance, shot below dark, ...).
    #[error("{0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing required header `{0}`")]
    MissingHeader(&'static str),

    #[error("traces do not overlap: {0}")]
    NoOverlap(String),

    #[error("objective is flat in the free parameters (no pumped data points?)")]
    FlatObjective,

    #[error("{free} free parameters need more than {points} data points")]
    Underdetermined { free: usize, points: usize },

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by physically invalid operating points rather
    /// than malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::AboveThreshold { .. }
                | Error::PowersAboveThreshold { .. }
                | Error::Domain(_)
                | Error::FlatObjective
                | Error::NotConverged { .. }
        )
    }
}

use alloc::string::String;

/// Failures raised by the tracking core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance lost positive semi-definiteness (eigenvalue {eigenvalue:e})")]
    NotPositiveSemiDefinite { eigenvalue: f64 },

    #[error("innovation covariance is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("{name} = {value} is outside the function domain")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    /// True for failures of the floating point machinery rather than of the
    /// inputs or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveSemiDefinite { .. } | Error::IllConditioned { .. }
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

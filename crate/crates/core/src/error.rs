use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mean reward out of range: action {index} has mean {mean}")]
    MeanRewardOutOfRange { index: usize, mean: f64 },

    #[error("action index {index} out of range for {len} actions")]
    ActionIndexOutOfRange { index: usize, len: usize },

    #[error("empty action set")]
    EmptyActionSet,

    #[error("covariance factorization failed: matrix is not positive definite")]
    NotPositiveDefinite,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

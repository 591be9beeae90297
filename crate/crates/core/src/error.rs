use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The covariance matrix could not be factorized even after jitter.
    #[error("ill-conditioned data: points {first} and {second} are {distance:e} apart and make the covariance singular")]
    IllConditioned {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("candidate set exhausted: every candidate coincides with an observed point")]
    ExhaustedCandidates,

    #[error("resource limit: {requested} candidate points requested, cap is {cap}")]
    ResourceLimit { requested: f64, cap: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

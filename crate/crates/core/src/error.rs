use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range where the object is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A gauge descriptor does not describe a smooth convex unit sphere.
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    /// The grid cannot represent the requested object; `required_n_side` is a
    /// side count that would.
    #[error("grid under-resolved: {reason} (required N_side >= {required_n_side})")]
    UnderResolved {
        reason: String,
        required_n_side: usize,
    },

    /// API misuse, e.g. combining pieces built for different dyadic levels.
    #[error("usage error: {0}")]
    Usage(String),

    /// A stated hypothesis (of an experiment or lemma) is not met by the input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Numerical breakdown (singular system, non-convergent iteration).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

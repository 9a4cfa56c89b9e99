use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("constraint kind {0} requires a feature graph")]
    MissingGraph(&'static str),

    #[error("invalid feature graph: {0}")]
    InvalidGraph(String),

    /// The level set is empty: a point violates the constraint while its
    /// subgradient vanishes.
    #[error("constraint level set is empty (violation {violation:e} with zero subgradient)")]
    InfeasibleConstraint { violation: f64 },

    /// Two half-spaces handed to the Q operator do not intersect.
    #[error("half-spaces do not intersect")]
    InconsistentHalfSpaces,

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("{path}, line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

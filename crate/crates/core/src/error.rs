use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// The shaping density is too peaked for the alphabet (`d_min <= 0`) or vanishes on every
    /// candidate point.
    #[error("degenerate shaping: {0}")]
    DegenerateShaping(String),

    #[error("invalid noise mixture: {0}")]
    InvalidMixture(String),

    #[error("near-singular matrix: {0}")]
    NearSingular(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid channel model: {0}")]
    InvalidModel(String),
}

impl Error {
    /// True for failures of the linear algebra rather than of the inputs' validity.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NearSingular(_) | Error::NumericalFailure(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

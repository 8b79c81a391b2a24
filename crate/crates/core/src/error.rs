use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Discrete phase space needs an odd dimension of at least 3.
    #[error("dimension {0} is not an odd integer >= 3")]
    InvalidDimension(usize),

    #[error("phase-space point ({a}, {a_prime}) is out of range for dimension {n}")]
    InvalidIndex { n: usize, a: usize, a_prime: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("minimum eigenvalue {min:e} is below the positivity floor {floor:e}")]
    NotPositive { min: f64, floor: f64 },

    /// The document parsed but does not describe a matrix of the declared shape.
    #[error("malformed state: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid detector state: {0}")]
    InvalidFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("closed forms require equal energy gaps (got {omega1} and {omega2})")]
    UnequalGaps { omega1: f64, omega2: f64 },

    #[error("quadrature did not reach tolerance {target:e}: best estimate {estimate:e}")]
    QuadratureTolerance { estimate: f64, target: f64 },

    #[error("optimizer failed: {0}")]
    Bracket(String),
}

impl Error {
    /// Errors that come from reading a document rather than from the physics.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Json(_) | Error::Schema(_))
    }
}

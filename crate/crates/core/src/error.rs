use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order {order} exceeds the configured maximum order {max}")]
    OrderOverflow { order: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid ensemble parameters: {0}")]
    InvalidParameters(String),

    #[error(
        "symbol is not real on the unit circle (max |s_l - s_-l| = {asymmetry:e}); \
         C1 test functions need s_l = s_-l, use a polynomial f for non-symmetric symbols"
    )]
    NonSymmetricSymbol { asymmetry: f64 },

    #[error("unbounded-operator mode: no operator norm bound is available for this matrix")]
    UnboundedOperator,

    #[error("|z| = {z} is outside the admissible radius 1/(3 ||B||) = {radius}")]
    OutsideRadius { z: f64, radius: f64 },

    #[error("window diagonals are not constant: max deviation {deviation:e} > tol {tol:e}")]
    NotLaurent { deviation: f64, tol: f64 },

    #[error("finite sections did not converge: {0}")]
    SectionNotConverged(String),

    #[error("loss of orthonormality {residual:e} exceeds {limit:e}; use fewer degrees or higher precision")]
    Orthonormality { residual: f64, limit: f64 },

    #[error("kernel is not a projection: {0}")]
    NotProjection(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

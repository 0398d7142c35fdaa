use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({re}, {im}) is not inside the open unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("hyperbolic radius {rho} exceeds the lift limit {max}")]
    RhoTooLarge { rho: f64, max: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation undefined for the zero field")]
    ZeroField,

    #[error("nonlinearity check failed: {0}")]
    Nonlinearity(String),

    #[error("k = {k}: plateau radius {kink_rho:e} is below the finest grid radius {finest:e}")]
    Unresolved { k: u64, kink_rho: f64, finest: f64 },

    #[error("window norm squared {norm_sq} is not below 1")]
    NormTooLarge { norm_sq: f64 },

    #[error("linear solve did not converge: relative residual {residual:e}")]
    SolverFailed { residual: f64 },

    #[error("covering candidate set would hold {count} points (cap {cap})")]
    TooManyCandidates { count: u64, cap: u64 },

    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {quantity} returned at the evaluation point")]
    Evaluation { quantity: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// `J^T c` vanishes, so there is no normal step to compute.
    #[error("degenerate input: J^T c is zero")]
    DegenerateInput,

    #[error("KKT system is numerically singular")]
    Factorization,

    #[error(
        "tangential subsolver stopped after {iterations} iterations \
         (stationarity {stationarity:.3e}, feasibility {feasibility:.3e})"
    )]
    Subsolver {
        iterations: usize,
        stationarity: f64,
        feasibility: f64,
    },

    #[error("{what} check failed at index {index}: analytic {analytic:.6e}, finite difference {numeric:.6e}")]
    DerivativeCheck {
        what: &'static str,
        index: String,
        analytic: f64,
        numeric: f64,
    },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

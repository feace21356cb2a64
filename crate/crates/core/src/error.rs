use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// The Gram matrix is (numerically) singular: two or more of the unit
    /// vectors are linearly dependent.
    #[error(
        "rank-deficient Gram matrix at index {index}: squared diagonal {residual:e} below {tolerance:e} (coincident configuration)"
    )]
    RankDeficient {
        index: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("quadrature did not converge: value {value}, error estimate {error_estimate:e} exceeds {tolerance:e}")]
    QuadratureNonConvergence {
        value: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("root finder did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    RootNonConvergence {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("leading coefficient vanishes; polynomial degree would deflate")]
    DegreeDeflation,

    #[error("grid too coarse for order-{order} derivative at r = {r}: need spacing <= {required_spacing}")]
    GridTooCoarse {
        order: u8,
        r: f64,
        required_spacing: f64,
    },

    #[error("insufficient samples: got {got}, need at least {floor}")]
    InsufficientSamples { got: usize, floor: usize },

    #[error("basis dimension binomial({n_plus_m}, {m}) overflows")]
    Overflow { n_plus_m: u64, m: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistical self-test failed: {0}")]
    SelfTest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub fn config(detail: impl Into<String>) -> Self {
        Error::Config(detail.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain { .. } | Error::InsufficientSamples { .. } => 2,
            Error::RankDeficient { .. } | Error::Overflow { .. } | Error::GridTooCoarse { .. } => 2,
            Error::QuadratureNonConvergence { .. }
            | Error::RootNonConvergence { .. }
            | Error::DegreeDeflation => 3,
            Error::SelfTest(_) => 4,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

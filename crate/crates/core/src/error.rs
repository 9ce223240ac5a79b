use thiserror::Error;

/// Errors raised by the calculus.
///
/// Every variant maps onto a stable machine-readable code (see [`Error::code`])
/// and a process exit class (see [`Error::is_usage`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or configuration supplied by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Bessel order below -1/2.
    #[error("unsupported Bessel order {0}; orders below -1/2 are not supported")]
    UnsupportedOrder(f64),

    /// Finite-difference step too large for the evaluation point.
    #[error("step too large: x = {x} must exceed 2h = {}", 2.0 * .h)]
    StepTooLarge { x: f64, h: f64 },

    /// A function lives on a different grid than the one the operation expects.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A ratio whose denominator vanishes.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// A multiplier symbol produced a non-finite value on the spectral grid.
    #[error("symbol evaluation failed: {0}")]
    Evaluation(String),

    /// A quadrature or table construction failed its self-check.
    #[error("construction failed: {0}")]
    Construction(String),

    /// The inversion constant failed its calibration check.
    #[error("normalization calibration failed: {0}")]
    Calibration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Domain(_) => "domain",
            Error::UnsupportedOrder(_) => "unsupported_order",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::UndefinedRatio(_) => "undefined_ratio",
            Error::Evaluation(_) => "evaluation",
            Error::Construction(_) => "construction",
            Error::Calibration(_) => "calibration",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::GridMismatch(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

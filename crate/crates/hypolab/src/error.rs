use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("inconsistent density: quadrature gives {found}, expected {expected}")]
    InconsistentDensity { expected: f64, found: f64 },

    #[error("fixed-point iteration diverged after {iterations} iterations (last residual {last:.3e})")]
    IterationDiverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("stability violation: {0}")]
    Stability(String),

    #[error("blow-up detected at t = {last_good_time}")]
    BlowUp { last_good_time: f64 },

    #[error("positivity violated: 1 + h = {value:.3e} at x = {x}, v = {v}")]
    Positivity { x: f64, v: f64, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use thiserror::Error;

/// One step of the adaptive Hurst iteration, kept in `f64` so it can travel
/// inside [`Error`] regardless of the scalar type used for the computation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub kappa: f64,
    pub k: usize,
    pub ratio: f64,
    pub h: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hurst parameter must lie strictly inside (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "circulant embedding is not nonnegative: most negative eigenvalue {min_eigenvalue:e} \
         (largest {max_eigenvalue:e})"
    )]
    Embedding { min_eigenvalue: f64, max_eigenvalue: f64 },

    #[error("window of size {k} does not fit into {available} increments")]
    WindowTooLarge { k: usize, available: usize },

    #[error("index {index} with window {k} overruns {len} increments")]
    Range { index: usize, k: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("adaptive estimation failed after {} iteration(s): {source}", trace.len())]
    Estimation {
        #[source]
        source: Box<Error>,
        trace: Vec<IterationRecord>,
    },

    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("SingularMatrix: pivot {pivot:e} at row {index} below tolerance {tolerance:e}")]
    SingularMatrix {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("DegenerateThreshold: {0}")]
    DegenerateThreshold(String),

    #[error("EmptyGrid: every grid combination yields a zero score")]
    EmptyGrid,

    #[error("RankExhausted: no valid component could be built (stopped at component {component})")]
    RankExhausted { component: usize },

    #[error("NoConvergence: coordinate descent stopped after {iterations} sweeps (last change {last_change:e})")]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        iterate: Vec<f64>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ParseError at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the numerics rather than by inputs or files.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::DegenerateThreshold(_)
                | Error::EmptyGrid
                | Error::RankExhausted { .. }
                | Error::NoConvergence { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. } | Error::Json(_))
    }
}

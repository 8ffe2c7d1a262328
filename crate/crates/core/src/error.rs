use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("room too small for the requested path: residual boundary violation {residual:.4} m")]
    Infeasible { residual: f64 },

    #[error("non-finite force between pedestrian {a} and {b}")]
    NonFiniteForce { a: u64, b: String },

    #[error("no reachable gate: all anticipated costs are infinite")]
    UnreachableGates,

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("empty observation set")]
    EmptyObservations,

    #[error("gate sets differ: observed {observed}, simulated {simulated}")]
    GateMismatch { observed: usize, simulated: usize },

    #[error("scheme mismatch: state uses `{actual}`, update requires `{expected}`")]
    SchemeMismatch {
        expected: &'static str,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state must have at least one component")]
    EmptyState,

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("step size underflow at t = {t} (h = {h:e}); problem too stiff for the step budget")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} exceeded")]
    StepBudget(usize),

    #[error("{scheme}, stage {stage}: {source}")]
    Stage {
        scheme: String,
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("finite-difference estimate is noise dominated (relative change {change:.3} under epsilon doubling)")]
    NoisyDerivative { change: f64 },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("CFL violation: dt = {dt} exceeds admissible {admissible}")]
    Cfl { dt: f64, admissible: f64 },

    #[error("unknown {kind} identifier `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps `self` with the scheme name and stage index it came from.
    pub fn in_stage(self, scheme: impl Into<String>, stage: usize) -> Self {
        Error::Stage {
            scheme: scheme.into(),
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the caller's input rather than the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::UnknownId { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Io { .. } => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

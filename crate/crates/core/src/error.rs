use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("state out of domain: {0}")]
    Domain(String),

    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("truncation cap {cap} too small: row n1={n1} still prefers admission at n2={}", cap - 1)]
    CapTooSmall { n1: usize, cap: usize },

    #[error("admit set of row n1={n1} is not a prefix: rejects at n2={reject_at} but admits at n2={admit_at}")]
    NonThresholdStructure {
        n1: usize,
        reject_at: usize,
        admit_at: usize,
    },

    #[error("threshold bound violated at n1={n1}: {detail}")]
    BoundViolated { n1: usize, detail: String },

    #[error("event {event:?} is infeasible in state ({n1}, {n2})")]
    InfeasibleEvent {
        event: crate::model::Event,
        n1: usize,
        n2: usize,
    },

    #[error("grid shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("solve failed for R={reward}, lambda2={lambda2}, mu2={mu2}: {source}")]
    Sweep {
        reward: f64,
        lambda2: f64,
        mu2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the input document rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Json(_) | Error::Csv(_) => true,
            Error::Sweep { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::Domain(_) => "DomainError",
            Error::NotConverged { .. } => "NotConverged",
            Error::CapTooSmall { .. } => "CapTooSmall",
            Error::NonThresholdStructure { .. } => "NonThresholdStructure",
            Error::BoundViolated { .. } => "BoundViolated",
            Error::InfeasibleEvent { .. } => "InfeasibleEvent",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::Diverged { .. } => "Diverged",
            Error::Sweep { .. } => "SweepError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "ConfigError",
            Error::Csv(_) => "ConfigError",
        }
    }
}

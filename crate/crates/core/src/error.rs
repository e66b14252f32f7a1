use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code categories:
/// configuration problems exit 2, I/O problems exit 3, everything else 4.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("point ({x}, {y}) lies outside the field")]
    OutOfField { x: f64, y: f64 },

    #[error("segment {segment} has no sensor nodes; {node_count} nodes cannot populate {segments} segments")]
    UnderPopulated {
        segment: usize,
        node_count: usize,
        segments: usize,
    },

    #[error("cluster for segment {segment} has no alive members")]
    DeadCluster { segment: usize },

    #[error("relay proportion denominator evaluates to zero")]
    SingularFormula,

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown figure id `{id}`; valid ids: {valid}")]
    UnknownFigure { id: String, valid: String },

    #[error(
        "figure `{figure}` needs cell ({protocol}, {relays} relays), which is not in the plan"
    )]
    MissingCell {
        figure: String,
        protocol: String,
        relays: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv write error: {0}")]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        SimError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code category for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config { .. } | SimError::Parse(_) | SimError::UnknownFigure { .. } => 2,
            SimError::Io(_) | SimError::Csv(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Anchor geometry too degenerate to solve: the normal matrix of the
    /// linearized system is singular or nearly so (collinear anchors).
    #[error("degenerate anchor geometry: condition number {condition:.3e} exceeds {limit:.1e}")]
    Geometry { condition: f64, limit: f64 },

    /// No sample close enough in time to the requested alignment instant.
    #[error("no sample for beacon {beacon_id:?} within {max_staleness_ms} ms of t={at_ms} ms")]
    StaleBeacon {
        beacon_id: String,
        at_ms: u64,
        max_staleness_ms: u64,
    },

    /// A ReLU pre-activation sits too close to its kink for a central
    /// finite difference to be trustworthy; perturb the input and retry.
    #[error("ReLU pre-activation {value:.3e} within {margin:.1e} of zero; perturb the input and retry")]
    KinkProximity { value: f64, margin: f64 },

    /// A stratification label has fewer samples than requested folds.
    #[error("label {label:?} has {count} samples but {folds} folds were requested")]
    LabelTooSmall {
        label: String,
        count: usize,
        folds: usize,
    },

    /// Malformed record in an input file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

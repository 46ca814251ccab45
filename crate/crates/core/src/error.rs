use thiserror::Error;

/// Errors produced by basis construction, filter synthesis and order selection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for window of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// The column-deleted constraint system has fewer independent training
    /// samples than unknowns.
    #[error("singular constraint system: order {order} cannot be fitted from {training} training samples")]
    SingularSystem { order: usize, training: usize },

    #[error("degenerate leverage {leverage} at sample {index} (order {order})")]
    DegenerateLeverage { index: usize, order: usize, leverage: f64 },

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("unknown order selector `{0}`")]
    UnknownSelector(String),

    #[error("implementations disagree at N={window_len}: relative difference {rel_diff:e}")]
    ImplementationMismatch { window_len: usize, rel_diff: f64 },
}

pub type Result<T, E = SgError> = std::result::Result<T, E>;

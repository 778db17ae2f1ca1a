use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: need 1 <= k < n, got n={n}, k={k}")]
    InvalidParams { n: usize, k: usize },

    #[error("opinion x_{} is not finite", index + 1)]
    NonFinite { index: usize },

    #[error("operation requires k=1, got k={k}")]
    KNotOne { k: usize },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("step rejected at t={t} with h={h}: {reason}")]
    StepRejected { t: f64, h: f64, reason: String },

    #[error("cluster of size {size} is below the clusterization floor k+1={min}")]
    ClusterTooSmall { size: usize, min: usize },

    #[error("cannot split a cluster of size {size}: need at least 2k+2={min} members")]
    SplitTooSmall { size: usize, min: usize },

    #[error("invalid split target: {0}")]
    InvalidSplit(String),

    #[error("cannot remove agent {}: k={k} requires at least {} agents to remain", agent + 1, k + 1)]
    RemovalInvalid { agent: usize, k: usize },

    #[error("agent index {} out of range for n={n}", index + 1)]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("trajectory has fewer than two samples")]
    EmptyTrajectory,

    #[error("malformed trajectory file: {0}")]
    BadTrajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

/// Errors produced by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("edge {edge} references unknown endpoint key `{key}`")]
    UnknownEndpointKey { edge: usize, key: String },

    #[error("duplicate entity key `{0}`")]
    DuplicateEntityKey(String),

    #[error("inconsistent {what} dimension: expected {expected}, found {found}")]
    InconsistentDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("point cloud needs at least 2 edges, graph has {0}")]
    TooFewEdges(usize),

    #[error("selection contains no labeled edges")]
    EmptySelection,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("forward cache was produced for different network parameters")]
    StaleCache,

    #[error("training split contains a single class")]
    SingleClassSplit,

    #[error("anomaly proportion {target} unreachable with {normal} normal records")]
    TargetUnreachable { target: f64, normal: usize },

    #[error("both normal and anomalous records are required")]
    MissingClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;

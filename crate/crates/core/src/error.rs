use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One rejected entry of a label submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelRejection {
    pub id: String,
    pub reason: String,
}

impl fmt::Display for LabelRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown sample id `{0}`")]
    UnknownSample(String),
    #[error("sample `{0}` is already labeled")]
    AlreadyLabeled(String),
    #[error("sample `{0}` is not in the unlabeled pool")]
    NotUnlabeled(String),
    #[error("sample `{id}`: label vector has length {got}, expected {expected}")]
    LabelLength {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("sample `{0}`: label entries must be 0 or 1")]
    NonBinaryLabel(String),
    #[error("sample `{0}`: label vector has no positive class, every sample needs at least one")]
    EmptyLabel(String),
    #[error("sample `{0}` has no ground-truth labels")]
    MissingLabels(String),
    #[error("sample `{0}`: features must be finite")]
    NonFiniteFeature(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no labeled samples to train on")]
    NoLabeledSamples,
    #[error("network has no loss-prediction head")]
    MissingHead,
    #[error("cluster count must be at least 1")]
    InvalidClusterCount,
    #[error("need at least {needed} candidates, got {got}")]
    InsufficientCandidates { needed: usize, got: usize },
    #[error("the unlabeled pool is empty")]
    EmptyPool,
    #[error("pool invariant violated: {0}")]
    PoolInvariant(String),
    #[error("no labeling batch is pending")]
    NoPendingBatch,
    #[error("a labeling batch is still pending")]
    BatchPending,
    #[error("label submission rejected: {}", join(.0))]
    Rejected(Vec<LabelRejection>),
    #[error("{}:{line}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(items: &[LabelRejection]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

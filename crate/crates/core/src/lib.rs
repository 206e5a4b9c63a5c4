//! Pool-based active learning for multi-label classification.
//!
//! A small multi-layer perceptron is trained on the labeled part of a
//! [`DatasetPool`]; each round the most informative unlabeled samples are
//! picked by one of three uncertainty scores (learned loss ordering,
//! temporal prediction discrepancy, gradient-embedding magnitude), optionally
//! thinned for diversity with kmeans++ clustering, and then labeled by an
//! oracle or a human annotator.
//!
//! Module map:
//!
//! * [`pool`] and [`metrics`]: samples, pool bookkeeping, F1 scores.
//! * [`nn`]: the classifier, its loss-prediction head and SGD training.
//! * [`query`]: uncertainty scorers, kmeans++ and batch selection.
//! * [`engine`]: the iterative protocol, checkpoints and CSV logs.
//! * [`data`]: synthetic data generation and CSV ingestion.
//! * [`par`]: data-parallel map with a sequential fallback.

pub mod data;
pub mod engine;
mod error;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod pool;
pub mod query;
pub mod rng;

pub use error::{Error, LabelRejection, Result};
pub use metrics::{macro_f1, micro_f1, threshold_predictions, MetricReport, PredictionMatrix};
pub use pool::{DatasetOrigin, DatasetPool, LabelVector, Sample, SampleId, Split};

//! Per-sample multi-label uncertainty scores.
//!
//! Every scorer also returns the sample's penultimate features under the
//! current model; those are the coordinates used for diversity clustering.

use serde::{Deserialize, Serialize};

use crate::metrics::threshold_predictions;
use crate::nn::{forward, ForwardTrace, NetworkParams};
use crate::par;
use crate::pool::{Sample, SampleId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: SampleId,
    pub score: f64,
    pub embedding: Vec<f64>,
}

/// Predicted loss rank from the head.
pub fn score_ll(params: &NetworkParams, samples: &[&Sample]) -> Result<Vec<ScoredSample>> {
    if !params.has_head() {
        return Err(Error::MissingHead);
    }
    par::try_map(samples, |s| {
        let trace = forward(params, &s.features, true)?;
        Ok(ScoredSample {
            id: s.id.clone(),
            score: trace.head_value().ok_or(Error::MissingHead)?,
            embedding: trace.penultimate().to_vec(),
        })
    })
}

/// Outcome of temporal-discrepancy scoring.
#[derive(Clone, Debug, PartialEq)]
pub enum TpdScores {
    Scored(Vec<ScoredSample>),
    /// No previous model exists yet; the caller draws uniformly instead.
    RandomFallback,
}

/// Euclidean distance between the probability vectors of the current and
/// the previous round's model.
pub fn score_tpd(
    now: &NetworkParams,
    prev: Option<&NetworkParams>,
    samples: &[&Sample],
) -> Result<TpdScores> {
    let Some(prev) = prev else {
        return Ok(TpdScores::RandomFallback);
    };
    if now.feature_dim() != prev.feature_dim() {
        return Err(Error::Dimension {
            expected: now.feature_dim(),
            got: prev.feature_dim(),
        });
    }
    if now.num_classes() != prev.num_classes() {
        return Err(Error::Dimension {
            expected: now.num_classes(),
            got: prev.num_classes(),
        });
    }
    let scored = par::try_map(samples, |s| -> Result<ScoredSample> {
        let a = forward(now, &s.features, false)?;
        let b = forward(prev, &s.features, false)?;
        Ok(ScoredSample {
            id: s.id.clone(),
            score: prediction_distance(&a.probs, &b.probs),
            embedding: a.penultimate().to_vec(),
        })
    })?;
    Ok(TpdScores::Scored(scored))
}

pub fn prediction_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Gradient of BCE against the pseudo-label, w.r.t. the last layer, kept in
/// factored form: the weight gradient is `residual ⊗ feature` and the bias
/// gradient is `residual`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEmbedding {
    /// `p - threshold(p, 0.5)`; every entry lies in `(-0.5, 0.5]`.
    pub residual: Vec<f64>,
    /// Penultimate features `h`.
    pub feature: Vec<f64>,
    pub includes_bias: bool,
}

impl GradientEmbedding {
    /// Frobenius norm of the gradient:
    /// `|residual| * sqrt(|h|^2 + [bias])`.
    pub fn norm(&self) -> f64 {
        let r2: f64 = self.residual.iter().map(|v| v * v).sum();
        let h2: f64 = self.feature.iter().map(|v| v * v).sum::<f64>()
            + if self.includes_bias { 1.0 } else { 0.0 };
        r2.sqrt() * h2.sqrt()
    }

    /// The explicit `C x (h_L [+1])` gradient matrix, row-major, bias last.
    pub fn materialize(&self) -> Vec<f64> {
        let width = self.feature.len() + usize::from(self.includes_bias);
        let mut out = Vec::with_capacity(self.residual.len() * width);
        for &r in &self.residual {
            out.extend(self.feature.iter().map(|&h| r * h));
            if self.includes_bias {
                out.push(r);
            }
        }
        out
    }
}

pub fn gradient_embedding(trace: &ForwardTrace, include_bias: bool) -> GradientEmbedding {
    let pseudo = threshold_predictions(&trace.probs, 0.5);
    GradientEmbedding {
        residual: trace
            .probs
            .iter()
            .zip(&pseudo)
            .map(|(&p, &y)| p - f64::from(y))
            .collect(),
        feature: trace.penultimate().to_vec(),
        includes_bias: include_bias,
    }
}

/// Magnitude of the pseudo-label gradient embedding.
pub fn score_mge(
    params: &NetworkParams,
    samples: &[&Sample],
    include_bias: bool,
) -> Result<Vec<ScoredSample>> {
    par::try_map(samples, |s| {
        let trace = forward(params, &s.features, false)?;
        let g = gradient_embedding(&trace, include_bias);
        Ok(ScoredSample {
            id: s.id.clone(),
            score: g.norm(),
            embedding: g.feature,
        })
    })
}

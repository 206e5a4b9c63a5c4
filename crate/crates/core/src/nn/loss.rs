use super::network::PROB_EPS;
use crate::{Error, Result};

/// Multi-label binary cross entropy, summed over classes.
pub fn bce_loss(p: &[f64], y: &[u8]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: p.len(),
        });
    }
    let loss = p
        .iter()
        .zip(y)
        .map(|(&pi, &yi)| {
            let pi = pi.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if yi != 0 {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum();
    Ok(loss)
}

/// `sign` with ties resolved to +1.
pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// True losses and predicted loss ranks of one sample pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankingPair {
    pub losses: (f64, f64),
    pub predicted: (f64, f64),
}

/// Pairwise margin ranking loss
/// `max(0, -sign(l_j - l_k) * (lhat_j - lhat_k) + margin)`.
pub fn ranking_loss(losses: (f64, f64), predicted: (f64, f64), margin: f64) -> f64 {
    let s = sign(losses.0 - losses.1);
    (-s * (predicted.0 - predicted.1) + margin).max(0.0)
}

/// Batch objective: mean BCE plus `lambda * 2/|B|` times the summed ranking
/// losses over the `floor(|B|/2)` disjoint pairs.
pub fn joint_loss(
    batch_losses: &[f64],
    pairs: &[RankingPair],
    lambda: f64,
    margin: f64,
) -> Result<f64> {
    if batch_losses.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch_losses.len();
    if pairs.len() != n / 2 {
        return Err(Error::Shape(format!(
            "{} pairs for a batch of {n}, expected {}",
            pairs.len(),
            n / 2
        )));
    }
    let mean = batch_losses.iter().sum::<f64>() / n as f64;
    if lambda == 0.0 {
        return Ok(mean);
    }
    let ranking: f64 = pairs
        .iter()
        .map(|p| ranking_loss(p.losses, p.predicted, margin))
        .sum();
    Ok(mean + lambda * (2.0 / n as f64) * ranking)
}

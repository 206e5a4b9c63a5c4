use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::backward::batch_gradients;
use super::network::NetworkParams;
use crate::pool::{DatasetPool, SampleId};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Minibatch SGD schedule and joint-loss weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Learning rate is multiplied by this factor once, at `lr_decay_epoch`.
    pub lr_decay_factor: f64,
    pub lr_decay_epoch: usize,
    /// Weight of the ranking term.
    pub lambda: f64,
    /// Ranking margin.
    pub margin: f64,
    /// From this epoch on the head no longer backpropagates into the classifier.
    pub grad_stop_epoch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::scaled(100)
    }
}

impl TrainConfig {
    /// Default schedule for `epochs` epochs: decay by 0.1 at 80% of the run,
    /// head detached at 60%.
    pub fn scaled(epochs: usize) -> Self {
        Self {
            epochs,
            batch_size: 10,
            lr: 0.1,
            lr_decay_factor: 0.1,
            lr_decay_epoch: epochs * 4 / 5,
            lambda: 1.0,
            margin: 1.0,
            grad_stop_epoch: epochs * 3 / 5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return fail("lr must be finite and non-negative");
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return fail("lr_decay_factor must lie in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be finite and non-negative");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return fail("margin must be positive");
        }
        if self.grad_stop_epoch > self.epochs {
            return fail("grad_stop_epoch must not exceed epochs");
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch >= self.lr_decay_epoch {
            self.lr * self.lr_decay_factor
        } else {
            self.lr
        }
    }
}

/// Trains on the labeled samples `ids` of `pool`, starting from `params`.
pub fn train(
    params: &NetworkParams,
    pool: &DatasetPool,
    ids: &[SampleId],
    config: &TrainConfig,
) -> Result<NetworkParams> {
    let data = ids
        .iter()
        .map(|id| {
            let s = pool
                .sample(id.as_str())
                .ok_or_else(|| Error::UnknownSample(id.to_string()))?;
            let y = s
                .true_labels
                .as_deref()
                .ok_or_else(|| Error::MissingLabels(id.to_string()))?;
            Ok((s.features.as_slice(), y))
        })
        .collect::<Result<Vec<_>>>()?;
    train_on(params, &data, config)
}

/// Trains on explicit `(features, labels)` pairs.
///
/// Each epoch reshuffles the sample order; each minibatch is shuffled again
/// on a separate stream and paired consecutively for the ranking term (an odd
/// leftover is dropped from pairing only). Both streams derive from
/// `config.seed`, so the run is fully deterministic.
pub fn train_on(
    params: &NetworkParams,
    data: &[(&[f64], &[u8])],
    config: &TrainConfig,
) -> Result<NetworkParams> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::NoLabeledSamples);
    }
    params.validate()?;
    let mut params = params.clone();
    let mut order_rng = rng::stream(config.seed, Stream::EpochShuffle, 0);
    let mut pair_rng = rng::stream(config.seed, Stream::PairShuffle, 0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let ranking = config.lambda > 0.0 && params.has_head();

    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let lr = config.lr_at(epoch);
        let detach = epoch >= config.grad_stop_epoch;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], &[u8])> = chunk.iter().map(|&i| data[i]).collect();
            let pairs = if ranking {
                let mut slots: Vec<usize> = (0..batch.len()).collect();
                slots.shuffle(&mut pair_rng);
                slots.chunks_exact(2).map(|p| (p[0], p[1])).collect()
            } else {
                Vec::new()
            };
            let step = batch_gradients(
                &params,
                &batch,
                &pairs,
                config.lambda,
                config.margin,
                detach,
            )?;
            params.sgd_step(&step.grads, lr);
        }
    }
    Ok(params)
}

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::pool::{DatasetOrigin, DatasetPool, Sample, Split};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Prototype-mixture multi-label data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub pool_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub max_labels_per_sample: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 5,
            feature_dim: 16,
            pool_size: 600,
            val_size: 100,
            test_size: 300,
            max_labels_per_sample: 3,
            noise_sigma: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Config(
                "num_classes and feature_dim must be positive".into(),
            ));
        }
        if self.pool_size == 0 || self.val_size == 0 || self.test_size == 0 {
            return Err(Error::Config("split sizes must be at least 1".into()));
        }
        if self.max_labels_per_sample == 0 || self.max_labels_per_sample > self.num_classes {
            return Err(Error::Config(
                "max_labels_per_sample must lie in 1..=num_classes".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(
                "noise_sigma must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Unit-norm class prototypes, drawn uniformly on the sphere.
pub fn prototypes(cfg: &SyntheticConfig) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(cfg.seed, Stream::Synthetic, 0);
    (0..cfg.num_classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..cfg.feature_dim)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Each sample picks a label count uniformly in `1..=max_labels_per_sample`,
/// then a uniform subset of that size; its features are the sum of the
/// chosen prototypes plus isotropic Gaussian noise. Samples are split in
/// order into pool (unlabeled), validation and test.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<DatasetPool> {
    cfg.validate()?;
    let protos = prototypes(cfg);
    let mut rng = rng::stream(cfg.seed, Stream::Synthetic, 1);
    let total = cfg.pool_size + cfg.val_size + cfg.test_size;
    let width = total.to_string().len().max(4);
    let mut entries = Vec::with_capacity(total);
    for i in 0..total {
        let k = rng.random_range(1..=cfg.max_labels_per_sample);
        let mut labels = vec![0u8; cfg.num_classes];
        let mut features = vec![0.0; cfg.feature_dim];
        for c in index::sample(&mut rng, cfg.num_classes, k) {
            labels[c] = 1;
            for (f, p) in features.iter_mut().zip(&protos[c]) {
                *f += p;
            }
        }
        for f in &mut features {
            let z: f64 = rng.sample(StandardNormal);
            *f += cfg.noise_sigma * z;
        }
        let split = if i < cfg.pool_size {
            Split::Unlabeled
        } else if i < cfg.pool_size + cfg.val_size {
            Split::Validation
        } else {
            Split::Test
        };
        entries.push((
            Sample::new(format!("s{i:0width$}"), features, Some(labels)),
            split,
        ));
    }
    Ok(DatasetPool::new(cfg.num_classes, cfg.feature_dim, entries)?
        .with_origin(DatasetOrigin::Synthetic))
}

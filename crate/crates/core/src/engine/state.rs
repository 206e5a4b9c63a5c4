use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::metrics::{MetricReport, PredictionMatrix};
use crate::nn::{forward, train, ModelConfig, NetworkParams, TrainConfig};
use crate::par;
use crate::pool::{validate_labels, DatasetPool, LabelVector, Sample, SampleId, Split};
use crate::query::{select_batch, uniform_draw, QuerySpec, Selection, Uncertainty};
use crate::rng::{derive_seed, Stream};
use crate::{Error, LabelRejection, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    /// Fresh seeded parameters every round.
    #[serde(rename = "COLD", alias = "cold")]
    Cold,
    /// Start each round from the previous round's trained parameters.
    #[default]
    #[serde(rename = "WARM", alias = "warm")]
    Warm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub query: QuerySpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub init_mode: InitMode,
    pub max_iterations: usize,
    pub target_labeled: Option<usize>,
    /// Size of the seeded initial labeled draw.
    pub initial_labeled: usize,
    /// Reveal ground truth automatically instead of waiting for an annotator.
    pub oracle: bool,
    /// Seeds the initial draw and, through derivation, every round.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            query: QuerySpec::default(),
            train: TrainConfig::default(),
            model: ModelConfig::default(),
            init_mode: InitMode::Warm,
            max_iterations: 10,
            target_labeled: None,
            initial_labeled: 20,
            oracle: true,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.query.validate()?;
        self.train.validate()?;
        self.model.validate()?;
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets the experiment, training and query seeds together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self.query.seed = seed;
        self
    }

    pub fn uses_head(&self) -> bool {
        self.query.uncertainty == Uncertainty::LossLearning
    }
}

/// Queried ids waiting for annotator labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingBatch {
    pub iteration: usize,
    pub ids: Vec<SampleId>,
    /// Seconds since the Unix epoch.
    pub issued_at: u64,
    pub received: BTreeMap<SampleId, LabelVector>,
}

impl PendingBatch {
    pub fn remaining(&self) -> usize {
        self.ids.len() - self.received.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub iteration: usize,
    pub sample_id: SampleId,
    pub strategy: String,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IterationOutcome {
    /// Oracle labels were applied and the iteration counter advanced.
    Advanced,
    /// A batch is parked for the annotator.
    AwaitingLabels,
    /// The unlabeled pool is empty; nothing was trained.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub accepted: usize,
    pub remaining: usize,
    pub resolved: bool,
}

/// Full state of one active-learning run.
///
/// `tau` is the round about to run. After round `t` completes,
/// `params_now` holds that round's trained model and `params_prev` the model
/// of round `t - 1` (absent after the first round).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlState {
    pub tau: usize,
    pub pool: DatasetPool,
    pub params_now: Option<NetworkParams>,
    pub params_prev: Option<NetworkParams>,
    pub history: Vec<MetricReport>,
    pub selections: Vec<SelectionRecord>,
    pub pending: Option<PendingBatch>,
    pub finished: bool,
    pub config: ExperimentConfig,
}

impl AlState {
    /// Wraps a pool whose labeled set is already populated.
    pub fn new(config: ExperimentConfig, pool: DatasetPool) -> Result<Self> {
        config.validate()?;
        pool.check_invariants()?;
        if pool.test().is_empty() {
            return Err(Error::Config(
                "the pool needs a non-empty test split".into(),
            ));
        }
        Ok(Self {
            tau: 1,
            pool,
            params_now: None,
            params_prev: None,
            history: Vec::new(),
            selections: Vec::new(),
            pending: None,
            finished: false,
            config,
        })
    }

    /// Draws `config.initial_labeled` samples uniformly from the unlabeled
    /// pool, labels them with their ground truth and wraps the result.
    pub fn start(config: ExperimentConfig, pool: DatasetPool) -> Result<Self> {
        config.validate()?;
        let unlabeled: Vec<SampleId> = pool.unlabeled().iter().cloned().collect();
        if config.initial_labeled > unlabeled.len() {
            return Err(Error::Config(format!(
                "initial_labeled = {} exceeds the pool size {}",
                config.initial_labeled,
                unlabeled.len()
            )));
        }
        let draw = uniform_draw(
            &unlabeled,
            config.initial_labeled,
            derive_seed(config.seed, Stream::InitialDraw, 0),
        );
        let labels = pool.reveal_labels(&draw)?;
        let mut pool = pool.move_to_labeled(&labels)?;
        if !config.oracle {
            pool.strip_unlabeled_truth();
        }
        Self::new(config, pool)
    }

    fn network_seed(&self, tau: usize) -> u64 {
        derive_seed(self.config.train.seed, Stream::ModelInit, tau as u64)
    }

    /// A fresh seeded initialization for round `tau`.
    pub fn fresh_params(&self, tau: usize) -> Result<NetworkParams> {
        NetworkParams::init(
            self.pool.feature_dim(),
            self.pool.num_classes(),
            &self.config.model,
            self.config.uses_head(),
            self.network_seed(tau),
        )
    }

    /// Parameters the upcoming round starts training from. Both modes use a
    /// fresh initialization in the first round.
    pub fn round_init_params(&self) -> Result<NetworkParams> {
        match (&self.config.init_mode, &self.params_now) {
            (InitMode::Warm, Some(prev)) if self.tau > 1 => Ok(prev.clone()),
            _ => self.fresh_params(self.tau),
        }
    }

    /// Training configuration of round `tau`: the base schedule with a
    /// per-round seed.
    pub fn round_train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.config.train.seed, Stream::Training, self.tau as u64),
            ..self.config.train.clone()
        }
    }

    pub fn round_query_spec(&self) -> QuerySpec {
        QuerySpec {
            seed: derive_seed(self.config.query.seed, Stream::Query, self.tau as u64),
            ..self.config.query.clone()
        }
    }

    /// Micro/macro F1 of `params` on the test split.
    pub fn evaluate(&self, params: &NetworkParams) -> Result<MetricReport> {
        let test: Vec<&Sample> = self.pool.split_samples(Split::Test);
        let probs = par::try_map(&test, |s| {
            forward(params, &s.features, false).map(|t| t.probs)
        })?;
        let truth: Vec<LabelVector> = test
            .iter()
            .map(|s| {
                s.true_labels
                    .clone()
                    .ok_or_else(|| Error::MissingLabels(s.id.to_string()))
            })
            .collect::<Result<_>>()?;
        MetricReport::from_predictions(
            self.tau,
            self.pool.labeled().len(),
            &PredictionMatrix::new(probs)?,
            &truth,
        )
    }

    pub fn completed_rounds(&self) -> usize {
        self.history.len()
    }

    pub fn strategy(&self) -> String {
        self.config.query.label()
    }

    /// One round: initialize, train on the labeled set, evaluate on the
    /// test split, query a batch, then either apply oracle labels or park
    /// the batch for the annotator.
    pub fn run_iteration(&mut self) -> Result<IterationOutcome> {
        if self.pending.is_some() {
            return Err(Error::BatchPending);
        }
        if self.pool.unlabeled().is_empty() {
            self.finished = true;
            return Ok(IterationOutcome::Exhausted);
        }
        let labeled: Vec<SampleId> = self.pool.labeled().iter().cloned().collect();
        if labeled.is_empty() {
            return Err(Error::NoLabeledSamples);
        }
        let init = self.round_init_params()?;
        let trained = train(&init, &self.pool, &labeled, &self.round_train_config())?;
        let report = self.evaluate(&trained)?;
        self.params_prev = self.params_now.replace(trained);
        self.history.push(report);

        let spec = self.round_query_spec();
        let now = self.params_now.as_ref().ok_or(Error::NoLabeledSamples)?;
        let selection: Selection = select_batch(&spec, now, self.params_prev.as_ref(), &self.pool)?;
        let strategy = self.strategy();
        self.selections
            .extend(selection.picked.iter().map(|(id, score)| SelectionRecord {
                iteration: self.tau,
                sample_id: id.clone(),
                strategy: strategy.clone(),
                score: *score,
            }));
        let ids = selection.ids();

        if self.config.oracle {
            let labels = self.pool.reveal_labels(&ids)?;
            self.pool = self.pool.move_to_labeled(&labels)?;
            self.tau += 1;
            Ok(IterationOutcome::Advanced)
        } else {
            let issued_at = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            self.pending = Some(PendingBatch {
                iteration: self.tau,
                ids,
                issued_at,
                received: BTreeMap::new(),
            });
            Ok(IterationOutcome::AwaitingLabels)
        }
    }

    /// Problems with a proposed submission, one per offending id.
    pub fn check_submission(
        &self,
        labels: &BTreeMap<SampleId, LabelVector>,
    ) -> Result<Vec<LabelRejection>> {
        let pending = self.pending.as_ref().ok_or(Error::NoPendingBatch)?;
        let c = self.pool.num_classes();
        let mut problems = Vec::new();
        for (id, y) in labels {
            let reason = if !pending.ids.contains(id) {
                Some("not part of the pending batch".to_owned())
            } else if pending.received.contains_key(id) {
                Some("already labeled in this batch".to_owned())
            } else {
                validate_labels(id.as_str(), y, c)
                    .err()
                    .map(|e| e.to_string())
            };
            if let Some(reason) = reason {
                problems.push(LabelRejection {
                    id: id.to_string(),
                    reason,
                });
            }
        }
        Ok(problems)
    }

    /// Records annotator labels for the pending batch. The submission is
    /// applied atomically: any invalid entry rejects all of it. When the
    /// last label arrives the batch joins the labeled set and `tau`
    /// advances.
    pub fn submit_labels(
        &mut self,
        labels: BTreeMap<SampleId, LabelVector>,
    ) -> Result<SubmitOutcome> {
        let problems = self.check_submission(&labels)?;
        if !problems.is_empty() {
            return Err(Error::Rejected(problems));
        }
        let pending = self.pending.as_mut().ok_or(Error::NoPendingBatch)?;
        let accepted = labels.len();
        pending.received.extend(labels);
        let remaining = pending.remaining();
        if remaining > 0 {
            return Ok(SubmitOutcome {
                accepted,
                remaining,
                resolved: false,
            });
        }
        let received = pending.received.clone();
        self.pool = self.pool.move_to_labeled(&received)?;
        self.pending = None;
        self.tau += 1;
        Ok(SubmitOutcome {
            accepted,
            remaining: 0,
            resolved: true,
        })
    }

    /// Whether the configured stopping rules allow another round.
    pub fn can_continue(&self) -> bool {
        if self.finished || self.history.len() >= self.config.max_iterations {
            return false;
        }
        if let Some(target) = self.config.target_labeled {
            if self.pool.labeled().len() >= target {
                return false;
            }
        }
        !self.pool.unlabeled().is_empty()
    }

    /// Runs oracle rounds until a stopping rule fires.
    pub fn run_to_completion(&mut self) -> Result<()> {
        while self.can_continue() {
            match self.run_iteration()? {
                IterationOutcome::Advanced => {}
                IterationOutcome::Exhausted => break,
                IterationOutcome::AwaitingLabels => {
                    return Err(Error::Config("run_to_completion needs oracle mode".into()))
                }
            }
        }
        if !self.can_continue() {
            self.finished = true;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            query: QuerySpec {
                budget: 5,
                ..QuerySpec::default()
            },
            train: TrainConfig::scaled(10),
            max_iterations: 3,
            initial_labeled: 10,
            ..ExperimentConfig::default()
        }
        .with_seed(4)
    }

    fn small_pool() -> DatasetPool {
        generate_synthetic(&SyntheticConfig {
            pool_size: 60,
            val_size: 5,
            test_size: 30,
            feature_dim: 6,
            num_classes: 3,
            max_labels_per_sample: 2,
            seed: 2,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn oracle_iteration_bookkeeping() {
        let mut state = AlState::start(small_config(), small_pool()).unwrap();
        assert_eq!(state.pool.labeled().len(), 10);
        assert_eq!(state.run_iteration().unwrap(), IterationOutcome::Advanced);
        assert_eq!(state.pool.labeled().len(), 15);
        assert_eq!(state.pool.unlabeled().len(), 45);
        assert_eq!(state.tau, 2);
        assert_eq!(state.history.len(), 1);
        assert_eq!(state.history[0].num_labeled, 10);
        state.pool.check_invariants().unwrap();
    }

    #[test]
    fn initial_draw_too_large() {
        let cfg = ExperimentConfig {
            initial_labeled: 61,
            ..small_config()
        };
        assert!(AlState::start(cfg, small_pool()).is_err());
    }

    #[test]
    fn interactive_batch_lifecycle() {
        let cfg = ExperimentConfig {
            oracle: false,
            ..small_config()
        };
        let mut state = AlState::start(cfg, small_pool()).unwrap();
        assert!(state
            .pool
            .split_samples(Split::Unlabeled)
            .iter()
            .all(|s| s.true_labels.is_none()));
        assert_eq!(
            state.run_iteration().unwrap(),
            IterationOutcome::AwaitingLabels
        );
        assert!(matches!(state.run_iteration(), Err(Error::BatchPending)));
        let ids = state.pending.as_ref().unwrap().ids.clone();
        assert_eq!(ids.len(), 5);

        let wrong_len: BTreeMap<_, _> = [(ids[0].clone(), vec![1, 0, 0, 1])].into();
        assert!(matches!(
            state.submit_labels(wrong_len),
            Err(Error::Rejected(_))
        ));
        let zero: BTreeMap<_, _> = [(ids[0].clone(), vec![0, 0, 0])].into();
        assert!(matches!(state.submit_labels(zero), Err(Error::Rejected(_))));
        let stranger: BTreeMap<_, _> = [(SampleId::from("nope"), vec![1, 0, 0])].into();
        assert!(matches!(
            state.submit_labels(stranger),
            Err(Error::Rejected(_))
        ));

        let first: BTreeMap<_, _> = ids[..4]
            .iter()
            .map(|id| (id.clone(), vec![1, 0, 0]))
            .collect();
        let out = state.submit_labels(first.clone()).unwrap();
        assert_eq!((out.remaining, out.resolved), (1, false));
        assert_eq!(state.tau, 1);
        assert!(matches!(
            state.submit_labels(first),
            Err(Error::Rejected(_))
        ));

        let last: BTreeMap<_, _> = [(ids[4].clone(), vec![0, 1, 1])].into();
        let out = state.submit_labels(last).unwrap();
        assert!(out.resolved);
        assert_eq!(state.tau, 2);
        assert!(state.pending.is_none());
        assert_eq!(state.pool.labeled().len(), 15);
        assert!(matches!(
            state.submit_labels(BTreeMap::new()),
            Err(Error::NoPendingBatch)
        ));
    }

    #[test]
    fn exhaustion_is_terminal() {
        let cfg = ExperimentConfig {
            query: QuerySpec {
                budget: 30,
                ..QuerySpec::default()
            },
            max_iterations: 10,
            ..small_config()
        };
        let mut state = AlState::start(cfg, small_pool()).unwrap();
        state.run_to_completion().unwrap();
        assert!(state.pool.unlabeled().is_empty());
        assert!(state.finished);
        // 10 + 30 + 20 (partial final batch)
        assert_eq!(state.history.len(), 2);
        assert_eq!(state.pool.labeled().len(), 60);
        assert_eq!(state.run_iteration().unwrap(), IterationOutcome::Exhausted);
    }

    #[test]
    fn target_labeled_stops_early() {
        let cfg = ExperimentConfig {
            target_labeled: Some(20),
            max_iterations: 10,
            ..small_config()
        };
        let mut state = AlState::start(cfg, small_pool()).unwrap();
        state.run_to_completion().unwrap();
        assert_eq!(state.pool.labeled().len(), 20);
        assert_eq!(state.history.len(), 2);
    }
}

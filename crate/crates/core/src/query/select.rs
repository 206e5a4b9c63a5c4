use std::cmp::Ordering;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_pp;
use super::uncertainty::{score_ll, score_mge, score_tpd, ScoredSample, TpdScores};
use crate::nn::NetworkParams;
use crate::pool::{DatasetPool, Sample, SampleId, Split};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Uncertainty {
    #[serde(rename = "LL", alias = "ll")]
    LossLearning,
    #[serde(rename = "TPD", alias = "tpd")]
    TemporalDiscrepancy,
    #[serde(rename = "MGE", alias = "mge")]
    GradientMagnitude,
    #[serde(rename = "RANDOM", alias = "random", alias = "Random")]
    Random,
}

impl Uncertainty {
    pub fn tag(self) -> &'static str {
        match self {
            Self::LossLearning => "LL",
            Self::TemporalDiscrepancy => "TPD",
            Self::GradientMagnitude => "MGE",
            Self::Random => "RANDOM",
        }
    }
}

/// Which query function to run and how many samples it may pick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuerySpec {
    pub uncertainty: Uncertainty,
    /// Cluster the top `multiplier * budget` candidates and keep one per cluster.
    pub diversity: bool,
    /// Samples labeled per iteration.
    pub budget: usize,
    /// Candidate-set factor for the diversity step.
    pub multiplier: usize,
    pub seed: u64,
    /// Whether the last layer's bias counts toward the gradient embedding.
    pub include_bias: bool,
}

impl Default for QuerySpec {
    fn default() -> Self {
        Self {
            uncertainty: Uncertainty::GradientMagnitude,
            diversity: true,
            budget: 20,
            multiplier: 3,
            seed: 0,
            include_bias: true,
        }
    }
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.multiplier == 0 {
            return Err(Error::Config("multiplier must be at least 1".into()));
        }
        Ok(())
    }

    /// Human-readable strategy name, e.g. `MGE+Clustering` or `RANDOM`.
    pub fn label(&self) -> String {
        match (self.uncertainty, self.diversity) {
            (Uncertainty::Random, _) => "RANDOM".to_owned(),
            (u, true) => format!("{}+Clustering", u.tag()),
            (u, false) => u.tag().to_owned(),
        }
    }
}

/// Orders by score, highest first, then by id.
pub fn by_score_desc(a: &ScoredSample, b: &ScoredSample) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

/// Uniform draw of `count` ids without replacement.
pub fn uniform_draw(ids: &[SampleId], count: usize, seed: u64) -> Vec<SampleId> {
    let mut rng = rng::stream(seed, Stream::UniformDraw, 0);
    let mut pool = ids.to_vec();
    let count = count.min(pool.len());
    let (chosen, _) = pool.partial_shuffle(&mut rng, count);
    chosen.to_vec()
}

/// Clusters the candidates' embeddings into `b` groups and keeps the most
/// uncertain member of each (ties to the smaller id). When fewer than `b`
/// clusters form, the highest-scored remaining candidates fill the batch.
pub fn diversity_select(scored: &[ScoredSample], b: usize, seed: u64) -> Result<Vec<SampleId>> {
    if b == 0 {
        return Err(Error::InvalidClusterCount);
    }
    if scored.len() < b {
        return Err(Error::InsufficientCandidates {
            needed: b,
            got: scored.len(),
        });
    }
    let points: Vec<Vec<f64>> = scored.iter().map(|s| s.embedding.clone()).collect();
    let clustering = kmeans_pp(&points, b, seed)?;
    let mut best: Vec<Option<usize>> = vec![None; clustering.num_clusters()];
    for (i, &c) in clustering.assignment.iter().enumerate() {
        match best[c] {
            Some(j) if by_score_desc(&scored[j], &scored[i]) != Ordering::Greater => {}
            _ => best[c] = Some(i),
        }
    }
    let mut taken = vec![false; scored.len()];
    let mut out = Vec::with_capacity(b);
    for i in best.into_iter().flatten() {
        taken[i] = true;
        out.push(scored[i].id.clone());
    }
    if out.len() < b {
        let mut rest: Vec<&ScoredSample> = scored
            .iter()
            .zip(&taken)
            .filter(|(_, &t)| !t)
            .map(|(s, _)| s)
            .collect();
        rest.sort_by(|a, b| by_score_desc(a, b));
        out.extend(rest.into_iter().take(b - out.len()).map(|s| s.id.clone()));
    }
    Ok(out)
}

/// Result of one query round.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Chosen ids with their uncertainty score (`None` for uniform draws).
    pub picked: Vec<(SampleId, Option<f64>)>,
    /// Every unlabeled sample's score, in id order; empty for uniform draws.
    pub scored: Vec<(SampleId, f64)>,
    /// Set when a temporal-discrepancy query had no previous model.
    pub random_fallback: bool,
}

impl Selection {
    pub fn ids(&self) -> Vec<SampleId> {
        self.picked.iter().map(|(id, _)| id.clone()).collect()
    }

    fn uniform(ids: Vec<SampleId>, random_fallback: bool) -> Self {
        Self {
            picked: ids.into_iter().map(|id| (id, None)).collect(),
            scored: Vec::new(),
            random_fallback,
        }
    }

    /// Audit rows `iteration,id,strategy,score,selected` for every scored
    /// sample (or every picked one, for uniform draws).
    pub fn write_audit<W: Write>(
        &self,
        out: W,
        iteration: usize,
        strategy: &str,
        header: bool,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if header {
            w.write_record(["iteration", "id", "strategy", "score", "selected"])?;
        }
        let picked: std::collections::BTreeSet<&SampleId> =
            self.picked.iter().map(|(id, _)| id).collect();
        if self.scored.is_empty() {
            for (id, _) in &self.picked {
                w.write_record([
                    iteration.to_string(),
                    id.to_string(),
                    strategy.to_owned(),
                    String::new(),
                    "1".into(),
                ])?;
            }
        } else {
            for (id, score) in &self.scored {
                let flag = if picked.contains(id) { "1" } else { "0" };
                w.write_record([
                    iteration.to_string(),
                    id.to_string(),
                    strategy.to_owned(),
                    format!("{score:.6}"),
                    flag.into(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Chooses up to `spec.budget` unlabeled samples.
///
/// Uncertainty scoring ranks every unlabeled sample; the top
/// `min(multiplier * budget, |U|)` go to the diversity step when it is on,
/// otherwise the top `budget` are taken directly. The temporal-discrepancy
/// strategy without a previous model, and the random strategy, draw
/// uniformly with the query seed.
pub fn select_batch(
    spec: &QuerySpec,
    now: &NetworkParams,
    prev: Option<&NetworkParams>,
    pool: &DatasetPool,
) -> Result<Selection> {
    spec.validate()?;
    let unlabeled: Vec<&Sample> = pool.split_samples(Split::Unlabeled);
    if unlabeled.is_empty() {
        return Err(Error::EmptyPool);
    }
    let ids: Vec<SampleId> = unlabeled.iter().map(|s| s.id.clone()).collect();
    if ids.len() <= spec.budget {
        return Ok(Selection::uniform(ids, false));
    }
    let mut scored = match spec.uncertainty {
        Uncertainty::Random => {
            return Ok(Selection::uniform(
                uniform_draw(&ids, spec.budget, spec.seed),
                false,
            ))
        }
        Uncertainty::LossLearning => score_ll(now, &unlabeled)?,
        Uncertainty::GradientMagnitude => score_mge(now, &unlabeled, spec.include_bias)?,
        Uncertainty::TemporalDiscrepancy => match score_tpd(now, prev, &unlabeled)? {
            TpdScores::Scored(s) => s,
            TpdScores::RandomFallback => {
                return Ok(Selection::uniform(
                    uniform_draw(&ids, spec.budget, spec.seed),
                    true,
                ));
            }
        },
    };
    let all_scores: Vec<(SampleId, f64)> = scored.iter().map(|s| (s.id.clone(), s.score)).collect();
    scored.sort_by(by_score_desc);

    let picked_ids = if spec.diversity {
        let candidates = spec
            .multiplier
            .saturating_mul(spec.budget)
            .min(scored.len());
        scored.truncate(candidates);
        diversity_select(
            &scored,
            spec.budget,
            rng::derive_seed(spec.seed, Stream::Clustering, 0),
        )?
    } else {
        scored
            .iter()
            .take(spec.budget)
            .map(|s| s.id.clone())
            .collect()
    };
    let score_of = |id: &SampleId| scored.iter().find(|s| &s.id == id).map(|s| s.score);
    Ok(Selection {
        picked: picked_ids
            .iter()
            .map(|id| (id.clone(), score_of(id)))
            .collect(),
        scored: all_scores,
        random_fallback: false,
    })
}

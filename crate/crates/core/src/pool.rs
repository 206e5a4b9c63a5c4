//! Samples and the labeled/unlabeled/validation/test partition.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A binary class-membership vector; every entry is 0 or 1.
pub type LabelVector = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(String);

impl SampleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for SampleId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for SampleId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Checks that `labels` is a valid multi-label vector over `num_classes`
/// classes: right length, binary entries, at least one positive.
pub fn validate_labels(id: &str, labels: &[u8], num_classes: usize) -> Result<()> {
    if labels.len() != num_classes {
        return Err(Error::LabelLength {
            id: id.to_owned(),
            got: labels.len(),
            expected: num_classes,
        });
    }
    if labels.iter().any(|&v| v > 1) {
        return Err(Error::NonBinaryLabel(id.to_owned()));
    }
    if labels.iter().all(|&v| v == 0) {
        return Err(Error::EmptyLabel(id.to_owned()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: SampleId,
    pub features: Vec<f64>,
    /// Ground truth; absent for unlabeled samples in an interactive session.
    pub true_labels: Option<LabelVector>,
}

impl Sample {
    pub fn new(
        id: impl Into<SampleId>,
        features: Vec<f64>,
        true_labels: Option<LabelVector>,
    ) -> Self {
        Self {
            id: id.into(),
            features,
            true_labels,
        }
    }

    fn validate(&self, feature_dim: usize, num_classes: usize) -> Result<()> {
        if self.features.len() != feature_dim {
            return Err(Error::Dimension {
                expected: feature_dim,
                got: self.features.len(),
            });
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(self.id.to_string()));
        }
        if let Some(labels) = &self.true_labels {
            validate_labels(self.id.as_str(), labels, num_classes)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Labeled,
    Unlabeled,
    Validation,
    Test,
}

/// Where a pool came from. Synthetic pools get a heatmap thumbnail renderer
/// in the annotation service.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetOrigin {
    Synthetic,
    #[default]
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPool {
    num_classes: usize,
    feature_dim: usize,
    class_names: Vec<String>,
    origin: DatasetOrigin,
    samples: BTreeMap<SampleId, Sample>,
    labeled: BTreeSet<SampleId>,
    unlabeled: BTreeSet<SampleId>,
    validation: BTreeSet<SampleId>,
    test: BTreeSet<SampleId>,
}

impl DatasetPool {
    /// Builds a pool from samples paired with their split. Class names
    /// default to `class_0..class_{C-1}`.
    pub fn new(
        num_classes: usize,
        feature_dim: usize,
        entries: impl IntoIterator<Item = (Sample, Split)>,
    ) -> Result<Self> {
        if num_classes == 0 || feature_dim == 0 {
            return Err(Error::Config(
                "pool needs at least one class and one feature".into(),
            ));
        }
        let mut pool = Self {
            num_classes,
            feature_dim,
            class_names: (0..num_classes).map(|c| format!("class_{c}")).collect(),
            origin: DatasetOrigin::Csv,
            samples: BTreeMap::new(),
            labeled: BTreeSet::new(),
            unlabeled: BTreeSet::new(),
            validation: BTreeSet::new(),
            test: BTreeSet::new(),
        };
        for (sample, split) in entries {
            sample.validate(feature_dim, num_classes)?;
            let id = sample.id.clone();
            if pool.samples.insert(id.clone(), sample).is_some() {
                return Err(Error::PoolInvariant(format!("duplicate sample id `{id}`")));
            }
            pool.set_mut(split).insert(id);
        }
        pool.check_invariants()?;
        Ok(pool)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::Dimension {
                expected: self.num_classes,
                got: names.len(),
            });
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn with_origin(mut self, origin: DatasetOrigin) -> Self {
        self.origin = origin;
        self
    }

    fn set_mut(&mut self, split: Split) -> &mut BTreeSet<SampleId> {
        match split {
            Split::Labeled => &mut self.labeled,
            Split::Unlabeled => &mut self.unlabeled,
            Split::Validation => &mut self.validation,
            Split::Test => &mut self.test,
        }
    }

    /// Disjointness and coverage of the four id sets, plus ground truth on
    /// every labeled, validation and test sample.
    pub fn check_invariants(&self) -> Result<()> {
        let total =
            self.labeled.len() + self.unlabeled.len() + self.validation.len() + self.test.len();
        if total != self.samples.len() {
            return Err(Error::PoolInvariant(format!(
                "{total} ids across splits but {} samples",
                self.samples.len()
            )));
        }
        let sets = [
            (&self.labeled, true),
            (&self.unlabeled, false),
            (&self.validation, true),
            (&self.test, true),
        ];
        let mut seen = BTreeSet::new();
        for (set, needs_truth) in sets {
            for id in set {
                let sample = self.samples.get(id).ok_or_else(|| {
                    Error::PoolInvariant(format!("split references unknown id `{id}`"))
                })?;
                if !seen.insert(id) {
                    return Err(Error::PoolInvariant(format!("id `{id}` is in two splits")));
                }
                if needs_truth && sample.true_labels.is_none() {
                    return Err(Error::MissingLabels(id.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn origin(&self) -> DatasetOrigin {
        self.origin
    }

    pub fn labeled(&self) -> &BTreeSet<SampleId> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<SampleId> {
        &self.unlabeled
    }

    pub fn validation(&self) -> &BTreeSet<SampleId> {
        &self.validation
    }

    pub fn test(&self) -> &BTreeSet<SampleId> {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, id: &str) -> Option<&Sample> {
        self.samples.get(id)
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.samples.values()
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        if self.labeled.contains(id) {
            Some(Split::Labeled)
        } else if self.unlabeled.contains(id) {
            Some(Split::Unlabeled)
        } else if self.validation.contains(id) {
            Some(Split::Validation)
        } else if self.test.contains(id) {
            Some(Split::Test)
        } else {
            None
        }
    }

    /// Samples of a split in id order.
    pub fn split_samples(&self, split: Split) -> Vec<&Sample> {
        let set = match split {
            Split::Labeled => &self.labeled,
            Split::Unlabeled => &self.unlabeled,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        };
        set.iter().map(|id| &self.samples[id]).collect()
    }

    /// Validates one proposed label for an unlabeled sample.
    pub fn check_label(&self, id: &str, labels: &[u8]) -> Result<()> {
        if !self.samples.contains_key(id) {
            return Err(Error::UnknownSample(id.to_owned()));
        }
        if self.labeled.contains(id) {
            return Err(Error::AlreadyLabeled(id.to_owned()));
        }
        if !self.unlabeled.contains(id) {
            return Err(Error::NotUnlabeled(id.to_owned()));
        }
        validate_labels(id, labels, self.num_classes)
    }

    /// Returns a new pool with the given samples moved from unlabeled to
    /// labeled and their labels recorded. All other splits are untouched.
    pub fn move_to_labeled(&self, labels: &BTreeMap<SampleId, LabelVector>) -> Result<Self> {
        for (id, y) in labels {
            self.check_label(id.as_str(), y)?;
        }
        let mut next = self.clone();
        for (id, y) in labels {
            next.unlabeled.remove(id);
            next.labeled.insert(id.clone());
            if let Some(sample) = next.samples.get_mut(id) {
                sample.true_labels = Some(y.clone());
            }
        }
        Ok(next)
    }

    /// Ground-truth labels for `ids`, as an oracle would reveal them.
    pub fn reveal_labels<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a SampleId>,
    ) -> Result<BTreeMap<SampleId, LabelVector>> {
        ids.into_iter()
            .map(|id| {
                let sample = self
                    .samples
                    .get(id)
                    .ok_or_else(|| Error::UnknownSample(id.to_string()))?;
                let y = sample
                    .true_labels
                    .clone()
                    .ok_or_else(|| Error::MissingLabels(id.to_string()))?;
                Ok((id.clone(), y))
            })
            .collect()
    }

    /// Drops ground truth from every unlabeled sample, so that an
    /// interactive session can only learn labels from the annotator.
    pub fn strip_unlabeled_truth(&mut self) {
        for id in &self.unlabeled {
            if let Some(s) = self.samples.get_mut(id) {
                s.true_labels = None;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_pool() -> DatasetPool {
        DatasetPool::new(
            2,
            1,
            vec![
                (
                    Sample::new("a", vec![0.0], Some(vec![1, 0])),
                    Split::Unlabeled,
                ),
                (
                    Sample::new("b", vec![1.0], Some(vec![0, 1])),
                    Split::Unlabeled,
                ),
                (Sample::new("t", vec![2.0], Some(vec![1, 1])), Split::Test),
            ],
        )
        .unwrap()
    }

    fn labels(entries: &[(&str, Vec<u8>)]) -> BTreeMap<SampleId, LabelVector> {
        entries
            .iter()
            .map(|(id, y)| (SampleId::from(*id), y.clone()))
            .collect()
    }

    #[test]
    fn move_one_sample() {
        let pool = small_pool();
        let next = pool.move_to_labeled(&labels(&[("a", vec![1, 0])])).unwrap();
        assert!(next.labeled().contains("a"));
        assert_eq!(next.unlabeled().len(), 1);
        assert!(next.unlabeled().contains("b"));
        assert_eq!(next.test(), pool.test());
        next.check_invariants().unwrap();
    }

    #[test]
    fn move_nothing_is_identity() {
        let pool = small_pool();
        assert_eq!(pool.move_to_labeled(&BTreeMap::new()).unwrap(), pool);
    }

    #[test]
    fn move_errors() {
        let pool = small_pool();
        let err = pool
            .move_to_labeled(&labels(&[("zz", vec![1, 0])]))
            .unwrap_err();
        assert!(err.to_string().contains("zz"));
        assert!(matches!(
            pool.move_to_labeled(&labels(&[("a", vec![1, 0, 1])])),
            Err(Error::LabelLength { .. })
        ));
        assert!(matches!(
            pool.move_to_labeled(&labels(&[("a", vec![0, 0])])),
            Err(Error::EmptyLabel(_))
        ));
        assert!(matches!(
            pool.move_to_labeled(&labels(&[("t", vec![1, 0])])),
            Err(Error::NotUnlabeled(_))
        ));
        let next = pool.move_to_labeled(&labels(&[("a", vec![1, 0])])).unwrap();
        assert!(matches!(
            next.move_to_labeled(&labels(&[("a", vec![1, 0])])),
            Err(Error::AlreadyLabeled(_))
        ));
    }

    #[test]
    fn rejects_overlapping_or_unlabeled_truthless_splits() {
        let dup = DatasetPool::new(
            1,
            1,
            vec![
                (Sample::new("a", vec![0.0], Some(vec![1])), Split::Test),
                (Sample::new("a", vec![0.0], Some(vec![1])), Split::Unlabeled),
            ],
        );
        assert!(dup.is_err());
        let truthless =
            DatasetPool::new(1, 1, vec![(Sample::new("a", vec![0.0], None), Split::Test)]);
        assert!(matches!(truthless, Err(Error::MissingLabels(_))));
        let bad_dim = DatasetPool::new(
            1,
            2,
            vec![(Sample::new("a", vec![0.0], None), Split::Unlabeled)],
        );
        assert!(matches!(bad_dim, Err(Error::Dimension { .. })));
        let nan = DatasetPool::new(
            1,
            1,
            vec![(Sample::new("a", vec![f64::NAN], None), Split::Unlabeled)],
        );
        assert!(matches!(nan, Err(Error::NonFiniteFeature(_))));
    }

    #[test]
    fn strip_truth_only_touches_unlabeled() {
        let mut pool = small_pool();
        pool.strip_unlabeled_truth();
        assert!(pool.sample("a").unwrap().true_labels.is_none());
        assert!(pool.sample("t").unwrap().true_labels.is_some());
        assert!(pool.reveal_labels([&SampleId::from("a")]).is_err());
    }
}

//! Thresholding and F1 scores for multi-label predictions.
//!
//! A class with no positives in either the prediction or the ground truth
//! (TP = FP = FN = 0) scores F1 = 1.0. The same convention applies to the
//! pooled micro score when the whole matrix is negative.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binarizes a probability vector: entry `i` is 1 iff `p[i] > t`.
pub fn threshold_predictions(p: &[f64], t: f64) -> Vec<u8> {
    p.iter().map(|&v| u8::from(v > t)).collect()
}

/// Per-sample class probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrix {
    rows: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(width) = rows.first().map(Vec::len) {
            if rows.iter().any(|r| r.len() != width) {
                return Err(Error::Shape("ragged prediction matrix".into()));
            }
        }
        if rows.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Shape("probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn threshold(&self, t: f64) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| threshold_predictions(r, t))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    tp: u64,
    fp: u64,
    fn_: u64,
}

impl Counts {
    fn add(&mut self, pred: u8, truth: u8) {
        match (pred != 0, truth != 0) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    fn f1(self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

fn check_shapes(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> Result<usize> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} prediction rows vs {} truth rows",
            pred.len(),
            truth.len()
        )));
    }
    let width = truth
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Shape("no rows to evaluate".into()))?;
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if p.len() != width || t.len() != width {
            return Err(Error::Shape(format!(
                "row {i} does not have {width} columns"
            )));
        }
    }
    Ok(width)
}

/// F1 pooled over every sample/class decision.
pub fn micro_f1(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> Result<f64> {
    check_shapes(pred, truth)?;
    let mut counts = Counts::default();
    for (p, t) in pred.iter().zip(truth) {
        for (&a, &b) in p.iter().zip(t) {
            counts.add(a, b);
        }
    }
    Ok(counts.f1())
}

/// Unweighted mean of per-class F1, returned together with the per-class
/// scores.
pub fn macro_f1(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> Result<(f64, Vec<f64>)> {
    let width = check_shapes(pred, truth)?;
    let mut counts = vec![Counts::default(); width];
    for (p, t) in pred.iter().zip(truth) {
        for (c, (&a, &b)) in p.iter().zip(t).enumerate() {
            counts[c].add(a, b);
        }
    }
    let per_class: Vec<f64> = counts.into_iter().map(Counts::f1).collect();
    let mean = per_class.iter().sum::<f64>() / width as f64;
    Ok((mean, per_class))
}

/// Test-set scores after one training round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub iteration: usize,
    pub num_labeled: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

impl MetricReport {
    pub fn from_predictions(
        iteration: usize,
        num_labeled: usize,
        probs: &PredictionMatrix,
        truth: &[Vec<u8>],
    ) -> Result<Self> {
        let pred = probs.threshold(0.5);
        let micro = micro_f1(&pred, truth)?;
        let (macro_, per_class) = macro_f1(&pred, truth)?;
        Ok(Self {
            iteration,
            num_labeled,
            micro_f1: micro,
            macro_f1: macro_,
            per_class_f1: per_class,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_is_strict() {
        assert_eq!(threshold_predictions(&[0.9, 0.2], 0.5), vec![1, 0]);
        assert_eq!(threshold_predictions(&[0.5, 0.5], 0.5), vec![0, 0]);
        assert_eq!(
            threshold_predictions(&[0.51, 0.49, 1.0], 0.5),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn micro_examples() {
        let truth = vec![vec![1, 1], vec![0, 1]];
        assert_eq!(micro_f1(&truth, &truth).unwrap(), 1.0);
        // TP=2, FP=0, FN=1
        assert_eq!(micro_f1(&[vec![1, 0], vec![0, 1]], &truth).unwrap(), 0.8);
        let zeros = vec![vec![0, 0], vec![0, 0]];
        let ones = vec![vec![1, 1], vec![1, 1]];
        assert_eq!(micro_f1(&zeros, &ones).unwrap(), 0.0);
    }

    #[test]
    fn macro_examples() {
        let (m, per) = macro_f1(&[vec![1, 0], vec![1, 0]], &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(per, vec![2.0 / 3.0, 0.0]);
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
        let (m, per) = macro_f1(&[vec![0]], &[vec![0]]).unwrap();
        assert_eq!((m, per), (1.0, vec![1.0]));
        let t = vec![vec![1, 0, 1]];
        assert_eq!(macro_f1(&t, &t).unwrap().0, 1.0);
    }

    #[test]
    fn shape_errors() {
        assert!(micro_f1(&[vec![1]], &[vec![1, 0]]).is_err());
        assert!(macro_f1(&[vec![1]], &[]).is_err());
        assert!(micro_f1(&[], &[]).is_err());
    }

    #[test]
    fn prediction_matrix_validates() {
        assert!(PredictionMatrix::new(vec![vec![0.2, 1.2]]).is_err());
        assert!(PredictionMatrix::new(vec![vec![0.2], vec![0.1, 0.3]]).is_err());
        let m = PredictionMatrix::new(vec![vec![0.7, 0.1]]).unwrap();
        let r = MetricReport::from_predictions(1, 5, &m, &[vec![1, 0]]).unwrap();
        assert_eq!((r.micro_f1, r.macro_f1), (1.0, 1.0));
    }

    fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
        prop::collection::vec(prop::collection::vec(0u8..=1, cols), rows)
    }

    proptest! {
        #[test]
        fn f1_is_permutation_invariant(
            (pred, truth, perm) in (1usize..8, 1usize..5).prop_flat_map(|(r, c)| {
                (matrix(r, c), matrix(r, c), Just((0..r).collect::<Vec<_>>()).prop_shuffle())
            })
        ) {
            let p2: Vec<_> = perm.iter().map(|&i| pred[i].clone()).collect();
            let t2: Vec<_> = perm.iter().map(|&i| truth[i].clone()).collect();
            prop_assert_eq!(micro_f1(&pred, &truth).unwrap(), micro_f1(&p2, &t2).unwrap());
            prop_assert_eq!(macro_f1(&pred, &truth).unwrap(), macro_f1(&p2, &t2).unwrap());
        }

        #[test]
        fn single_class_micro_equals_macro((pred, truth) in (1usize..10).prop_flat_map(|r| (matrix(r, 1), matrix(r, 1)))) {
            prop_assert_eq!(micro_f1(&pred, &truth).unwrap(), macro_f1(&pred, &truth).unwrap().0);
        }

        #[test]
        fn macro_is_mean_of_per_class((pred, truth) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| (matrix(r, c), matrix(r, c)))) {
            let (m, per) = macro_f1(&pred, &truth).unwrap();
            prop_assert_eq!(m, per.iter().sum::<f64>() / per.len() as f64);
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn threshold_is_idempotent(p in prop::collection::vec(0.0f64..=1.0, 1..10)) {
            let once = threshold_predictions(&p, 0.5);
            let as_probs: Vec<f64> = once.iter().map(|&v| f64::from(v)).collect();
            prop_assert_eq!(threshold_predictions(&as_probs, 0.5), once);
        }
    }
}

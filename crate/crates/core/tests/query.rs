use std::collections::BTreeSet;

use mlal_core::data::{generate_synthetic, SyntheticConfig};
use mlal_core::nn::{ModelConfig, NetworkParams};
use mlal_core::query::{
    by_score_desc, diversity_select, kmeans_pp, score_mge, select_batch, squared_distance,
    QuerySpec, ScoredSample, Uncertainty,
};
use mlal_core::rng::{derive_seed, Stream};
use mlal_core::{SampleId, Split};

/// Minimum within-cluster SSE over every assignment of `points` to `k`
/// non-empty groups.
fn brute_force_sse(points: &[Vec<f64>], k: usize) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut best = (f64::INFINITY, Vec::new());
    let mut labels = vec![0usize; n];
    loop {
        if (0..k).all(|c| labels.contains(&c)) {
            let mut sse = 0.0;
            for c in 0..k {
                let members: Vec<&Vec<f64>> = points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| p)
                    .collect();
                let dim = members[0].len();
                let mean: Vec<f64> = (0..dim)
                    .map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64)
                    .collect();
                sse += members
                    .iter()
                    .map(|m| squared_distance(m, &mean))
                    .sum::<f64>();
            }
            if sse < best.0 {
                best = (sse, labels.clone());
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn two_groups_match_the_best_partition() {
    let points = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.0],
        vec![10.0, 10.0],
        vec![10.0, 10.1],
    ];
    let (best, labels) = brute_force_sse(&points, 2);
    assert_eq!(labels[0], labels[1]);
    assert_eq!(labels[2], labels[3]);
    assert_ne!(labels[0], labels[2]);
    let clustering = kmeans_pp(&points, 2, 4).unwrap();
    assert!((clustering.sse(&points) - best).abs() < 1e-12);
}

#[test]
fn well_separated_blobs_reach_the_optimum() {
    let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]];
    let offsets = [[0.3, -0.2], [-0.1, 0.4], [0.2, 0.1]];
    let points: Vec<Vec<f64>> = centers
        .iter()
        .flat_map(|c| offsets.iter().map(move |o| vec![c[0] + o[0], c[1] + o[1]]))
        .collect();
    let (best, _) = brute_force_sse(&points, 3);
    for seed in 0..10 {
        let clustering = kmeans_pp(&points, 3, seed).unwrap();
        assert!((clustering.sse(&points) - best).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn four_point_diversity_example() {
    let scored: Vec<ScoredSample> = [
        (0.9, [0.0, 0.0]),
        (0.5, [0.1, 0.0]),
        (0.3, [10.0, 10.0]),
        (0.7, [10.0, 10.1]),
    ]
    .iter()
    .enumerate()
    .map(|(i, (s, e))| ScoredSample {
        id: SampleId::new(format!("p{}", i + 1)),
        score: *s,
        embedding: e.to_vec(),
    })
    .collect();
    let mut picked = diversity_select(&scored, 2, 0).unwrap();
    picked.sort();
    assert_eq!(picked, vec![SampleId::from("p1"), SampleId::from("p4")]);
}

#[test]
fn diverse_batch_comes_from_the_top_candidates() {
    let pool = generate_synthetic(&SyntheticConfig {
        pool_size: 20,
        val_size: 2,
        test_size: 2,
        seed: 6,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let params = NetworkParams::init(
        pool.feature_dim(),
        pool.num_classes(),
        &ModelConfig::default(),
        false,
        2,
    )
    .unwrap();
    for (budget, multiplier) in [(3, 2), (4, 3), (5, 4), (6, 1)] {
        let spec = QuerySpec {
            uncertainty: Uncertainty::GradientMagnitude,
            budget,
            multiplier,
            seed: 10,
            ..QuerySpec::default()
        };
        let selection = select_batch(&spec, &params, None, &pool).unwrap();
        let ids = selection.ids();
        assert_eq!(ids.len(), budget);

        let mut scored = score_mge(&params, &pool.split_samples(Split::Unlabeled), true).unwrap();
        scored.sort_by(by_score_desc);
        scored.truncate((budget * multiplier).min(scored.len()));
        let top: BTreeSet<&SampleId> = scored.iter().map(|s| &s.id).collect();
        assert!(ids.iter().all(|id| top.contains(id)));
        let expected = diversity_select(
            &scored,
            budget,
            derive_seed(spec.seed, Stream::Clustering, 0),
        )
        .unwrap();
        assert_eq!(ids, expected);

        let points: Vec<Vec<f64>> = scored.iter().map(|s| s.embedding.clone()).collect();
        let clustering = kmeans_pp(
            &points,
            budget,
            derive_seed(spec.seed, Stream::Clustering, 0),
        )
        .unwrap();
        if clustering.deficit == 0 {
            let clusters: BTreeSet<usize> = ids
                .iter()
                .map(|id| clustering.assignment[scored.iter().position(|s| &s.id == id).unwrap()])
                .collect();
            assert_eq!(clusters.len(), budget, "one pick per cluster");
        }
    }
}

//! kmeans++ seeding followed by Lloyd iterations.
//!
//! Draw protocol (ChaCha8 seeded with `seed`), relied on for reproducibility:
//!
//! 1. the first center is `points[rng.random_range(0..n)]`;
//! 2. each further center draws `u = rng.random::<f64>() * total`, where
//!    `total` is the sum of squared distances to the nearest chosen center,
//!    and takes the first index whose running sum exceeds `u`.
//!
//! Lloyd then alternates center updates (empty clusters keep their center)
//! and reassignment (ties go to the lower center index) until the assignment
//! is unchanged or [`MAX_LLOYD_ITERATIONS`] is reached.

use rand::Rng;

use crate::rng;
use crate::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Lloyd iterations performed.
    pub iterations: usize,
    /// Within-cluster sum of squares after each Lloyd iteration, the
    /// seeding assignment first.
    pub sse_trace: Vec<f64>,
    /// Requested clusters that could not be formed because there were fewer
    /// distinct points than `k`.
    pub deficit: usize,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn sse(&self, points: &[Vec<f64>]) -> f64 {
        sse(points, &self.assignment, &self.centers)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sse(points: &[Vec<f64>], assignment: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| squared_distance(p, &centers[c]))
        .sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centers)).collect()
}

fn update_centers(points: &[Vec<f64>], assignment: &[usize], centers: &mut [Vec<f64>]) {
    let dim = centers[0].len();
    let mut sums = vec![vec![0.0; dim]; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((center, sum), count) in centers.iter_mut().zip(sums).zip(counts) {
        if count > 0 {
            *center = sum.into_iter().map(|s| s / count as f64).collect();
        }
    }
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Clusters `points` into `k` groups.
pub fn kmeans_pp(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidClusterCount);
    }
    if points.is_empty() {
        return Err(Error::InsufficientCandidates { needed: 1, got: 0 });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points have differing dimensions".into()));
    }

    let mut distinct: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !distinct.iter().any(|&j| same_point(&points[j], p)) {
            distinct.push(i);
            if distinct.len() >= k {
                break;
            }
        }
    }
    if distinct.len() < k {
        let centers: Vec<Vec<f64>> = distinct.iter().map(|&i| points[i].clone()).collect();
        let assignment = points
            .iter()
            .map(|p| centers.iter().position(|c| same_point(c, p)).unwrap_or(0))
            .collect();
        return Ok(Clustering {
            assignment,
            centers,
            iterations: 0,
            sse_trace: vec![0.0],
            deficit: k - distinct.len(),
        });
    }

    let mut rng = rng::seeded(seed);
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > u {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave `u` at the very top of the range
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1));
        let center = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &center));
        }
        centers.push(center);
    }

    let mut assignment = assign(points, &centers);
    let mut sse_trace = vec![sse(points, &assignment, &centers)];
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        update_centers(points, &assignment, &mut centers);
        let next = assign(points, &centers);
        sse_trace.push(sse(points, &next, &centers));
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(Clustering {
        assignment,
        centers,
        iterations,
        sse_trace,
        deficit: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_points() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 10.0],
            vec![10.0, 10.1],
        ]
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = four_points();
        let c = kmeans_pp(&pts, 1, 3).unwrap();
        assert!(c.assignment.iter().all(|&a| a == 0));
        let mean = [20.1 / 4.0, 20.1 / 4.0];
        assert!((c.centers[0][0] - mean[0]).abs() < 1e-12);
        assert!((c.centers[0][1] - mean[1]).abs() < 1e-12);
    }

    #[test]
    fn two_obvious_groups() {
        let pts = four_points();
        for seed in 0..20 {
            let c = kmeans_pp(&pts, 2, seed).unwrap();
            assert_eq!(c.assignment[0], c.assignment[1]);
            assert_eq!(c.assignment[2], c.assignment[3]);
            assert_ne!(c.assignment[0], c.assignment[2]);
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = four_points();
        let c = kmeans_pp(&pts, 4, 9).unwrap();
        let mut seen = c.assignment.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 4);
        assert!(c.sse(&pts) == 0.0);
    }

    #[test]
    fn deficit_when_points_coincide() {
        let pts = vec![vec![1.0], vec![1.0], vec![2.0], vec![1.0]];
        let c = kmeans_pp(&pts, 3, 0).unwrap();
        assert_eq!(c.deficit, 1);
        assert_eq!(c.assignment, vec![0, 0, 1, 0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kmeans_pp(&four_points(), 0, 0),
            Err(Error::InvalidClusterCount)
        ));
        assert!(kmeans_pp(&[], 2, 0).is_err());
        assert!(kmeans_pp(&[vec![1.0], vec![1.0, 2.0]], 1, 0).is_err());
    }

    #[test]
    fn sse_never_increases() {
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![((i * 37) % 17) as f64, ((i * 11) % 13) as f64 * 0.5])
            .collect();
        for seed in 0..10 {
            let c = kmeans_pp(&pts, 5, seed).unwrap();
            for w in c.sse_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", c.sse_trace);
            }
        }
    }
}

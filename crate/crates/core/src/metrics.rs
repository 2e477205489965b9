//! Classification and clustering scores.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{Matrix, SeededRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("k = {k} is invalid for {n} samples")]
    BadK { k: usize, n: usize },
    #[error("label {label} out of range for {k} classes")]
    BadLabel { label: usize, k: usize },
    #[error("need at least {0} samples")]
    TooFew(usize),
}

fn same_len(a: &[usize], b: &[usize]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    same_len(pred, truth)?;
    if pred.is_empty() {
        return Err(MetricsError::TooFew(1));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Maps arbitrary labels to 0..k in order of first appearance.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    same_len(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(MetricsError::TooFew(2));
    }
    let (a, ka) = compact(a);
    let (b, kb) = compact(b);
    let mut table = vec![0usize; ka * kb];
    for (&i, &j) in a.iter().zip(&b) {
        table[i * kb + j] += 1;
    }
    let mut rows = vec![0usize; ka];
    let mut cols = vec![0usize; kb];
    for i in 0..ka {
        for j in 0..kb {
            rows[i] += table[i * kb + j];
            cols[j] += table[i * kb + j];
        }
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = 0.5 * (sum_a + sum_b);
    let den = max - expected;
    if den == 0.0 {
        // Both partitions are all-one-cluster or all-singletons.
        let identical = ka == kb && table.iter().filter(|&&c| c > 0).count() == ka;
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).to_f64_lossy().powi(2)).sum()
}

fn assign<T: Scalar>(x: &Matrix<T>, centroids: &Matrix<T>) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(x.rows());
    let mut dists = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let mut best = (0, f64::INFINITY);
        for c in 0..centroids.rows() {
            let d = sq_dist(x.row(i), centroids.row(c));
            if d < best.1 {
                best = (c, d);
            }
        }
        labels.push(best.0);
        dists.push(best.1);
    }
    (labels, dists)
}

/// Lloyd's algorithm on the rows of `x`. Starts from `k` distinct seeded
/// samples; an emptied cluster is moved onto the point farthest from its
/// centroid. Distance ties go to the lowest centroid index.
pub fn kmeans<T: Scalar>(x: &Matrix<T>, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult, MetricsError> {
    let (n, d) = x.shape();
    if k == 0 || k > n {
        return Err(MetricsError::BadK { k, n });
    }
    let mut rng = SeededRng::new(seed);
    let start = rng.permutation(n)[..k].to_vec();
    let mut centroids = x.select_rows(&start);
    let (mut labels, mut dists) = assign(x, &centroids);
    let mut objective = vec![dists.iter().sum()];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for f in 0..d {
                sums[labels[i] * d + f] += x[(i, f)].to_f64_lossy();
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = None;
                for i in 0..n {
                    if !taken[i] && far.is_none_or(|j: usize| dists[i] > dists[j]) {
                        far = Some(i);
                    }
                }
                let i = far.expect("k <= n");
                taken[i] = true;
                dists[i] = 0.0;
                centroids.row_mut(c).copy_from_slice(x.row(i));
            } else {
                for f in 0..d {
                    centroids[(c, f)] = T::of(sums[c * d + f] / counts[c] as f64);
                }
            }
        }
        let (next, next_dists) = assign(x, &centroids);
        objective.push(next_dists.iter().sum());
        let unchanged = next == labels;
        labels = next;
        dists = next_dists;
        if unchanged {
            break;
        }
    }
    Ok(KMeansResult {
        labels,
        objective,
        iterations,
    })
}

pub const KMEANS_MAX_ITER: usize = 100;

/// ARI between k-means clusters of the rows of `features` (k = number of
/// distinct truth labels) and the truth.
pub fn feature_ari<T: Scalar>(features: &Matrix<T>, truth: &[usize], seed: u64) -> Result<f64, MetricsError> {
    if features.rows() != truth.len() {
        return Err(MetricsError::LengthMismatch(features.rows(), truth.len()));
    }
    let (_, k) = compact(truth);
    let km = kmeans(features, k, seed, KMEANS_MAX_ITER)?;
    adjusted_rand_index(&km.labels, truth)
}

/// Median of [`feature_ari`] over `seeds`.
pub fn feature_ari_median<T: Scalar>(features: &Matrix<T>, truth: &[usize], seeds: &[u64]) -> Result<f64, MetricsError> {
    let scores = seeds
        .iter()
        .map(|&s| feature_ari(features, truth, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(median(&scores))
}

/// Median (mean of the middle pair for even lengths); NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

pub fn confusion(pred: &[usize], truth: &[usize], k: usize) -> Result<ConfusionMatrix, MetricsError> {
    same_len(pred, truth)?;
    let mut counts = vec![vec![0; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(MetricsError::BadLabel { label: p.max(t), k });
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

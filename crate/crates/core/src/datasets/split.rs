use serde::{Deserialize, Serialize};

use crate::numerics::SeededRng;
use crate::scalar::Scalar;

use super::{Dataset, DatasetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    /// (train, val, test), summing to 1.
    pub fractions: [f64; 3],
    pub seed: u64,
    /// Split each class separately so class proportions carry over.
    pub stratify: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            fractions: [0.70, 0.15, 0.15],
            seed: 0,
            stratify: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let sum: f64 = self.fractions.iter().sum();
        if self.fractions.iter().any(|&f| !(f > 0.0 && f.is_finite())) || (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::BadConfig(format!(
                "split fractions must be positive and sum to 1, got {:?}",
                self.fractions
            )));
        }
        Ok(())
    }

    /// (train, val, test) sizes for `n` samples: floors for the first two,
    /// remainder to test.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let take = |f: f64| (f * n as f64 + 1e-9).floor() as usize;
        let train = take(self.fractions[0]);
        let val = take(self.fractions[1]).min(n - train);
        [train, val, n - train - val]
    }
}

/// Seeded random split into disjoint, exhaustive (train, val, test) parts.
pub fn split<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>), DatasetError> {
    spec.validate()?;
    let idx = split_indices(ds, spec)?;
    Ok((ds.select(&idx[0]), ds.select(&idx[1]), ds.select(&idx[2])))
}

pub(crate) fn split_indices<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<[Vec<usize>; 3], DatasetError> {
    let n = ds.n_samples();
    let mut rng = SeededRng::new(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    if spec.stratify {
        for class in 0..ds.n_classes() {
            let mut members: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == class).collect();
            rng.shuffle(&mut members);
            let [a, b, _] = spec.sizes(members.len());
            parts[0].extend_from_slice(&members[..a]);
            parts[1].extend_from_slice(&members[a..a + b]);
            parts[2].extend_from_slice(&members[a + b..]);
        }
    } else {
        let perm = rng.permutation(n);
        let [a, b, _] = spec.sizes(n);
        parts[0] = perm[..a].to_vec();
        parts[1] = perm[a..a + b].to_vec();
        parts[2] = perm[a + b..].to_vec();
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err(DatasetError::TooSmall(format!(
            "{n} samples give split sizes {}/{}/{}",
            parts[0].len(),
            parts[1].len(),
            parts[2].len()
        )));
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn toy(n: usize) -> Dataset<f64> {
        Dataset::classification(Matrix::from_fn(1, n, |_, j| j as f64), (0..n).map(|i| i % 2).collect()).unwrap()
    }

    #[test]
    fn sizes_for_100() {
        let ds = toy(100);
        let (a, b, c) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!((a.n_samples(), b.n_samples(), c.n_samples()), (70, 15, 15));
        let mut all: Vec<usize> = [a, b, c].iter().flat_map(|d| d.x.row(0).iter().map(|&v| v as usize)).collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_and_stratified() {
        let ds = toy(40);
        let spec = SplitSpec {
            seed: 5,
            stratify: true,
            ..SplitSpec::default()
        };
        let first = split_indices(&ds, &spec).unwrap();
        assert_eq!(first, split_indices(&ds, &spec).unwrap());
        let ones = first[0].iter().filter(|&&i| ds.labels[i] == 1).count();
        assert_eq!(ones, 14);
    }

    #[test]
    fn too_small_and_bad_fractions() {
        assert!(matches!(split(&toy(3), &SplitSpec::default()), Err(DatasetError::TooSmall(_))));
        let bad = SplitSpec {
            fractions: [0.5, 0.5, 0.5],
            ..SplitSpec::default()
        };
        assert!(matches!(split(&toy(30), &bad), Err(DatasetError::BadConfig(_))));
    }
}

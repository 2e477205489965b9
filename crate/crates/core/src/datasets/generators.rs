use serde::{Deserialize, Serialize};

use crate::numerics::{gaussian_matrix, thin_qr, Matrix, SeededRng};
use crate::scalar::Scalar;

use super::{Dataset, DatasetError};

pub const CENTER_REJECTION_CAP: usize = 10_000;

/// Gaussian clusters in `dim` informative dimensions plus pure-noise
/// distractor dimensions (appended after the informative ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlobsSpec {
    pub k: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub spread: f64,
    pub distractor_dims: usize,
    pub distractor_std: f64,
    /// Centers are drawn uniformly from `[-center_box, center_box]^dim`.
    pub center_box: f64,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        Self {
            k: 3,
            dim: 5,
            n_per_class: 100,
            spread: 1.0,
            distractor_dims: 0,
            distractor_std: 1.0,
            center_box: 10.0,
        }
    }
}

pub fn make_blobs<T: Scalar>(rng: &mut SeededRng, spec: &BlobsSpec) -> Result<Dataset<T>, DatasetError> {
    if spec.k < 2 || spec.dim == 0 || spec.n_per_class == 0 {
        return Err(DatasetError::BadConfig(format!(
            "blobs need k >= 2, dim >= 1, n_per_class >= 1 (got k = {}, dim = {}, n = {})",
            spec.k, spec.dim, spec.n_per_class
        )));
    }
    for (name, v) in [("spread", spec.spread), ("distractor_std", spec.distractor_std), ("center_box", spec.center_box)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DatasetError::BadConfig(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let min_dist = 4.0 * spec.spread;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.k);
    let mut rejections = 0;
    while centers.len() < spec.k {
        let c: Vec<f64> = (0..spec.dim).map(|_| rng.uniform_in(-spec.center_box, spec.center_box)).collect();
        let ok = centers
            .iter()
            .all(|o| o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_dist);
        if ok {
            centers.push(c);
        } else {
            rejections += 1;
            if rejections > CENTER_REJECTION_CAP {
                return Err(DatasetError::CenterPlacementFailure { attempts: rejections - 1 });
            }
        }
    }

    let d = spec.dim + spec.distractor_dims;
    let n = spec.k * spec.n_per_class;
    let mut x = Matrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for i in 0..spec.n_per_class {
            let col = class * spec.n_per_class + i;
            for (f, &c) in center.iter().enumerate() {
                x[(f, col)] = T::of(c + spec.spread * rng.normal());
            }
            for f in spec.dim..d {
                x[(f, col)] = T::of(spec.distractor_std * rng.normal());
            }
            labels.push(class);
        }
    }
    Dataset::classification(x, labels)
}

/// `x = B·C + ε` with `B` a random orthonormal d×rank basis, `C` standard
/// normal and `ε ~ N(0, noise_std²)`. Returns the data and `B`.
pub fn make_lowrank<T: Scalar>(
    rng: &mut SeededRng,
    d: usize,
    n: usize,
    rank: usize,
    noise_std: f64,
) -> Result<(Dataset<T>, Matrix<T>), DatasetError> {
    if rank == 0 || rank > d.min(n) || !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(DatasetError::BadConfig(format!(
            "low-rank data needs 1 <= rank <= min(d, n) and noise_std >= 0 (got rank = {rank}, d = {d}, n = {n}, noise = {noise_std})"
        )));
    }
    let raw: Matrix<T> = gaussian_matrix(rng, d, rank, 0.0, 1.0);
    let basis = thin_qr(&raw)
        .map_err(|e| DatasetError::BadConfig(format!("basis draw failed: {e}")))?
        .q;
    let coeffs: Matrix<T> = gaussian_matrix(rng, rank, n, 0.0, 1.0);
    let noise: Matrix<T> = gaussian_matrix(rng, d, n, 0.0, noise_std);
    let x = basis.matmul(&coeffs).expect("d×rank · rank×n").add(&noise).expect("same shape");
    Ok((Dataset::classification(x, vec![0; n])?, basis))
}

/// Two classes of `size`×`size` images: a horizontal bar (class 0) or a
/// vertical bar (class 1) at a random position, plus uniform ±0.1 noise.
pub fn make_bars<T: Scalar>(rng: &mut SeededRng, size: usize, n_per_class: usize) -> Result<Dataset<T>, DatasetError> {
    make_bars_with_noise(rng, size, n_per_class, 0.1)
}

pub fn make_bars_with_noise<T: Scalar>(
    rng: &mut SeededRng,
    size: usize,
    n_per_class: usize,
    noise: f64,
) -> Result<Dataset<T>, DatasetError> {
    if size < 4 || n_per_class == 0 || !(noise >= 0.0 && noise.is_finite()) {
        return Err(DatasetError::BadConfig(format!(
            "bars need size >= 4, n_per_class >= 1 and noise >= 0 (got {size}, {n_per_class}, {noise})"
        )));
    }
    let d = size * size;
    let n = 2 * n_per_class;
    let mut x = Matrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for class in 0..2 {
        for i in 0..n_per_class {
            let col = class * n_per_class + i;
            let pos = rng.below(size);
            for r in 0..size {
                for c in 0..size {
                    let on = if class == 0 { r == pos } else { c == pos };
                    let base = if on { 1.0 } else { 0.0 };
                    let jitter = if noise > 0.0 { rng.uniform_in(-noise, noise) } else { 0.0 };
                    x[(r * size + c, col)] = T::of(base + jitter);
                }
            }
            labels.push(class);
        }
    }
    let mut ds = Dataset::classification(x, labels)?;
    ds.class_names = vec!["horizontal".into(), "vertical".into()];
    ds.with_image_shape([1, size, size])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_collapse_without_spread() {
        let spec = BlobsSpec {
            k: 3,
            dim: 4,
            n_per_class: 5,
            spread: 0.0,
            ..BlobsSpec::default()
        };
        let ds: Dataset<f64> = make_blobs(&mut SeededRng::new(7), &spec).unwrap();
        assert_eq!(ds.n_samples(), 15);
        for c in 0..3 {
            let first = ds.x.column(c * 5);
            for i in 1..5 {
                assert_eq!(ds.x.column(c * 5 + i), first);
            }
        }
    }

    #[test]
    fn blobs_respect_min_distance_and_seed() {
        let spec = BlobsSpec {
            k: 4,
            dim: 2,
            n_per_class: 3,
            spread: 1.5,
            distractor_dims: 3,
            ..BlobsSpec::default()
        };
        let a: Dataset<f64> = make_blobs(&mut SeededRng::new(1), &spec).unwrap();
        let b: Dataset<f64> = make_blobs(&mut SeededRng::new(1), &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 5);
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn blobs_placement_failure() {
        let spec = BlobsSpec {
            k: 5,
            dim: 1,
            spread: 10.0,
            center_box: 1.0,
            ..BlobsSpec::default()
        };
        assert!(matches!(
            make_blobs::<f64>(&mut SeededRng::new(0), &spec),
            Err(DatasetError::CenterPlacementFailure { .. })
        ));
        assert!(make_blobs::<f64>(&mut SeededRng::new(0), &BlobsSpec { k: 1, ..BlobsSpec::default() }).is_err());
    }

    #[test]
    fn lowrank_basis_is_orthonormal_and_seeded() {
        let (ds, b) = make_lowrank::<f64>(&mut SeededRng::new(3), 10, 30, 2, 0.0).unwrap();
        let (_, b2) = make_lowrank::<f64>(&mut SeededRng::new(3), 10, 30, 2, 0.0).unwrap();
        assert_eq!(b, b2);
        let mut g = b.t_matmul(&b).unwrap();
        g.add_diag(-1.0);
        assert!(g.max_abs() < 1e-12);
        // Noiseless data lies in span(B): residual after projection is zero.
        let proj = b.matmul(&b.t_matmul(&ds.x).unwrap()).unwrap();
        assert!(ds.x.sub(&proj).unwrap().max_abs() < 1e-12);
        assert!(make_lowrank::<f64>(&mut SeededRng::new(3), 3, 30, 4, 0.0).is_err());
    }

    #[test]
    fn bars_are_separable_on_line_sums() {
        let ds: Dataset<f64> = make_bars_with_noise(&mut SeededRng::new(4), 6, 10, 0.0).unwrap();
        assert_eq!(ds.image_shape, Some([1, 6, 6]));
        for n in 0..ds.n_samples() {
            let col = ds.x.column(n);
            let max_row = (0..6).map(|r| (0..6).map(|c| col[r * 6 + c]).sum::<f64>()).fold(0.0, f64::max);
            let max_col = (0..6).map(|c| (0..6).map(|r| col[r * 6 + c]).sum::<f64>()).fold(0.0, f64::max);
            let predicted = if max_row > max_col { 0 } else { 1 };
            assert_eq!(predicted, ds.labels[n]);
        }
        let a: Dataset<f64> = make_bars(&mut SeededRng::new(9), 8, 4).unwrap();
        let b: Dataset<f64> = make_bars(&mut SeededRng::new(9), 8, 4).unwrap();
        assert_eq!(a, b);
        assert!(make_bars::<f64>(&mut SeededRng::new(9), 3, 4).is_err());
    }
}

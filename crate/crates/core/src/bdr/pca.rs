use crate::numerics::{sym_eig, Matrix};
use crate::scalar::Scalar;

use super::BdrError;

/// Top-`r` principal axes of `x` (D×N, samples as columns): eigenvectors of
/// the centered covariance in descending eigenvalue order, each signed so
/// its largest-magnitude entry is positive (first such entry on ties).
pub fn pca_baseline<T: Scalar>(x: &Matrix<T>, r: usize) -> Result<Matrix<T>, BdrError> {
    let (d, n) = x.shape();
    if n < 2 || r == 0 || r > d.min(n) {
        return Err(BdrError::BadShape(format!(
            "PCA needs 1 <= r <= min(D, N) and N >= 2; got r = {r}, D = {d}, N = {n}"
        )));
    }
    let xc = x.sub_row_offsets(&x.row_means());
    let cov = xc.gram_outer().scale(T::one() / T::from_usize(n - 1).unwrap());
    let eig = sym_eig(&cov).map_err(|e| BdrError::numerical("covariance eigendecomposition", e))?;
    let order: Vec<usize> = (0..d).rev().take(r).collect();
    let mut basis = eig.vectors.select_columns(&order);
    for j in 0..r {
        let col = basis.column(j);
        let mut pivot = T::zero();
        for &v in &col {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < T::zero() {
            let flipped: Vec<T> = col.iter().map(|&v| -v).collect();
            basis.set_column(j, &flipped);
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, SeededRng};

    #[test]
    fn axis_aligned_data() {
        let x = Matrix::<f64>::from_fn(3, 6, |i, j| if i == 0 { j as f64 - 2.5 } else { 0.0 });
        let b = pca_baseline(&x, 1).unwrap();
        assert!((b[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(b[(1, 0)].abs() < 1e-15 && b[(2, 0)].abs() < 1e-15);
    }

    #[test]
    fn full_rank_preserves_variance() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(6), 4, 50, 0.0, 1.0);
        let b = pca_baseline(&x, 4).unwrap();
        let mut g = b.t_matmul(&b).unwrap();
        g.add_diag(-1.0);
        assert!(g.max_abs() < 1e-12);
        let xc = x.sub_row_offsets(&x.row_means());
        let u = xc.t_matmul(&b).unwrap();
        let total: f64 = xc.as_slice().iter().map(|v| v * v).sum();
        let kept: f64 = u.as_slice().iter().map(|v| v * v).sum();
        assert!((total - kept).abs() < 1e-9 * total);
    }

    #[test]
    fn rejects_bad_rank() {
        let x = Matrix::<f64>::zeros(3, 4);
        assert!(pca_baseline(&x, 0).is_err());
        assert!(pca_baseline(&x, 4).is_err());
    }
}

use crate::scalar::Scalar;

use super::{tol, LinalgError, Matrix};

/// Thin QR factors: `q` is m×n with orthonormal columns, `r` is n×n upper
/// triangular with a non-negative diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinQr<T> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

/// Householder thin QR of a tall matrix (`rows >= cols`).
///
/// Column signs of `q` are flipped so that `diag(r) >= 0`, which makes the
/// factorization unique for full-rank input.
pub fn thin_qr<T: Scalar>(a: &Matrix<T>) -> Result<ThinQr<T>, LinalgError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(LinalgError::DimMismatch {
            expected: "rows >= cols".into(),
            got: format!("{m}x{n}"),
        });
    }
    let max_norm = (0..n)
        .map(|j| a.column(j).iter().map(|&v| v * v).sum::<T>().sqrt())
        .fold(T::zero(), T::max);
    let rank_floor = T::of(tol::QR_RANK) * max_norm;

    let mut work = a.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(n);
    let two = T::of(2.0);
    for k in 0..n {
        let x: Vec<T> = (k..m).map(|i| work[(i, k)]).collect();
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > rank_floor) || max_norm <= T::zero() {
            return Err(LinalgError::RankDeficient { column: k });
        }
        let alpha = if x[0] >= T::zero() { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|&t| t * t).sum::<T>().sqrt();
        for t in v.iter_mut() {
            *t /= vnorm;
        }
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * work[(i, j)]).sum();
            for i in k..m {
                work[(i, j)] -= two * v[i - k] * dot;
            }
        }
        reflectors.push(v);
    }

    let mut q = Matrix::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = T::one();
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let dot: T = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            if dot == T::zero() {
                continue;
            }
            for i in k..m {
                q[(i, j)] -= two * v[i - k] * dot;
            }
        }
    }

    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = work[(i, j)];
        }
    }
    for k in 0..n {
        if r[(k, k)] < T::zero() {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(ThinQr { q, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, SeededRng};

    fn orthonormality_residual(q: &Matrix<f64>) -> f64 {
        let mut g = q.t_matmul(q).unwrap();
        g.add_diag(-1.0);
        g.max_abs()
    }

    #[test]
    fn already_orthonormal_is_fixed_point() {
        let a = Matrix::<f64>::from_fn(5, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let qr = thin_qr(&a).unwrap();
        assert_eq!(qr.q, a);
        assert_eq!(qr.r, Matrix::identity(3));
    }

    #[test]
    fn permutation_case() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let qr = thin_qr(&a).unwrap();
        let expected: [[f64; 2]; 3] = [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]];
        for i in 0..3 {
            for j in 0..2 {
                assert!((qr.q[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
        assert!(qr.r.diagonal().iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = SeededRng::new(5);
        let a = gaussian_matrix(&mut rng, 10, 4, 0.0, 1.0);
        let qr = thin_qr(&a).unwrap();
        let recon = qr.q.matmul(&qr.r).unwrap();
        assert!(recon.sub(&a).unwrap().frobenius() / a.frobenius() <= 1e-10);
        assert!(orthonormality_residual(&qr.q) <= 1e-10);
        for i in 0..4 {
            assert!(qr.r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(qr.r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let zero = Matrix::<f64>::zeros(4, 2);
        assert!(matches!(thin_qr(&zero), Err(LinalgError::RankDeficient { column: 0 })));
        let dup = Matrix::from_fn(4, 2, |i, _| i as f64 + 1.0);
        assert!(matches!(thin_qr(&dup), Err(LinalgError::RankDeficient { column: 1 })));
        let wide = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(thin_qr(&wide), Err(LinalgError::DimMismatch { .. })));
    }
}

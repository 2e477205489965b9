use crate::scalar::Scalar;

use super::{check_symmetric, tol, LinalgError, Matrix};

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> SpdFactor<T> {
    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `L·Lᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        self.lower.gram_outer()
    }

    /// log-determinant of the factored matrix.
    pub fn log_det(&self) -> T {
        let two = T::of(2.0);
        self.lower.diagonal().into_iter().map(|d| two * d.ln()).sum()
    }

    fn forward(&self, b: &mut [T]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lower.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }

    fn backward(&self, b: &mut [T]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.lower[(k, i)] * b[k];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `A·x = b` for a single right-hand side in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim());
        self.forward(b);
        self.backward(b);
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky_factor<T: Scalar>(a: &Matrix<T>) -> Result<SpdFactor<T>, LinalgError> {
    check_symmetric(a)?;
    let n = a.rows();
    let max_diag = a.diagonal().into_iter().fold(T::zero(), |m, v| m.max(v));
    let floor = T::of(tol::CHOLESKY_PIVOT) * max_diag;
    let mut lower = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= lower[(j, k)] * lower[(j, k)];
        }
        if !(pivot > floor) || max_diag <= T::zero() {
            return Err(LinalgError::NotSpd {
                index: j,
                pivot: pivot.to_f64_lossy(),
            });
        }
        let d = pivot.sqrt();
        lower[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = s / d;
        }
    }
    Ok(SpdFactor { lower })
}

/// Solves `A·X = B` column by column.
pub fn spd_solve<T: Scalar>(f: &SpdFactor<T>, b: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    if f.dim() != b.rows() {
        return Err(LinalgError::DimMismatch {
            expected: format!("{} rows", f.dim()),
            got: format!("{} rows", b.rows()),
        });
    }
    let mut x = Matrix::zeros(b.rows(), b.cols());
    let mut col = vec![T::zero(); b.rows()];
    for j in 0..b.cols() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = b[(i, j)];
        }
        f.solve_in_place(&mut col);
        x.set_column(j, &col);
    }
    Ok(x)
}

/// Explicit inverse of the factored matrix, symmetrized.
pub fn spd_inverse<T: Scalar>(f: &SpdFactor<T>) -> Matrix<T> {
    let n = f.dim();
    // Inverse of L, then L⁻ᵀ·L⁻¹.
    let mut linv = Matrix::zeros(n, n);
    for j in 0..n {
        linv[(j, j)] = T::one() / f.lower[(j, j)];
        for i in j + 1..n {
            let mut s = T::zero();
            for k in j..i {
                s -= f.lower[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / f.lower[(i, i)];
        }
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = T::zero();
            for k in i..n {
                s += linv[(k, i)] * linv[(k, j)];
            }
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn random_spd(rng: &mut SeededRng, n: usize) -> Matrix<f64> {
        let b = crate::numerics::gaussian_matrix(rng, n, n + 3, 0.0, 1.0);
        let mut a = b.gram_outer();
        a.add_diag(0.1);
        a
    }

    #[test]
    fn scalar_diagonal() {
        let a = Matrix::<f64>::identity(3).scale(4.0);
        let f = cholesky_factor(&a).unwrap();
        assert_eq!(f.lower(), &Matrix::identity(3).scale(2.0));
    }

    #[test]
    fn two_by_two_hand_recurrence() {
        // l11 = √2, l21 = 1/√2, l22 = √(2 - 1/2) = √1.5
        let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let l = cholesky_factor(&a).unwrap().lower().clone();
        let expected: [[f64; 2]; 2] = [[2f64.sqrt(), 0.0], [0.5f64.sqrt(), 1.5f64.sqrt()]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((l[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky_factor(&a), Err(LinalgError::NotSpd { .. })));
        let z = Matrix::<f64>::zeros(2, 2);
        assert!(matches!(cholesky_factor(&z), Err(LinalgError::NotSpd { .. })));
    }

    #[test]
    fn asymmetric_is_rejected() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.1, 2.0]]).unwrap();
        assert!(matches!(cholesky_factor(&a), Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn solve_small_cases() {
        let f = cholesky_factor(&Matrix::<f64>::identity(3).scale(2.0)).unwrap();
        let b = Matrix::from_fn(3, 2, |i, j| (i + j) as f64 - 1.0);
        assert!(spd_solve(&f, &b).unwrap().sub(&b.scale(0.5)).unwrap().max_abs() < 1e-15);

        let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = spd_solve(&cholesky_factor(&a).unwrap(), &Matrix::column_vector(&[3.0, 3.0])).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);

        let wrong = Matrix::<f64>::zeros(2, 1);
        assert!(matches!(spd_solve(&f, &wrong), Err(LinalgError::DimMismatch { .. })));
    }

    #[test]
    fn random_solve_residual() {
        let mut rng = SeededRng::new(11);
        let a = random_spd(&mut rng, 5);
        let b = crate::numerics::gaussian_matrix(&mut rng, 5, 1, 0.0, 1.0);
        let x = spd_solve(&cholesky_factor(&a).unwrap(), &b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.frobenius() / b.frobenius() <= 1e-10);
    }

    #[test]
    fn inverse_cases() {
        let f = cholesky_factor(&Matrix::<f64>::identity(4).scale(2.0)).unwrap();
        assert!(spd_inverse(&f).sub(&Matrix::identity(4).scale(0.5)).unwrap().max_abs() < 1e-15);
        let f = cholesky_factor(&Matrix::from_diag(&[1.0, 2.0, 4.0])).unwrap();
        assert!(spd_inverse(&f).sub(&Matrix::from_diag(&[1.0, 0.5, 0.25])).unwrap().max_abs() < 1e-15);

        let mut rng = SeededRng::new(3);
        let a = random_spd(&mut rng, 6);
        let m = spd_inverse(&cholesky_factor(&a).unwrap());
        let mut resid = a.matmul(&m).unwrap();
        resid.add_diag(-1.0);
        assert!(resid.frobenius() <= 1e-9);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = cholesky_factor(&a).unwrap();
        let r = f.reconstruct().sub(&a).unwrap();
        assert!(r.max_abs() < 1e-5);
    }
}

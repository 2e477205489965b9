use crate::scalar::Scalar;

use super::{tol, LinalgError, Matrix};

fn check_orthonormal<T: Scalar>(u: &Matrix<T>) -> Result<(), LinalgError> {
    let mut g = u.t_matmul(u)?;
    g.add_diag(-T::one());
    let dev = g.max_abs();
    if dev > T::tol(tol::ORTHONORMAL) || dev.is_nan() {
        return Err(LinalgError::NotOrthonormal {
            deviation: dev.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Singular values (descending) of `a` by one-sided Jacobi rotations on its
/// columns. Small singular values keep absolute accuracy near `eps·‖a‖`.
fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let a = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let n = a.cols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let eps = T::epsilon();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&x, &y) in cols[p].iter().zip(&cols[q]) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| c.iter().map(|&v| v * v).fold(T::zero(), |a, b| a + b).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns.
///
/// Cosines are the singular values of `u1ᵀ·u2`; sines are the singular
/// values of the part of the narrower basis orthogonal to the wider one.
/// Angles below π/4 come from the sines, the rest from the cosines.
pub fn principal_angles<T: Scalar>(u1: &Matrix<T>, u2: &Matrix<T>) -> Result<Vec<T>, LinalgError> {
    if u1.rows() != u2.rows() {
        return Err(LinalgError::DimMismatch {
            expected: format!("{} rows", u1.rows()),
            got: format!("{} rows", u2.rows()),
        });
    }
    check_orthonormal(u1)?;
    check_orthonormal(u2)?;
    let (wide, narrow) = if u1.cols() >= u2.cols() { (u1, u2) } else { (u2, u1) };
    let k = narrow.cols();
    let coupling = wide.t_matmul(narrow)?;
    let cosines = singular_values(&coupling);
    let residual = narrow.sub(&wide.matmul(&coupling)?)?;
    let mut sines = singular_values(&residual);
    sines.reverse();
    let half = T::of(0.5);
    let clamp = |v: T| v.min(T::one()).max(T::zero());
    Ok((0..k)
        .map(|i| {
            let s = clamp(sines[i]);
            if s * s < half {
                s.asin()
            } else {
                clamp(cosines[i]).acos()
            }
        })
        .collect())
}

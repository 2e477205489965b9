use crate::numerics::Matrix;
use crate::scalar::Scalar;

use super::DatasetError;

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score fitted on one data set and applied to others.
/// Features are rows; samples are columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    /// Population standard deviation, floored at [`STD_FLOOR`].
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &Matrix<T>) -> Self {
        let n = T::from_usize(x.cols().max(1)).unwrap();
        let mean = x.row_means();
        let std = (0..x.rows())
            .map(|f| {
                let var = x.row(f).iter().map(|&v| (v - mean[f]) * (v - mean[f])).sum::<T>() / n;
                var.sqrt().max(T::of(STD_FLOOR))
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>, DatasetError> {
        if x.rows() != self.dim() {
            return Err(DatasetError::DimMismatch {
                expected: format!("{} features", self.dim()),
                got: format!("{}", x.rows()),
            });
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |f, n| (x[(f, n)] - self.mean[f]) / self.std[f]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, SeededRng};

    #[test]
    fn zscore_on_training_data() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(1), 4, 30, 3.0, 2.0);
        let s = Standardizer::fit(&x);
        let z = s.apply(&x).unwrap();
        let again = Standardizer::fit(&z);
        for f in 0..4 {
            assert!(again.mean[f].abs() < 1e-9);
            assert!((again.std[f] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let x = Matrix::from_fn(2, 5, |i, j| if i == 0 { 7.0 } else { j as f64 });
        let z = Standardizer::fit(&x).apply(&x).unwrap();
        assert!(z.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uses_training_statistics() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(2), 3, 40, 0.0, 1.0);
        let s = Standardizer::fit(&x);
        let shifted = x.map(|v| v + 5.0);
        let z = s.apply(&shifted).unwrap();
        assert!(z.row_means().iter().all(|m| m.abs() > 1.0));
        assert!(s.apply(&Matrix::zeros(2, 3)).is_err());
    }
}

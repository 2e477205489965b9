use serde::{Deserialize, Serialize};

use crate::bdr::{bdr_fit, bdr_project, pca_baseline, BdrConfig, BdrModel};
use crate::datasets::Standardizer;
use crate::numerics::Matrix;
use crate::scalar::Scalar;

use super::DNetError;

/// Where the low-dimensional channel gets its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdSource {
    Bdr(BdrConfig),
    Pca { r: usize },
    None,
}

/// A fitted low-dimensional projector.
#[derive(Debug, Clone, PartialEq)]
pub enum LdModel<T> {
    Bdr(BdrModel<T>),
    Pca { basis: Matrix<T>, center: Vec<T> },
    None,
}

impl<T: Scalar> LdModel<T> {
    pub fn width(&self) -> usize {
        match self {
            LdModel::Bdr(m) => m.n_components(),
            LdModel::Pca { basis, .. } => basis.cols(),
            LdModel::None => 0,
        }
    }

    /// Raw (unscaled) features of the columns of `x`, one row per sample.
    pub fn project(&self, x: &Matrix<T>) -> Result<Matrix<T>, DNetError> {
        match self {
            LdModel::Bdr(m) => Ok(bdr_project(m, x)?),
            LdModel::Pca { basis, center } => {
                if x.rows() != basis.rows() {
                    return Err(DNetError::ShapeMismatch {
                        expected: format!("{} input features", basis.rows()),
                        got: format!("{}", x.rows()),
                    });
                }
                Ok(x.sub_row_offsets(center).t_matmul(basis).expect("rows checked"))
            }
            LdModel::None => Ok(Matrix::zeros(x.cols(), 0)),
        }
    }
}

/// Component count actually used for a request of `r` on D×N training data.
pub fn clamp_components(r: usize, d: usize, n: usize) -> usize {
    r.min(d).min(n)
}

/// Fits the LD projector on the training columns. Requested component
/// counts above min(D, N) are clamped.
pub fn fit_ld<T: Scalar>(source: &LdSource, x_train: &Matrix<T>) -> Result<LdModel<T>, DNetError> {
    let (d, n) = x_train.shape();
    match source {
        LdSource::Bdr(cfg) => {
            let cfg = BdrConfig {
                r: clamp_components(cfg.r, d, n),
                ..cfg.clone()
            };
            Ok(LdModel::Bdr(bdr_fit(x_train, &cfg)?))
        }
        LdSource::Pca { r } => {
            let r = clamp_components(*r, d, n);
            Ok(LdModel::Pca {
                basis: pca_baseline(x_train, r)?,
                center: x_train.row_means(),
            })
        }
        LdSource::None => Ok(LdModel::None),
    }
}

/// Per-component z-score of LD features (rows are samples).
pub fn fit_ld_stats<T: Scalar>(features: &Matrix<T>) -> Standardizer<T> {
    Standardizer::fit(&features.transpose())
}

pub fn apply_ld_stats<T: Scalar>(stats: &Standardizer<T>, features: &Matrix<T>) -> Result<Matrix<T>, DNetError> {
    Ok(stats.apply(&features.transpose())?.transpose())
}

/// Fits the LD source on `x_train` and returns the projector, the optional
/// scaling statistics and the cached training features.
pub fn compute_ld_features<T: Scalar>(
    source: &LdSource,
    x_train: &Matrix<T>,
    standardize: bool,
) -> Result<(LdModel<T>, Option<Standardizer<T>>, Matrix<T>), DNetError> {
    let model = fit_ld(source, x_train)?;
    let raw = model.project(x_train)?;
    if standardize && model.width() > 0 {
        let stats = fit_ld_stats(&raw);
        let scaled = apply_ld_stats(&stats, &raw)?;
        Ok((model, Some(stats), scaled))
    } else {
        Ok((model, None, raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, SeededRng};

    #[test]
    fn standardized_cache_has_unit_scale() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(3), 6, 40, 1.0, 2.0);
        let (_, stats, f) = compute_ld_features(&LdSource::Pca { r: 3 }, &x, true).unwrap();
        assert!(stats.is_some());
        for c in 0..3 {
            let col = f.column(c);
            let mean = col.iter().sum::<f64>() / 40.0;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 40.0).sqrt();
            assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_features_on_axis_data() {
        let x = Matrix::<f64>::from_fn(3, 5, |i, j| if i == 1 { j as f64 } else { 0.0 });
        let (_, _, f) = compute_ld_features(&LdSource::Pca { r: 1 }, &x, false).unwrap();
        let expected = [-2.0, -1.0, 0.0, 1.0, 2.0];
        for (n, e) in expected.iter().enumerate() {
            assert!((f[(n, 0)] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_uses_training_stats() {
        let mut rng = SeededRng::new(8);
        let x = gaussian_matrix::<f64>(&mut rng, 5, 50, 0.0, 1.0);
        let (model, stats, _) = compute_ld_features(&LdSource::Pca { r: 2 }, &x, true).unwrap();
        let stats = stats.unwrap();
        let val = gaussian_matrix::<f64>(&mut rng, 5, 20, 0.0, 1.0).map(|v| v + 3.0);
        let raw = model.project(&val).unwrap();
        let with_train = apply_ld_stats(&stats, &raw).unwrap();
        let with_own = apply_ld_stats(&fit_ld_stats(&raw), &raw).unwrap();
        assert_ne!(with_train, with_own);
        assert!(with_own.transpose().row_means().iter().all(|m| m.abs() < 1e-9));
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_components(64, 25, 420), 25);
        assert_eq!(clamp_components(8, 25, 420), 8);
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(1), 4, 30, 0.0, 1.0);
        assert_eq!(fit_ld(&LdSource::Pca { r: 10 }, &x).unwrap().width(), 4);
    }
}

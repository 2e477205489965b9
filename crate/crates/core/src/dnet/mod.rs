//! Dual-channel network: a high-dimensional per-sample stack (`F_h`) and a
//! cached low-dimensional projection of the whole training set (`F_l`) are
//! aggregated, passed through a dense fusion layer and a task head.

mod augment;
mod ld;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdr::BdrError;
use crate::datasets::{Dataset, DatasetError, Standardizer};
use crate::metrics::MetricsError;
use crate::nn::{argmax_rows, backward, forward, mse, softmax_ce, LayerSpec, NnError, Tensor};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub use augment::{augment_batch, reflect_image, scale_image, translate_image, AugmentConfig};
pub use ld::{apply_ld_stats, clamp_components, compute_ld_features, fit_ld, fit_ld_stats, LdModel, LdSource};
pub use train::{dnet_init, dnet_train, EarlyStopping, EpochRecord, TrainConfig, TrainHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `[F_h, F_l]`, HD block first.
    Concat,
    /// `F_h + F_l`; widths must match.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Classification { k: usize },
    Regression { out_dim: usize },
}

impl Head {
    pub fn out_dim(&self) -> usize {
        match *self {
            Head::Classification { k } => k,
            Head::Regression { out_dim } => out_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DNetConfig {
    pub hd_layers: Vec<LayerSpec>,
    pub ld_source: LdSource,
    pub aggregation: Aggregation,
    pub fusion_width: usize,
    /// ReLU after the fusion dense layer.
    pub fusion_relu: bool,
    pub head: Head,
    /// z-score LD features with training statistics.
    pub ld_standardize: bool,
    /// z-score the HD input features with training statistics.
    pub input_standardize: bool,
}

/// Activation taps for feature export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerTag {
    /// Output of the HD stack.
    HdOut,
    /// Aggregated HD + LD features.
    Fused,
    /// Fusion layer output (after its activation), the head's input.
    PreHead,
}

impl LayerTag {
    pub const ALL: [LayerTag; 3] = [LayerTag::HdOut, LayerTag::Fused, LayerTag::PreHead];

    pub fn name(self) -> &'static str {
        match self {
            LayerTag::HdOut => "hd_out",
            LayerTag::Fused => "fused",
            LayerTag::PreHead => "pre_head",
        }
    }
}

impl std::str::FromStr for LayerTag {
    type Err = DNetError;
    fn from_str(s: &str) -> Result<Self, DNetError> {
        LayerTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| DNetError::BadTag(s.to_string()))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DNetError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Bdr(#[from] BdrError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("unknown layer tag '{0}' (expected hd_out, fused or pre_head)")]
    BadTag(String),
}

/// Supervision for a batch.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a, T> {
    Classes(&'a [usize]),
    /// Rows are samples.
    Values(&'a Matrix<T>),
}

/// A trained (or freshly initialized) dual-channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct DNetModel<T> {
    pub config: DNetConfig,
    /// Per-sample HD input shape, `[D]` or `[C, H, W]`.
    pub input_shape: Vec<usize>,
    pub input_stats: Option<Standardizer<T>>,
    pub ld: LdModel<T>,
    pub ld_stats: Option<Standardizer<T>>,
    /// HD stack parameters followed by tail (fusion + head) parameters.
    pub params: Vec<Tensor<T>>,
    pub n_hd_params: usize,
}

/// Per-sample input shape for a data set.
pub fn input_shape_of<T: Scalar>(ds: &Dataset<T>) -> Vec<usize> {
    match ds.image_shape {
        Some(s) => s.to_vec(),
        None => vec![ds.dim()],
    }
}

impl<T: Scalar> DNetModel<T> {
    pub fn hd_width(&self) -> Result<usize, DNetError> {
        let shapes = crate::nn::chain_shapes(&self.config.hd_layers, &self.input_shape)?;
        match shapes.last().map(|s| s.as_slice()) {
            Some(&[n]) => Ok(n),
            other => Err(DNetError::ShapeMismatch {
                expected: "HD stack ending in a flat feature vector".into(),
                got: format!("{other:?}"),
            }),
        }
    }

    pub fn ld_width(&self) -> usize {
        self.ld.width()
    }

    pub fn fused_width(&self) -> Result<usize, DNetError> {
        let n = self.hd_width()?;
        let m = self.ld_width();
        if m == 0 {
            return Ok(n);
        }
        match self.config.aggregation {
            Aggregation::Concat => Ok(n + m),
            Aggregation::Sum if n == m => Ok(n),
            Aggregation::Sum => Err(DNetError::ShapeMismatch {
                expected: format!("LD width {n} to match the HD width for sum aggregation"),
                got: format!("{m}"),
            }),
        }
    }

    /// Fusion dense, optional ReLU, head dense.
    pub fn tail_specs(&self) -> Result<Vec<LayerSpec>, DNetError> {
        let f = self.fused_width()?;
        let w = self.config.fusion_width;
        let mut specs = vec![LayerSpec::Dense { in_dim: f, out_dim: w }];
        if self.config.fusion_relu {
            specs.push(LayerSpec::Relu);
        }
        specs.push(LayerSpec::Dense {
            in_dim: w,
            out_dim: self.config.head.out_dim(),
        });
        Ok(specs)
    }

    pub fn hd_params(&self) -> &[Tensor<T>] {
        &self.params[..self.n_hd_params]
    }

    pub fn tail_params(&self) -> &[Tensor<T>] {
        &self.params[self.n_hd_params..]
    }

    /// HD input tensor for the columns of `x`, after input scaling.
    pub fn prepare_input(&self, x: &Matrix<T>) -> Result<Tensor<T>, DNetError> {
        let per: usize = self.input_shape.iter().product();
        if x.rows() != per {
            return Err(DNetError::ShapeMismatch {
                expected: format!("{per} input features"),
                got: format!("{}", x.rows()),
            });
        }
        let scaled = match &self.input_stats {
            Some(s) => s.apply(x)?,
            None => x.clone(),
        };
        let mut shape = vec![x.cols()];
        shape.extend_from_slice(&self.input_shape);
        Ok(Tensor::from_vec(&shape, scaled.transpose().into_vec())?)
    }

    /// Cached-style LD features for the columns of `x` (rows are samples).
    pub fn ld_features(&self, x: &Matrix<T>) -> Result<Matrix<T>, DNetError> {
        let raw = self.ld.project(x)?;
        match &self.ld_stats {
            Some(s) => apply_ld_stats(s, &raw),
            None => Ok(raw),
        }
    }

    fn aggregate_batch(&self, f_h: &Tensor<T>, ld: &Matrix<T>) -> Result<Tensor<T>, DNetError> {
        if self.ld_width() == 0 {
            return Ok(f_h.clone());
        }
        let lt = Tensor::from_matrix(ld);
        aggregate(f_h, &lt, self.config.aggregation)
    }

    /// Activations at every tap plus the head output.
    pub fn forward_taps(&self, x: &Tensor<T>, ld: &Matrix<T>) -> Result<[Tensor<T>; 4], DNetError> {
        self.check_ld(x, ld)?;
        let (f_h, _) = forward(&self.config.hd_layers, self.hd_params(), x)?;
        let f = self.aggregate_batch(&f_h, ld)?;
        let tail = self.tail_specs()?;
        let pre_len = tail.len() - 1;
        let tp = self.tail_params();
        let (z, _) = forward(&tail[..pre_len], &tp[..2], &f)?;
        let (out, _) = forward(&tail[pre_len..], &tp[2..], &z)?;
        Ok([f_h, f, z, out])
    }

    fn check_ld(&self, x: &Tensor<T>, ld: &Matrix<T>) -> Result<(), DNetError> {
        if self.ld_width() > 0 && (ld.rows() != x.batch() || ld.cols() != self.ld_width()) {
            return Err(DNetError::ShapeMismatch {
                expected: format!("{}×{} LD batch", x.batch(), self.ld_width()),
                got: format!("{}×{}", ld.rows(), ld.cols()),
            });
        }
        Ok(())
    }

    /// Loss and gradients for every parameter (same layout as `params`).
    pub fn loss_and_grads(
        &self,
        x: &Tensor<T>,
        ld: &Matrix<T>,
        targets: Targets<'_, T>,
    ) -> Result<(T, Tensor<T>, Vec<Tensor<T>>), DNetError> {
        self.check_ld(x, ld)?;
        let (f_h, hd_cache) = forward(&self.config.hd_layers, self.hd_params(), x)?;
        let f = self.aggregate_batch(&f_h, ld)?;
        let tail = self.tail_specs()?;
        let (out, tail_cache) = forward(&tail, self.tail_params(), &f)?;
        let (loss, g_out) = head_loss(&out, targets)?;
        let (g_f, g_tail) = backward(&tail, self.tail_params(), &tail_cache, &g_out)?;
        let g_h = if self.ld_width() > 0 && self.config.aggregation == Aggregation::Concat {
            let n = f_h.shape()[1];
            let fw = g_f.shape()[1];
            let data: Vec<T> = g_f.as_slice().chunks(fw).flat_map(|row| row[..n].to_vec()).collect();
            Tensor::from_vec(f_h.shape(), data)?
        } else {
            g_f
        };
        let (_, mut grads) = backward(&self.config.hd_layers, self.hd_params(), &hd_cache, &g_h)?;
        grads.extend(g_tail);
        Ok((loss, out, grads))
    }
}

fn head_loss<T: Scalar>(out: &Tensor<T>, targets: Targets<'_, T>) -> Result<(T, Tensor<T>), DNetError> {
    Ok(match targets {
        Targets::Classes(labels) => softmax_ce(out, labels)?,
        Targets::Values(m) => mse(out, &Tensor::from_matrix(m))?,
    })
}

/// Concat puts the HD block first; Sum adds elementwise.
pub fn aggregate<T: Scalar>(f_h: &Tensor<T>, f_l: &Tensor<T>, mode: Aggregation) -> Result<Tensor<T>, DNetError> {
    let (hs, ls) = (f_h.shape(), f_l.shape());
    if hs.len() != 2 || ls.len() != 2 || hs[0] != ls[0] {
        return Err(DNetError::ShapeMismatch {
            expected: "two batch×width tensors with equal batch".into(),
            got: format!("{hs:?} and {ls:?}"),
        });
    }
    match mode {
        Aggregation::Concat => {
            let (n, m) = (hs[1], ls[1]);
            let mut data = Vec::with_capacity(hs[0] * (n + m));
            for b in 0..hs[0] {
                data.extend_from_slice(&f_h.as_slice()[b * n..(b + 1) * n]);
                data.extend_from_slice(&f_l.as_slice()[b * m..(b + 1) * m]);
            }
            Ok(Tensor::from_vec(&[hs[0], n + m], data)?)
        }
        Aggregation::Sum => {
            if hs != ls {
                return Err(DNetError::ShapeMismatch {
                    expected: format!("{hs:?} for sum aggregation"),
                    got: format!("{ls:?}"),
                });
            }
            let data = f_h.as_slice().iter().zip(f_l.as_slice()).map(|(&a, &b)| a + b).collect();
            Ok(Tensor::from_vec(hs, data)?)
        }
    }
}

/// Head output for a batch: logits (classification) or `Y` (regression).
pub fn dnet_forward<T: Scalar>(model: &DNetModel<T>, batch_x: &Tensor<T>, batch_ld: &Matrix<T>) -> Result<Tensor<T>, DNetError> {
    let [_, _, _, out] = model.forward_taps(batch_x, batch_ld)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction<T> {
    Classes(Vec<usize>),
    Values(Matrix<T>),
}

pub fn dnet_predict<T: Scalar>(model: &DNetModel<T>, x: &Matrix<T>) -> Result<Prediction<T>, DNetError> {
    let input = model.prepare_input(x)?;
    let ld = model.ld_features(x)?;
    let out = dnet_forward(model, &input, &ld)?;
    Ok(match model.config.head {
        Head::Classification { .. } => Prediction::Classes(argmax_rows(&out)),
        Head::Regression { .. } => Prediction::Values(out.to_matrix()),
    })
}

/// Activations at `tag`, one row per column of `x`.
pub fn extract_layer_features<T: Scalar>(model: &DNetModel<T>, x: &Matrix<T>, tag: LayerTag) -> Result<Matrix<T>, DNetError> {
    let input = model.prepare_input(x)?;
    let ld = model.ld_features(x)?;
    let taps = model.forward_taps(&input, &ld)?;
    let t = match tag {
        LayerTag::HdOut => &taps[0],
        LayerTag::Fused => &taps[1],
        LayerTag::PreHead => &taps[2],
    };
    Ok(t.to_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_and_sum() {
        let h = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let l = Tensor::from_vec(&[2, 1], vec![9.0, 8.0]).unwrap();
        let c = aggregate(&h, &l, Aggregation::Concat).unwrap();
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c.as_slice(), &[1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        assert!(aggregate(&h, &l, Aggregation::Sum).is_err());
        let neg = h.map(|v| -v);
        assert!(aggregate(&h, &neg, Aggregation::Sum).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tags_parse() {
        assert_eq!("fused".parse::<LayerTag>().unwrap(), LayerTag::Fused);
        assert!(matches!("logits".parse::<LayerTag>(), Err(DNetError::BadTag(_))));
    }
}

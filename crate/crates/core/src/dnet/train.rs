use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Standardizer};
use crate::nn::{adam_step, argmax_rows, chain_shapes, init_params, AdamConfig, AdamState, Tensor};
use crate::numerics::{Matrix, SeededRng};
use crate::scalar::Scalar;

use super::{augment_batch, compute_ld_features, input_shape_of, AugmentConfig, DNetConfig, DNetError, DNetModel, Head, Targets};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub augmentation: Option<AugmentConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            lr: 0.002,
            seed: 0,
            shuffle_each_epoch: true,
            augmentation: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DNetError> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(DNetError::BadConfig("batch_size, patience and max_epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(DNetError::BadConfig(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy for classification, R² for regression.
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// First epoch whose validation score reaches `level`.
    pub fn first_epoch_reaching(&self, level: f64) -> Option<usize> {
        self.epochs.iter().find(|e| e.val_acc >= level).map(|e| e.epoch)
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }
}

/// Patience-based stopping on a score where higher is better. Ties do not
/// count as improvement, so the earliest best epoch wins.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_score: f64,
    pub best_epoch: usize,
    pub epochs_since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_score: f64::NEG_INFINITY,
            best_epoch: 0,
            epochs_since_best: 0,
        }
    }

    /// Records an epoch's score; returns (improved, should_stop).
    pub fn observe(&mut self, epoch: usize, score: f64) -> (bool, bool) {
        if score > self.best_score || self.best_epoch == 0 {
            self.best_score = score;
            self.best_epoch = epoch;
            self.epochs_since_best = 0;
            (true, false)
        } else {
            self.epochs_since_best += 1;
            (false, self.epochs_since_best >= self.patience)
        }
    }
}

fn r_squared<T: Scalar>(pred: &Tensor<T>, target: &Matrix<T>) -> f64 {
    let t = target.as_slice();
    let n = t.len().max(1) as f64;
    let mean = t.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
    let sst: f64 = t.iter().map(|v| (v.to_f64_lossy() - mean).powi(2)).sum();
    let sse: f64 = pred
        .as_slice()
        .iter()
        .zip(t)
        .map(|(p, y)| (p.to_f64_lossy() - y.to_f64_lossy()).powi(2))
        .sum();
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - sse / sst
}

/// Batch-level supervision carved out of a data set.
enum Supervision<T> {
    Classes(Vec<usize>),
    Values(Matrix<T>),
}

impl<T: Scalar> Supervision<T> {
    fn of(ds: &Dataset<T>, head: Head) -> Result<Self, DNetError> {
        match head {
            Head::Classification { k } => {
                if let Some(&bad) = ds.labels.iter().find(|&&l| l >= k) {
                    return Err(DNetError::BadConfig(format!("label {bad} does not fit a {k}-class head")));
                }
                Ok(Supervision::Classes(ds.labels.clone()))
            }
            Head::Regression { out_dim } => match &ds.targets {
                Some(t) if t.cols() == out_dim && t.rows() == ds.n_samples() => Ok(Supervision::Values(t.clone())),
                _ => Err(DNetError::BadConfig(format!("regression head needs an N×{out_dim} target matrix"))),
            },
        }
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            Supervision::Classes(l) => Supervision::Classes(idx.iter().map(|&i| l[i]).collect()),
            Supervision::Values(m) => Supervision::Values(m.select_rows(idx)),
        }
    }

    fn targets(&self) -> Targets<'_, T> {
        match self {
            Supervision::Classes(l) => Targets::Classes(l),
            Supervision::Values(m) => Targets::Values(m),
        }
    }

    /// Correct-prediction count (classification) or R² (regression).
    fn score(&self, out: &Tensor<T>) -> f64 {
        match self {
            Supervision::Classes(l) => argmax_rows(out).iter().zip(l).filter(|(p, y)| p == y).count() as f64,
            Supervision::Values(m) => r_squared(out, m),
        }
    }
}

/// Builds a Kaiming-initialized model and the cached training LD features.
pub fn dnet_init<T: Scalar>(config: &DNetConfig, train: &Dataset<T>, seed: u64) -> Result<(DNetModel<T>, Matrix<T>), DNetError> {
    if config.fusion_width == 0 || config.head.out_dim() == 0 {
        return Err(DNetError::BadConfig("fusion_width and head size must be at least 1".into()));
    }
    let input_shape = input_shape_of(train);
    chain_shapes(&config.hd_layers, &input_shape)?;
    let input_stats = config.input_standardize.then(|| Standardizer::fit(&train.x));
    let (ld, ld_stats, ld_train) = compute_ld_features(&config.ld_source, &train.x, config.ld_standardize)?;
    let mut model = DNetModel {
        config: config.clone(),
        input_shape,
        input_stats,
        ld,
        ld_stats,
        params: Vec::new(),
        n_hd_params: 0,
    };
    let tail = model.tail_specs()?;
    let mut rng = SeededRng::new(seed).fork(1);
    let mut params = init_params(&mut rng, &config.hd_layers);
    model.n_hd_params = params.len();
    params.extend(init_params(&mut rng, &tail));
    model.params = params;
    Ok((model, ld_train))
}

/// Mini-batch Adam training with per-epoch validation and early stopping on
/// validation accuracy. The returned model carries the best epoch's
/// parameters.
pub fn dnet_train<T: Scalar>(
    config: &DNetConfig,
    tcfg: &TrainConfig,
    train: &Dataset<T>,
    val: &Dataset<T>,
) -> Result<(DNetModel<T>, TrainHistory), DNetError> {
    tcfg.validate()?;
    if train.n_samples() == 0 {
        return Err(DNetError::EmptySplit("training".into()));
    }
    if val.n_samples() == 0 {
        return Err(DNetError::EmptySplit("validation".into()));
    }
    let (mut model, ld_train) = dnet_init(config, train, tcfg.seed)?;
    let x_train = model.prepare_input(&train.x)?;
    let y_train = Supervision::of(train, config.head)?;
    let x_val = model.prepare_input(&val.x)?;
    let ld_val = model.ld_features(&val.x)?;
    let y_val = Supervision::of(val, config.head)?;
    if tcfg.augmentation.is_some() && x_train.shape().len() != 4 {
        return Err(DNetError::BadConfig("augmentation requires image data".into()));
    }

    let root = SeededRng::new(tcfg.seed);
    let mut shuffle_rng = root.fork(2);
    let mut augment_rng = root.fork(3);
    let adam_cfg = AdamConfig {
        lr: tcfg.lr,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(adam_cfg, &model.params);
    let mut stopper = EarlyStopping::new(tcfg.patience);
    let mut best_params = model.params.clone();
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    let n = train.n_samples();
    let classification = matches!(config.head, Head::Classification { .. });

    for epoch in 1..=tcfg.max_epochs {
        let order: Vec<usize> = if tcfg.shuffle_each_epoch {
            shuffle_rng.permutation(n)
        } else {
            (0..n).collect()
        };
        let mut loss_sum = 0.0;
        let mut score_sum = 0.0;
        for (batch, idx) in order.chunks(tcfg.batch_size).enumerate() {
            let mut xb = x_train.select(idx);
            if let Some(aug) = &tcfg.augmentation {
                xb = augment_batch(&mut augment_rng, &xb, aug)?;
            }
            let ldb = if model.ld_width() > 0 { ld_train.select_rows(idx) } else { Matrix::zeros(idx.len(), 0) };
            let yb = y_train.select(idx);
            let (loss, out, grads) = model.loss_and_grads(&xb, &ldb, yb.targets())?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(DNetError::NanLoss { epoch, batch });
            }
            adam_step(&mut adam, &mut model.params, &grads)?;
            loss_sum += loss.to_f64_lossy() * idx.len() as f64;
            score_sum += if classification { yb.score(&out) } else { yb.score(&out) * idx.len() as f64 };
        }
        let (val_loss, val_out, _) = model.loss_and_grads(&x_val, &ld_val, y_val.targets())?;
        let val_acc = if classification { y_val.score(&val_out) / val.n_samples() as f64 } else { y_val.score(&val_out) };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            train_acc: score_sum / n as f64,
            val_loss: val_loss.to_f64_lossy(),
            val_acc,
        };
        if !record.val_loss.is_finite() {
            return Err(DNetError::NanLoss { epoch, batch: 0 });
        }
        epochs.push(record);
        let (improved, stop) = stopper.observe(epoch, val_acc);
        if improved {
            best_params = model.params.clone();
        }
        if stop {
            stopped_early = true;
            break;
        }
    }
    model.params = best_params;
    Ok((
        model,
        TrainHistory {
            epochs,
            best_epoch: stopper.best_epoch,
            stopped_early,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopping_rule_example() {
        let mut s = EarlyStopping::new(10);
        let mut stopped_at = None;
        for epoch in 1..=100 {
            let score = if epoch <= 30 { epoch as f64 / 100.0 } else { 0.30 };
            if s.observe(epoch, score).1 {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(40));
        assert_eq!(s.best_epoch, 30);
    }

    #[test]
    fn ties_keep_earliest() {
        let mut s = EarlyStopping::new(3);
        s.observe(1, 0.5);
        s.observe(2, 0.7);
        s.observe(3, 0.7);
        assert_eq!(s.best_epoch, 2);
    }
}

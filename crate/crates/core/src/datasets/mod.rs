//! Labelled data sets with samples stored as columns (D×N), synthetic
//! generators with known ground truth, splitting, scaling and file I/O.

mod generators;
mod io;
mod split;
mod standardize;

use thiserror::Error;

use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub use generators::{make_bars, make_bars_with_noise, make_blobs, make_lowrank, BlobsSpec, CENTER_REJECTION_CAP};
pub use io::{load_csv, read_dwlm, read_dwlm_from, save_csv, write_dwlm, write_dwlm_to, write_matrix_csv, DWLM_MAGIC, DWLM_VERSION};
pub use split::{split, SplitSpec};
pub use standardize::{Standardizer, STD_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    /// D×N, one column per sample.
    pub x: Matrix<T>,
    /// Class index per sample (all zero for unlabelled data).
    pub labels: Vec<usize>,
    /// Original label strings in class-index order.
    pub class_names: Vec<String>,
    /// Regression targets, N×out, when present.
    pub targets: Option<Matrix<T>>,
    pub feature_names: Option<Vec<String>>,
    /// (channels, height, width) when columns are flattened images.
    pub image_shape: Option<[usize; 3]>,
}

impl<T: Scalar> Dataset<T> {
    /// Classification data with labels named by their index.
    pub fn classification(x: Matrix<T>, labels: Vec<usize>) -> Result<Self, DatasetError> {
        if labels.len() != x.cols() {
            return Err(DatasetError::DimMismatch {
                expected: format!("{} labels", x.cols()),
                got: format!("{}", labels.len()),
            });
        }
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Self {
            x,
            labels,
            class_names: (0..k).map(|c| c.to_string()).collect(),
            targets: None,
            feature_names: None,
            image_shape: None,
        })
    }

    pub fn with_image_shape(mut self, shape: [usize; 3]) -> Result<Self, DatasetError> {
        if shape.iter().product::<usize>() != self.x.rows() {
            return Err(DatasetError::DimMismatch {
                expected: format!("{} features", self.x.rows()),
                got: format!("image shape {shape:?}"),
            });
        }
        self.image_shape = Some(shape);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len().max(self.labels.iter().max().map_or(0, |&m| m + 1))
    }

    /// Samples `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            targets: self.targets.as_ref().map(|t| t.select_rows(idx)),
            feature_names: self.feature_names.clone(),
            image_shape: self.image_shape,
        }
    }

    /// Samples as rows (N×D).
    pub fn samples(&self) -> Matrix<T> {
        self.x.transpose()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DatasetError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("could not place cluster centers after {attempts} rejections")]
    CenterPlacementFailure { attempts: usize },
    #[error("data set too small: {0}")]
    TooSmall(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError { line: usize, column: usize, message: String },
    #[error("ragged row at line {line}: expected {expected} fields, got {got}")]
    RaggedRow { line: usize, expected: usize, got: usize },
    #[error("empty file")]
    EmptyFile,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: String, got: String },
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

use crate::numerics::Matrix;
use crate::scalar::Scalar;

use super::NnError;

/// Dense n-d array, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, NnError> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(NnError::ShapeMismatch {
                expected: format!("{want} values for shape {shape:?}"),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Batch×cols tensor from a matrix whose rows are samples.
    pub fn from_matrix(m: &Matrix<T>) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.as_slice().to_vec(),
        }
    }

    /// Flattens every axis after the first into columns.
    pub fn to_matrix(&self) -> Matrix<T> {
        let rows = self.shape.first().copied().unwrap_or(0);
        let cols = if rows == 0 { 0 } else { self.data.len() / rows };
        Matrix::from_vec(rows, cols, self.data.clone()).expect("consistent tensor")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Leading (batch) axis length.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self, NnError> {
        Self::from_vec(shape, self.data.clone())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows `idx` of the leading axis, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let per = if self.batch() == 0 { 0 } else { self.data.len() / self.batch() };
        let mut data = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            data.extend_from_slice(&self.data[i * per..(i + 1) * per]);
        }
        let mut shape = self.shape.clone();
        shape[0] = idx.len();
        Self { shape, data }
    }
}

impl<T> std::ops::Index<usize> for Tensor<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Tensor<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

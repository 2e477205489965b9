use crate::scalar::Scalar;

use super::{NnError, Tensor};

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if logits.shape().len() != 2 {
        return Err(NnError::ShapeMismatch {
            expected: "batch×classes".into(),
            got: format!("{:?}", logits.shape()),
        });
    }
    let k = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.as_mut_slice().chunks_mut(k.max(1)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(out)
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits, `(softmax - onehot) / batch`.
pub fn softmax_ce<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>), NnError> {
    let probs = softmax(logits)?;
    let (batch, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != batch {
        return Err(NnError::ShapeMismatch {
            expected: format!("{batch} labels"),
            got: format!("{}", labels.len()),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(NnError::BadLabel { label: bad, classes: k });
    }
    let scale = T::one() / T::from_usize(batch.max(1)).unwrap();
    let logits_s = logits.as_slice();
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (n, &y) in labels.iter().enumerate() {
        let row = &logits_s[n * k..(n + 1) * k];
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        // Running mean: exact when every sample contributes the same value.
        loss += (lse - row[y] - loss) / T::from_usize(n + 1).unwrap();
        grad[n * k + y] -= T::one();
    }
    for g in grad.as_mut_slice() {
        *g *= scale;
    }
    Ok((loss, grad))
}

/// Mean squared error over every element and its gradient.
pub fn mse<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>), NnError> {
    if pred.shape() != target.shape() {
        return Err(NnError::ShapeMismatch {
            expected: format!("{:?}", pred.shape()),
            got: format!("{:?}", target.shape()),
        });
    }
    let count = T::from_usize(pred.len().max(1)).unwrap();
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(pred.shape());
    for (i, (&p, &t)) in pred.as_slice().iter().zip(target.as_slice()).enumerate() {
        let d = p - t;
        loss += d * d;
        grad[i] = T::of(2.0) * d / count;
    }
    Ok((loss / count, grad))
}

/// Row-wise argmax, lowest index on ties.
pub fn argmax_rows<T: Scalar>(scores: &Tensor<T>) -> Vec<usize> {
    let k = scores.shape().get(1).copied().unwrap_or(1).max(1);
    scores
        .as_slice()
        .chunks(k)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let logits = Tensor::<f64>::zeros(&[3, 4]);
        let (loss, grad) = softmax_ce(&logits, &[0, 1, 3]).unwrap();
        assert_eq!(loss, 4f64.ln());
        let p = softmax(&logits).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.25));
        assert!((grad[0] - (0.25 - 1.0) / 3.0).abs() < 1e-16);
    }

    #[test]
    fn extreme_logits_and_overflow() {
        let logits = Tensor::from_vec(&[1, 3], vec![1000.0, -1000.0, 0.0]).unwrap();
        let (loss, _) = softmax_ce(&logits, &[0]).unwrap();
        assert!(loss >= 0.0 && loss < 1e-300);
        let p = softmax(&logits).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bad_label() {
        let logits = Tensor::<f64>::zeros(&[1, 2]);
        assert!(matches!(softmax_ce(&logits, &[2]), Err(NnError::BadLabel { label: 2, classes: 2 })));
    }

    #[test]
    fn mse_examples() {
        let a = Tensor::from_vec(&[1, 2], vec![3.0, 4.0]).unwrap();
        let (l, g) = mse(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let b = Tensor::from_vec(&[1, 2], vec![2.0, 3.0]).unwrap();
        let (l, g) = mse(&a, &b).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.as_slice(), &[1.0, 1.0]);
        assert!(mse(&a, &Tensor::zeros(&[2, 1])).is_err());
    }

    #[test]
    fn argmax_ties() {
        let s = Tensor::from_vec(&[2, 3], vec![2.0, 1.0, 1.0, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(argmax_rows(&s), vec![0, 0]);
    }
}

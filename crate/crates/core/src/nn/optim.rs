use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one pair of moment buffers per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        let zeros: Vec<Tensor<T>> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn first_moments(&self) -> &[Tensor<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor<T>] {
        &self.v
    }
}

pub fn adam_step<T: Scalar>(state: &mut AdamState<T>, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<(), NnError> {
    let aligned = params.len() == grads.len()
        && params.len() == state.m.len()
        && params.iter().zip(grads).zip(&state.m).all(|((p, g), m)| p.shape() == g.shape() && p.shape() == m.shape());
    if !aligned {
        return Err(NnError::ShapeMismatch {
            expected: "gradients and moments shaped like the parameters".into(),
            got: format!("{} params, {} grads", params.len(), grads.len()),
        });
    }
    state.step += 1;
    let c = state.config;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let t = state.step as i32;
    let corr1 = T::one() - T::of(c.beta1.powi(t));
    let corr2 = T::one() - T::of(c.beta2.powi(t));
    let (lr, eps) = (T::of(c.lr), T::of(c.epsilon));
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (T::one() - b1) * gi;
            v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_params() {
        let mut p = vec![Tensor::from_vec(&[2], vec![1.0, -2.0]).unwrap()];
        let g = vec![Tensor::<f64>::zeros(&[2])];
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut st, &mut p, &g).unwrap();
        assert_eq!(p[0].as_slice(), &[1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_scalar() {
        let mut p = vec![Tensor::from_vec(&[1], vec![0.0]).unwrap()];
        let g = vec![Tensor::from_vec(&[1], vec![1.0]).unwrap()];
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut st, &mut p, &g).unwrap();
        let expected: f64 = -0.002 / (1.0 + 1e-8);
        assert!((p[0][0] - expected).abs() < 1e-15);
    }

    #[test]
    fn misaligned() {
        let mut p = vec![Tensor::<f64>::zeros(&[2])];
        let mut st = AdamState::new(AdamConfig::default(), &p);
        assert!(adam_step(&mut st, &mut p, &[Tensor::zeros(&[3])]).is_err());
    }
}

use crate::scalar::Scalar;

use super::{backward, forward, mse, softmax_ce, LayerSpec, NnError, Tensor};

pub const FD_STEP: f64 = 1e-6;

/// Loss attached to a stack for gradient checking.
#[derive(Debug, Clone, Copy)]
pub enum Loss<'a, T> {
    SoftmaxCe(&'a [usize]),
    Mse(&'a Tensor<T>),
}

impl<T: Scalar> Loss<'_, T> {
    pub fn eval(&self, output: &Tensor<T>) -> Result<(T, Tensor<T>), NnError> {
        match self {
            Loss::SoftmaxCe(labels) => softmax_ce(output, labels),
            Loss::Mse(target) => mse(output, target),
        }
    }
}

pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    let den = analytic.abs().max(numeric.abs()).max(T::of(1e-12));
    (analytic - numeric).abs() / den
}

/// Max over tensors of the relative error `‖a - n‖ / max(‖a‖, ‖n‖)` between
/// `analytic` and central differences `n` of `f`, taken over every entry of
/// every tensor in `point`.
pub fn fd_max_error<T: Scalar>(
    point: &[Tensor<T>],
    analytic: &[Tensor<T>],
    mut f: impl FnMut(&[Tensor<T>]) -> T,
) -> T {
    let h = T::of(FD_STEP);
    let mut work = point.to_vec();
    let mut worst = T::zero();
    for (t, grad) in analytic.iter().enumerate() {
        let (mut diff, mut na, mut nn) = (T::zero(), T::zero(), T::zero());
        for i in 0..grad.len() {
            let orig = work[t][i];
            work[t][i] = orig + h;
            let up = f(&work);
            work[t][i] = orig - h;
            let down = f(&work);
            work[t][i] = orig;
            let fd = (up - down) / (h + h);
            diff += (grad[i] - fd) * (grad[i] - fd);
            na += grad[i] * grad[i];
            nn += fd * fd;
        }
        let den = na.sqrt().max(nn.sqrt()).max(T::of(1e-12));
        worst = worst.max(diff.sqrt() / den);
    }
    worst
}

/// Max per-tensor relative error of [`backward`] against central differences, over
/// every parameter and every input entry.
pub fn grad_check<T: Scalar>(
    specs: &[LayerSpec],
    params: &[Tensor<T>],
    x: &Tensor<T>,
    loss: Loss<'_, T>,
) -> Result<T, NnError> {
    let (out, cache) = forward(specs, params, x)?;
    let (_, g_out) = loss.eval(&out)?;
    let (g_in, g_params) = backward(specs, params, &cache, &g_out)?;

    let value = |p: &[Tensor<T>], input: &Tensor<T>| -> T {
        let (o, _) = forward(specs, p, input).expect("shapes validated");
        loss.eval(&o).expect("shapes validated").0
    };
    let e_params = fd_max_error(params, &g_params, |p| value(p, x));
    let e_input = fd_max_error(std::slice::from_ref(x), std::slice::from_ref(&g_in), |inp| value(params, &inp[0]));
    Ok(e_params.max(e_input))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_zero_input() {
        let specs = [LayerSpec::Dense { in_dim: 3, out_dim: 2 }];
        let params = vec![Tensor::<f64>::zeros(&[2, 3]), Tensor::zeros(&[2])];
        let x = Tensor::zeros(&[2, 3]);
        let target = Tensor::zeros(&[2, 2]);
        assert_eq!(grad_check(&specs, &params, &x, Loss::Mse(&target)).unwrap(), 0.0);
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let p = vec![Tensor::from_vec(&[2], vec![0.3, -0.7]).unwrap()];
        let f = |p: &[Tensor<f64>]| p[0][0] * p[0][0] + 3.0 * p[0][1];
        let good = vec![Tensor::from_vec(&[2], vec![0.6, 3.0]).unwrap()];
        let bad = vec![Tensor::from_vec(&[2], vec![0.6, 3.3]).unwrap()];
        assert!(fd_max_error(&p, &good, f) < 1e-8);
        assert!(fd_max_error(&p, &bad, f) > 1e-2);
    }
}

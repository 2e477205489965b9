use serde::{Deserialize, Serialize};

use crate::numerics::SeededRng;
use crate::scalar::Scalar;

use super::{NnError, Tensor};

pub const KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// One pixel of zero padding; spatial size preserved.
    Same,
    /// No padding; spatial size shrinks by 2.
    Valid,
}

impl Padding {
    fn amount(self) -> usize {
        match self {
            Padding::Same => 1,
            Padding::Valid => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum LayerSpec {
    Dense { in_dim: usize, out_dim: usize },
    Relu,
    /// 3×3 kernel, stride 1.
    Conv2d { in_ch: usize, out_ch: usize, pad: Padding },
    /// 2×2 window, stride 2; odd trailing rows/columns are dropped.
    MaxPool2,
    Flatten,
}

impl LayerSpec {
    /// Shapes of this layer's parameter tensors (weight, bias).
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => vec![vec![out_dim, in_dim], vec![out_dim]],
            LayerSpec::Conv2d { in_ch, out_ch, .. } => vec![vec![out_ch, in_ch, KERNEL, KERNEL], vec![out_ch]],
            _ => vec![],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_shapes().len()
    }

    pub fn fan_in(&self) -> Option<usize> {
        match *self {
            LayerSpec::Dense { in_dim, .. } => Some(in_dim),
            LayerSpec::Conv2d { in_ch, .. } => Some(in_ch * KERNEL * KERNEL),
            _ => None,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let mismatch = |expected: String| NnError::ShapeMismatch {
            expected,
            got: format!("{input:?}"),
        };
        match *self {
            LayerSpec::Dense { in_dim, out_dim } => {
                if input != [in_dim] {
                    return Err(mismatch(format!("[{in_dim}]")));
                }
                Ok(vec![out_dim])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Conv2d { in_ch, out_ch, pad } => {
                let p = pad.amount();
                match input {
                    &[c, h, w] if c == in_ch && h + 2 * p >= KERNEL && w + 2 * p >= KERNEL => {
                        Ok(vec![out_ch, h + 2 * p - 2, w + 2 * p - 2])
                    }
                    _ => Err(mismatch(format!("[{in_ch}, h, w] with h, w >= {}", KERNEL - 2 * p))),
                }
            }
            LayerSpec::MaxPool2 => match input {
                &[c, h, w] if h >= 2 && w >= 2 => Ok(vec![c, h / 2, w / 2]),
                _ => Err(mismatch("[c, h, w] with h, w >= 2".into())),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Validates that `specs` chain from `input` and returns every per-sample
/// activation shape, input first.
pub fn chain_shapes(specs: &[LayerSpec], input: &[usize]) -> Result<Vec<Vec<usize>>, NnError> {
    let mut shapes = vec![input.to_vec()];
    for (i, spec) in specs.iter().enumerate() {
        let next = spec.output_shape(shapes.last().unwrap()).map_err(|e| match e {
            NnError::ShapeMismatch { expected, got } => NnError::ShapeMismatch {
                expected: format!("layer {i} ({spec:?}) input {expected}"),
                got,
            },
            other => other,
        })?;
        shapes.push(next);
    }
    Ok(shapes)
}

/// Kaiming-normal weights (std √(2/fan_in)) and zero biases.
pub fn kaiming_init<T: Scalar>(rng: &mut SeededRng, spec: &LayerSpec) -> Vec<Tensor<T>> {
    let Some(fan_in) = spec.fan_in() else {
        return vec![];
    };
    let std = (2.0 / fan_in as f64).sqrt();
    let shapes = spec.param_shapes();
    let mut w = Tensor::zeros(&shapes[0]);
    for v in w.as_mut_slice() {
        *v = T::of(std * rng.normal());
    }
    vec![w, Tensor::zeros(&shapes[1])]
}

/// Parameters for a whole stack, concatenated layer by layer.
pub fn init_params<T: Scalar>(rng: &mut SeededRng, specs: &[LayerSpec]) -> Vec<Tensor<T>> {
    specs.iter().flat_map(|s| kaiming_init(rng, s)).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum LayerCache<T> {
    Input(Tensor<T>),
    Pool { in_shape: Vec<usize>, argmax: Vec<usize> },
    Shape(Vec<usize>),
}

/// Intermediate state recorded by [`forward`] for [`backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cache<T> {
    layers: Vec<LayerCache<T>>,
}

fn expect_shape<T: Scalar>(x: &Tensor<T>, rank: usize, what: &str) -> Result<(), NnError> {
    if x.shape().len() != rank {
        return Err(NnError::ShapeMismatch {
            expected: what.into(),
            got: format!("{:?}", x.shape()),
        });
    }
    Ok(())
}

fn check_params<T: Scalar>(specs: &[LayerSpec], params: &[Tensor<T>]) -> Result<(), NnError> {
    let want: Vec<Vec<usize>> = specs.iter().flat_map(|s| s.param_shapes()).collect();
    let got: Vec<Vec<usize>> = params.iter().map(|p| p.shape().to_vec()).collect();
    if want != got {
        return Err(NnError::ShapeMismatch {
            expected: format!("parameters {want:?}"),
            got: format!("{got:?}"),
        });
    }
    Ok(())
}

fn dense_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (batch, inp) = (x.shape()[0], x.shape()[1]);
    let out = w.shape()[0];
    let mut y = Tensor::zeros(&[batch, out]);
    let (xs, ws) = (x.as_slice(), w.as_slice());
    for n in 0..batch {
        let row = &xs[n * inp..(n + 1) * inp];
        for o in 0..out {
            let wr = &ws[o * inp..(o + 1) * inp];
            let mut acc = b[o];
            for i in 0..inp {
                acc += row[i] * wr[i];
            }
            y[n * out + o] = acc;
        }
    }
    y
}

fn dense_backward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, g: &Tensor<T>) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let (batch, inp) = (x.shape()[0], x.shape()[1]);
    let out = w.shape()[0];
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[out]);
    let (xs, ws, gs) = (x.as_slice(), w.as_slice(), g.as_slice());
    for n in 0..batch {
        for o in 0..out {
            let go = gs[n * out + o];
            db[o] += go;
            for i in 0..inp {
                dw[o * inp + i] += go * xs[n * inp + i];
                dx[n * inp + i] += go * ws[o * inp + i];
            }
        }
    }
    (dx, dw, db)
}

fn conv_geometry<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, pad: Padding) -> [usize; 8] {
    let s = x.shape();
    let p = pad.amount();
    [s[0], s[1], s[2], s[3], w.shape()[0], s[2] + 2 * p - 2, s[3] + 2 * p - 2, p]
}

fn conv_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>, pad: Padding) -> Tensor<T> {
    let [batch, c, h, wd, out, oh, ow, p] = conv_geometry(x, w, pad);
    let mut y = Tensor::zeros(&[batch, out, oh, ow]);
    for n in 0..batch {
        for o in 0..out {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = b[o];
                    for ch in 0..c {
                        for ki in 0..KERNEL {
                            let yi = i + ki;
                            if yi < p || yi - p >= h {
                                continue;
                            }
                            for kj in 0..KERNEL {
                                let xj = j + kj;
                                if xj < p || xj - p >= wd {
                                    continue;
                                }
                                let xv = x[((n * c + ch) * h + yi - p) * wd + xj - p];
                                acc += w[((o * c + ch) * KERNEL + ki) * KERNEL + kj] * xv;
                            }
                        }
                    }
                    y[((n * out + o) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    y
}

fn conv_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: &Tensor<T>,
    pad: Padding,
) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let [batch, c, h, wd, out, oh, ow, p] = conv_geometry(x, w, pad);
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[out]);
    for n in 0..batch {
        for o in 0..out {
            for i in 0..oh {
                for j in 0..ow {
                    let go = g[((n * out + o) * oh + i) * ow + j];
                    db[o] += go;
                    for ch in 0..c {
                        for ki in 0..KERNEL {
                            let yi = i + ki;
                            if yi < p || yi - p >= h {
                                continue;
                            }
                            for kj in 0..KERNEL {
                                let xj = j + kj;
                                if xj < p || xj - p >= wd {
                                    continue;
                                }
                                let xi = ((n * c + ch) * h + yi - p) * wd + xj - p;
                                let wi = ((o * c + ch) * KERNEL + ki) * KERNEL + kj;
                                dw[wi] += go * x[xi];
                                dx[xi] += go * w[wi];
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

fn pool_forward<T: Scalar>(x: &Tensor<T>) -> (Tensor<T>, Vec<usize>) {
    let s = x.shape();
    let (batch, c, h, w) = (s[0], s[1], s[2], s[3]);
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Tensor::zeros(&[batch, c, oh, ow]);
    let mut argmax = Vec::with_capacity(y.len());
    for n in 0..batch {
        for ch in 0..c {
            let base = (n * c + ch) * h;
            for i in 0..oh {
                for j in 0..ow {
                    let mut best = (base + 2 * i) * w + 2 * j;
                    for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                        let k = (base + 2 * i + di) * w + 2 * j + dj;
                        if x[k] > x[best] {
                            best = k;
                        }
                    }
                    y[((n * c + ch) * oh + i) * ow + j] = x[best];
                    argmax.push(best);
                }
            }
        }
    }
    (y, argmax)
}

/// Runs the stack on a batch (leading axis = samples).
pub fn forward<T: Scalar>(
    specs: &[LayerSpec],
    params: &[Tensor<T>],
    x: &Tensor<T>,
) -> Result<(Tensor<T>, Cache<T>), NnError> {
    check_params(specs, params)?;
    if x.shape().is_empty() {
        return Err(NnError::ShapeMismatch {
            expected: "a batched tensor".into(),
            got: "[]".into(),
        });
    }
    chain_shapes(specs, &x.shape()[1..])?;
    let mut cur = x.clone();
    let mut cache = Vec::with_capacity(specs.len());
    let mut p = 0;
    for spec in specs {
        let next = match *spec {
            LayerSpec::Dense { .. } => {
                expect_shape(&cur, 2, "batch×features")?;
                let y = dense_forward(&cur, &params[p], &params[p + 1]);
                p += 2;
                cache.push(LayerCache::Input(cur));
                y
            }
            LayerSpec::Relu => {
                let y = cur.map(|v| if v > T::zero() { v } else { T::zero() });
                cache.push(LayerCache::Input(cur));
                y
            }
            LayerSpec::Conv2d { pad, .. } => {
                expect_shape(&cur, 4, "batch×channels×height×width")?;
                let y = conv_forward(&cur, &params[p], &params[p + 1], pad);
                p += 2;
                cache.push(LayerCache::Input(cur));
                y
            }
            LayerSpec::MaxPool2 => {
                expect_shape(&cur, 4, "batch×channels×height×width")?;
                let (y, argmax) = pool_forward(&cur);
                cache.push(LayerCache::Pool {
                    in_shape: cur.shape().to_vec(),
                    argmax,
                });
                y
            }
            LayerSpec::Flatten => {
                let b = cur.batch();
                let per = if b == 0 { 0 } else { cur.len() / b };
                let y = cur.reshape(&[b, per])?;
                cache.push(LayerCache::Shape(cur.shape().to_vec()));
                y
            }
        };
        cur = next;
    }
    Ok((cur, Cache { layers: cache }))
}

/// Gradients with respect to the input and to every parameter tensor (same
/// layout as `params`).
pub fn backward<T: Scalar>(
    specs: &[LayerSpec],
    params: &[Tensor<T>],
    cache: &Cache<T>,
    output_grad: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<Tensor<T>>), NnError> {
    check_params(specs, params)?;
    if cache.layers.len() != specs.len() {
        return Err(NnError::ShapeMismatch {
            expected: format!("cache for {} layers", specs.len()),
            got: format!("{} layers", cache.layers.len()),
        });
    }
    let mut grads: Vec<Tensor<T>> = params.iter().map(|t| Tensor::zeros(t.shape())).collect();
    let mut p = params.len();
    let mut g = output_grad.clone();
    for (spec, entry) in specs.iter().zip(&cache.layers).rev() {
        g = match (*spec, entry) {
            (LayerSpec::Dense { .. }, LayerCache::Input(x)) => {
                p -= 2;
                let (dx, dw, db) = dense_backward(x, &params[p], &g);
                grads[p] = dw;
                grads[p + 1] = db;
                dx
            }
            (LayerSpec::Relu, LayerCache::Input(x)) => {
                let mut dx = g.clone();
                for (d, &v) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                    if v <= T::zero() {
                        *d = T::zero();
                    }
                }
                dx
            }
            (LayerSpec::Conv2d { pad, .. }, LayerCache::Input(x)) => {
                p -= 2;
                let (dx, dw, db) = conv_backward(x, &params[p], &g, pad);
                grads[p] = dw;
                grads[p + 1] = db;
                dx
            }
            (LayerSpec::MaxPool2, LayerCache::Pool { in_shape, argmax }) => {
                let mut dx = Tensor::zeros(in_shape);
                for (k, &src) in argmax.iter().enumerate() {
                    dx[src] += g[k];
                }
                dx
            }
            (LayerSpec::Flatten, LayerCache::Shape(shape)) => g.reshape(shape)?,
            _ => unreachable!("cache built by forward for the same specs"),
        };
    }
    Ok((g, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn identity_dense() {
        let spec = [LayerSpec::Dense { in_dim: 3, out_dim: 3 }];
        let w = t(&[3, 3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let params = vec![w, Tensor::zeros(&[3])];
        let x = t(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.0, -1.0]);
        let (y, cache) = forward(&spec, &params, &x).unwrap();
        assert_eq!(y, x);
        let (dx, _) = backward(&spec, &params, &cache, &x).unwrap();
        assert_eq!(dx, x);
    }

    #[test]
    fn relu_values_and_grad() {
        let spec = [LayerSpec::Relu];
        let x = t(&[1, 3], &[-1.0, 0.0, 2.0]);
        let (y, cache) = forward(&spec, &[], &x).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 2.0]);
        let (yy, _) = forward(&spec, &[], &y).unwrap();
        assert_eq!(yy, y);
        let (dx, _) = backward(&spec, &[], &cache, &t(&[1, 3], &[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(dx.as_slice(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn maxpool_picks_max() {
        let spec = [LayerSpec::MaxPool2];
        let x = t(&[1, 1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let (y, cache) = forward(&spec, &[], &x).unwrap();
        assert_eq!(y.as_slice(), &[4.0]);
        let (dx, _) = backward(&spec, &[], &cache, &t(&[1, 1, 1, 1], &[1.0])).unwrap();
        assert_eq!(dx.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn conv_shapes() {
        let same = LayerSpec::Conv2d { in_ch: 2, out_ch: 4, pad: Padding::Same };
        let valid = LayerSpec::Conv2d { in_ch: 2, out_ch: 4, pad: Padding::Valid };
        assert_eq!(same.output_shape(&[2, 8, 8]).unwrap(), vec![4, 8, 8]);
        assert_eq!(valid.output_shape(&[2, 8, 8]).unwrap(), vec![4, 6, 6]);
        assert!(valid.output_shape(&[3, 8, 8]).is_err());
        assert_eq!(same.fan_in(), Some(18));
    }

    #[test]
    fn conv_single_tap() {
        // Kernel with a lone centre tap copies the input under Same padding.
        let spec = [LayerSpec::Conv2d { in_ch: 1, out_ch: 1, pad: Padding::Same }];
        let mut w = Tensor::zeros(&[1, 1, 3, 3]);
        w[4] = 1.0;
        let x = t(&[1, 1, 2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (y, _) = forward(&spec, &[w, Tensor::zeros(&[1])], &x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn chain_validation() {
        let specs = [
            LayerSpec::Conv2d { in_ch: 1, out_ch: 2, pad: Padding::Same },
            LayerSpec::Relu,
            LayerSpec::MaxPool2,
            LayerSpec::Flatten,
            LayerSpec::Dense { in_dim: 32, out_dim: 3 },
        ];
        let shapes = chain_shapes(&specs, &[1, 8, 8]).unwrap();
        assert_eq!(shapes.last().unwrap(), &vec![3]);
        assert!(chain_shapes(&specs, &[1, 6, 6]).is_err());
    }

    #[test]
    fn kaiming_std_formula() {
        let mut rng = SeededRng::new(3);
        let spec = LayerSpec::Dense { in_dim: 8, out_dim: 12_500 };
        let p: Vec<Tensor<f64>> = kaiming_init(&mut rng, &spec);
        let w = p[0].as_slice();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - 0.5).abs() < 0.005, "std {std}");
        assert!(p[1].as_slice().iter().all(|&b| b == 0.0));
        assert!(kaiming_init::<f64>(&mut rng, &LayerSpec::Relu).is_empty());
    }
}

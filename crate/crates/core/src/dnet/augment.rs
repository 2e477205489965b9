use serde::{Deserialize, Serialize};

use crate::nn::Tensor;
use crate::numerics::SeededRng;
use crate::scalar::Scalar;

use super::DNetError;

/// Random image perturbations for training batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Horizontal flip with probability 0.5.
    pub reflect: bool,
    /// Shifts are uniform integers in `-translate_px..=translate_px` on each axis.
    pub translate_px: usize,
    /// Zoom factor interval.
    pub scale_range: [f64; 2],
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            reflect: true,
            translate_px: 3,
            scale_range: [0.9, 1.1],
        }
    }
}

impl AugmentConfig {
    pub fn disabled() -> Self {
        Self {
            reflect: false,
            translate_px: 0,
            scale_range: [1.0, 1.0],
        }
    }

    pub fn validate(&self, height: usize, width: usize) -> Result<(), DNetError> {
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && hi < 2.0 && lo <= hi) {
            return Err(DNetError::BadConfig(format!("scale_range must lie in (0, 2) with lo <= hi, got {:?}", self.scale_range)));
        }
        if self.translate_px >= height.min(width).max(1) {
            return Err(DNetError::BadConfig(format!(
                "translate_px {} must be smaller than the image ({height}x{width})",
                self.translate_px
            )));
        }
        Ok(())
    }
}

/// Horizontal flip of a (C, H, W) image.
pub fn reflect_image<T: Scalar>(img: &[T], c: usize, h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::zero(); c * h * w];
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                out[(ch * h + i) * w + j] = img[(ch * h + i) * w + (w - 1 - j)];
            }
        }
    }
    out
}

/// Shifts content by (dy, dx); vacated pixels are zero.
pub fn translate_image<T: Scalar>(img: &[T], c: usize, h: usize, w: usize, dy: i64, dx: i64) -> Vec<T> {
    let mut out = vec![T::zero(); c * h * w];
    for ch in 0..c {
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                let (si, sj) = (i - dy, j - dx);
                if si >= 0 && sj >= 0 && si < h as i64 && sj < w as i64 {
                    out[(ch * h + i as usize) * w + j as usize] = img[(ch * h + si as usize) * w + sj as usize];
                }
            }
        }
    }
    out
}

/// Nearest-neighbour zoom by `s` about the image centre, cropped or
/// zero-padded to the original size.
pub fn scale_image<T: Scalar>(img: &[T], c: usize, h: usize, w: usize, s: f64) -> Vec<T> {
    let (ci, cj) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let mut out = vec![T::zero(); c * h * w];
    for i in 0..h {
        let si = (ci + (i as f64 - ci) / s).round();
        if si < 0.0 || si >= h as f64 {
            continue;
        }
        for j in 0..w {
            let sj = (cj + (j as f64 - cj) / s).round();
            if sj < 0.0 || sj >= w as f64 {
                continue;
            }
            for ch in 0..c {
                out[(ch * h + i) * w + j] = img[(ch * h + si as usize) * w + sj as usize];
            }
        }
    }
    out
}

/// Applies scale, translation and reflection (in that order) to each image
/// of a B×C×H×W batch independently.
pub fn augment_batch<T: Scalar>(rng: &mut SeededRng, images: &Tensor<T>, cfg: &AugmentConfig) -> Result<Tensor<T>, DNetError> {
    let s = images.shape();
    if s.len() != 4 {
        return Err(DNetError::BadConfig(format!("augmentation needs B×C×H×W images, got shape {s:?}")));
    }
    let (b, c, h, w) = (s[0], s[1], s[2], s[3]);
    cfg.validate(h, w)?;
    let per = c * h * w;
    let mut out = Vec::with_capacity(images.len());
    let t = cfg.translate_px as i64;
    for n in 0..b {
        let mut img = images.as_slice()[n * per..(n + 1) * per].to_vec();
        let [lo, hi] = cfg.scale_range;
        if lo != 1.0 || hi != 1.0 {
            let factor = rng.uniform_in(lo, hi);
            img = scale_image(&img, c, h, w, factor);
        }
        if t > 0 {
            let dy = rng.int_in(-t, t);
            let dx = rng.int_in(-t, t);
            img = translate_image(&img, c, h, w, dy, dx);
        }
        if cfg.reflect && rng.bernoulli(0.5) {
            img = reflect_image(&img, c, h, w);
        }
        out.extend(img);
    }
    Ok(Tensor::from_vec(s, out)?)
}

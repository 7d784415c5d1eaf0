//! Synthetic stand-ins for real photographs and up-sampling generators.
//!
//! Real images are smooth Gaussian random fields plus per-pixel sensor
//! noise. Fake images start from a half-resolution field, are up-sampled
//! by a transposed convolution whose output phases have unequal tap sums,
//! and carry an alternating-parity residual. Both classes share
//! their global mean and nearly their standard deviation; the difference
//! lives in the finest detail bands.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetItem, ItemSource, Label};
use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::{derive_seed, rng_from};

/// Amplitude of the per-channel colour fields relative to the shared
/// luminance field.
const CHROMA_GAIN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Output side length in pixels (even).
    pub side: usize,
    /// Smoothness of the underlying texture, in output pixels.
    pub blur_sigma: f64,
    /// Standard deviation of the per-pixel sensor noise of real images.
    pub noise_sigma: f64,
    /// Tap-sum gain of each transposed-convolution output phase, indexed by
    /// output row/column parity.
    pub upsample_kernel: [[f64; 2]; 2],
    /// Amplitude of the `(-1)^(x+y)` residual added to fakes.
    pub artifact_gain: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            side: 64,
            blur_sigma: 4.0,
            noise_sigma: 0.015,
            upsample_kernel: [[1.0075, 0.9925], [0.9925, 1.0075]],
            artifact_gain: 0.0095,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.side < 2 || !self.side.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "synthetic side {} must be even and at least 2",
                self.side
            )));
        }
        if !(self.blur_sigma >= 0.0 && self.noise_sigma >= 0.0 && self.artifact_gain.is_finite()) {
            return Err(Error::InvalidConfig(
                "blur_sigma and noise_sigma must be non-negative".into(),
            ));
        }
        if self.upsample_kernel.iter().flatten().any(|k| !k.is_finite()) {
            return Err(Error::InvalidConfig("upsample_kernel must be finite".into()));
        }
        Ok(())
    }
}

/// Normalized 1D Gaussian taps covering +-3 sigma.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

#[inline]
fn reflect(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - 1 - m) as usize
    } else {
        m as usize
    }
}

/// Separable Gaussian blur of a square `side x side` plane, reflect edges.
fn blur(plane: &[f64], side: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    if taps.len() == 1 {
        return plane.to_vec();
    }
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..side {
        let row = &plane[y * side..(y + 1) * side];
        for x in 0..side {
            tmp[y * side + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * row[reflect(x as isize + k as isize - r, side)])
                .sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..side {
        for x in 0..side {
            out[y * side + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[reflect(y as isize + k as isize - r, side) * side + x])
                .sum();
        }
    }
    out
}

fn white<R: Rng + ?Sized>(rng: &mut R, n: usize, std: f64) -> Vec<f64> {
    (0..n)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Three correlated colour planes: a shared luminance field plus weaker
/// per-channel fields, all blurred with `sigma`.
fn colour_field<R: Rng + ?Sized>(rng: &mut R, side: usize, sigma: f64, std: f64) -> [Vec<f64>; 3] {
    let n = side * side;
    let lum = blur(&white(rng, n, std), side, sigma);
    std::array::from_fn(|_| {
        let chroma = blur(&white(rng, n, std), side, sigma);
        lum.iter().zip(&chroma).map(|(l, c)| l + CHROMA_GAIN * c).collect()
    })
}

/// Shifts each plane to mean 0.5 and interleaves into a clamped tensor.
fn finish(planes: [Vec<f64>; 3], side: usize) -> ImageTensor {
    let mut data = vec![0.0; side * side * 3];
    for (c, plane) in planes.iter().enumerate() {
        let mean = plane.iter().sum::<f64>() / plane.len() as f64;
        for (i, v) in plane.iter().enumerate() {
            data[i * 3 + c] = v - mean + 0.5;
        }
    }
    ImageTensor::from_clamped(side, side, 3, data)
}

/// A smooth textured image with sensor noise.
pub fn synth_real<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<ImageTensor> {
    cfg.validate()?;
    let side = cfg.side;
    let mut planes = colour_field(rng, side, cfg.blur_sigma, 1.0);
    for plane in &mut planes {
        for v in plane.iter_mut() {
            *v += cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(finish(planes, side))
}

/// Blur variance, in output px^2, credited to bilinear x2 up-sampling.
const BILINEAR_VARIANCE: f64 = 1.25;

/// Bilinear x2 up-sampling of a square plane (half-pixel aligned, edge
/// replicate): each output mixes its nearest base sample with weight 3/4
/// and the next one along each axis with weight 1/4.
fn upsample_bilinear(plane: &[f64], half: usize) -> Vec<f64> {
    let side = 2 * half;
    let taps = |o: usize| -> (usize, usize) {
        let m = o / 2;
        let other = if o.is_multiple_of(2) { m.saturating_sub(1) } else { (m + 1).min(half - 1) };
        (m, other)
    };
    let mut out = vec![0.0; side * side];
    for y in 0..side {
        let (ya, yb) = taps(y);
        for x in 0..side {
            let (xa, xb) = taps(x);
            let p = |r: usize, c: usize| plane[r * half + c];
            let row_a = 0.75 * p(ya, xa) + 0.25 * p(ya, xb);
            let row_b = 0.75 * p(yb, xa) + 0.25 * p(yb, xb);
            out[y * side + x] = 0.75 * row_a + 0.25 * row_b;
        }
    }
    out
}

/// A half-resolution field up-sampled by a stride-2 transposed
/// convolution, plus the checkerboard residual. No sensor noise.
///
/// The transposed convolution uses the 4x4 bilinear kernel with the taps
/// of each output phase `(y % 2, x % 2)` scaled by `upsample_kernel`; an
/// all-ones kernel is therefore exact bilinear interpolation, and unequal
/// phase sums leave a brightness-modulated checkerboard.
pub fn synth_fake<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<ImageTensor> {
    cfg.validate()?;
    let side = cfg.side;
    let half = side / 2;
    // Bilinear interpolation adds BILINEAR_VARIANCE (output px^2) of blur,
    // so the half-resolution field gets the remainder of blur_sigma^2.
    let sigma_out = (cfg.blur_sigma.powi(2) - BILINEAR_VARIANCE).max(0.0).sqrt();
    let base = colour_field(rng, half, sigma_out / 2.0, 0.5);
    let k = cfg.upsample_kernel;
    let planes = base.map(|plane| {
        let mut up = upsample_bilinear(&plane, half);
        for y in 0..side {
            for x in 0..side {
                let parity = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
                let v = &mut up[y * side + x];
                *v = k[y % 2][x % 2] * (0.5 + *v) + cfg.artifact_gain * parity;
            }
        }
        up
    });
    Ok(finish(planes, side))
}

/// One generated image with its manifest item.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub item: DatasetItem,
    pub image: ImageTensor,
}

pub const SYNTH_CLASS_TAG: &str = "synthetic";

/// Seed of the `index`-th item of class `label` under `master_seed`.
pub fn item_seed(master_seed: u64, index: usize, label: Label) -> u64 {
    derive_seed(&[master_seed, index as u64, label.as_u8() as u64])
}

/// Regenerates a synthetic item from its own seed.
pub fn synth_item(cfg: &SynthConfig, seed: u64, label: Label) -> Result<ImageTensor> {
    let mut rng = rng_from(&[seed]);
    match label {
        Label::Real => synth_real(cfg, &mut rng),
        Label::Fake => synth_fake(cfg, &mut rng),
    }
}

/// `n_per_class` real images followed by `n_per_class` fakes.
pub fn build_synth_dataset(n_per_class: usize, cfg: &SynthConfig, seed: u64) -> Result<Vec<SynthSample>> {
    if n_per_class == 0 {
        return Err(Error::InvalidConfig("n_per_class must be at least 1".into()));
    }
    cfg.validate()?;
    let mut out = Vec::with_capacity(2 * n_per_class);
    for label in [Label::Real, Label::Fake] {
        for index in 0..n_per_class {
            let s = item_seed(seed, index, label);
            out.push(SynthSample {
                item: DatasetItem {
                    source: ItemSource::Synthetic { seed: s },
                    label,
                    class_tag: SYNTH_CLASS_TAG.to_string(),
                },
                image: synth_item(cfg, s, label)?,
            });
        }
    }
    Ok(out)
}

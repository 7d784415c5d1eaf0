//! Random affine augmentation with reflect fill.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub max_rotation_deg: f64,
    /// Fraction of the image width/height.
    pub max_shift_frac: f64,
    pub max_zoom_frac: f64,
    pub hflip_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            max_rotation_deg: 15.0,
            max_shift_frac: 0.10,
            max_zoom_frac: 0.10,
            hflip_prob: 0.5,
        }
    }
}

impl AugmentConfig {
    /// Configuration that leaves every image untouched.
    pub fn identity() -> Self {
        AugmentConfig {
            max_rotation_deg: 0.0,
            max_shift_frac: 0.0,
            max_zoom_frac: 0.0,
            hflip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mags = [self.max_rotation_deg, self.max_shift_frac, self.max_zoom_frac];
        if mags.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "augmentation magnitudes must be non-negative, got {mags:?}"
            )));
        }
        if self.max_zoom_frac >= 1.0 {
            return Err(Error::InvalidConfig("max_zoom_frac must be below 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hflip_prob) {
            return Err(Error::InvalidConfig(format!(
                "hflip_prob {} outside [0, 1]",
                self.hflip_prob
            )));
        }
        Ok(())
    }
}

/// One concrete draw of augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    /// Shift as a fraction of width (x) and height (y).
    pub shift_x: f64,
    pub shift_y: f64,
    pub zoom: f64,
    pub flip: bool,
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, max: f64) -> f64 {
    if max > 0.0 {
        rng.random_range(-max..=max)
    } else {
        0.0
    }
}

impl AugmentParams {
    pub fn sample<R: Rng + ?Sized>(cfg: &AugmentConfig, rng: &mut R) -> Self {
        let rotation_deg = symmetric(rng, cfg.max_rotation_deg);
        let shift_x = symmetric(rng, cfg.max_shift_frac);
        let shift_y = symmetric(rng, cfg.max_shift_frac);
        let zoom = 1.0 + symmetric(rng, cfg.max_zoom_frac);
        let flip = cfg.hflip_prob > 0.0 && rng.random_bool(cfg.hflip_prob);
        AugmentParams {
            rotation_deg,
            shift_x,
            shift_y,
            zoom,
            flip,
        }
    }

    fn is_identity_warp(&self) -> bool {
        self.rotation_deg == 0.0 && self.shift_x == 0.0 && self.shift_y == 0.0 && self.zoom == 1.0
    }

    /// Applies rotate, zoom and shift as one affine warp (bilinear, reflect
    /// fill), then the optional horizontal flip.
    pub fn apply(&self, img: &ImageTensor) -> ImageTensor {
        let warped = if self.is_identity_warp() {
            img.clone()
        } else {
            self.warp(img)
        };
        if self.flip {
            warped.flip_horizontal()
        } else {
            warped
        }
    }

    fn warp(&self, img: &ImageTensor) -> ImageTensor {
        let (h, w, c) = img.shape();
        let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let tx = self.shift_x * w as f64;
        let ty = self.shift_y * h as f64;
        let inv_zoom = 1.0 / self.zoom;
        let src = img.data();
        let mut data = Vec::with_capacity(h * w * c);
        for y in 0..h {
            for x in 0..w {
                // Inverse map: undo the shift, the zoom, then the rotation.
                let dx = (x as f64 - cx - tx) * inv_zoom;
                let dy = (y as f64 - cy - ty) * inv_zoom;
                let sx = cos * dx + sin * dy + cx;
                let sy = -sin * dx + cos * dy + cy;
                let x0 = sx.floor();
                let y0 = sy.floor();
                let fx = sx - x0;
                let fy = sy - y0;
                let xi = [reflect(x0 as isize, w), reflect(x0 as isize + 1, w)];
                let yi = [reflect(y0 as isize, h), reflect(y0 as isize + 1, h)];
                for ch in 0..c {
                    let p = |yy: usize, xx: usize| src[(yy * w + xx) * c + ch];
                    let top = p(yi[0], xi[0]) * (1.0 - fx) + p(yi[0], xi[1]) * fx;
                    let bottom = p(yi[1], xi[0]) * (1.0 - fx) + p(yi[1], xi[1]) * fx;
                    data.push(top * (1.0 - fy) + bottom * fy);
                }
            }
        }
        ImageTensor::from_clamped(h, w, c, data)
    }
}

/// Half-sample symmetric index (`... b a | a b c d | d c ...`).
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

/// Draws parameters from `cfg` and applies them.
pub fn augment<R: Rng + ?Sized>(img: &ImageTensor, cfg: &AugmentConfig, rng: &mut R) -> ImageTensor {
    AugmentParams::sample(cfg, rng).apply(img)
}

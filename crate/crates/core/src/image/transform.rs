//! Resizing, the sub-band mosaic and the classifier-input entry point.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::ImageTensor;
use crate::error::{Error, Result};
use crate::wavelet::{dwt2d, BoundaryMode, FilterBank, Wavelet};

/// Which representation the classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainKind {
    Spatial,
    Wavelet(Wavelet),
}

impl DomainKind {
    /// Spatial, Haar, db2: the three arms of the comparison.
    pub const ALL: [DomainKind; 3] = [
        DomainKind::Spatial,
        DomainKind::Wavelet(Wavelet::Haar),
        DomainKind::Wavelet(Wavelet::Db2),
    ];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Spatial => "spatial",
            DomainKind::Wavelet(w) => w.name(),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("spatial") {
            Ok(DomainKind::Spatial)
        } else {
            Ok(DomainKind::Wavelet(s.parse()?))
        }
    }
}

impl Serialize for DomainKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DomainKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bilinear resize with half-pixel-centred sampling and edge clamping.
pub fn resize_bilinear(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::ZeroDimension(out_h, out_w));
    }
    let (h, w, c) = img.shape();
    if (h, w) == (out_h, out_w) {
        return Ok(img.clone());
    }
    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|i| {
                let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = src.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect()
    };
    let rows = taps(out_h, h);
    let cols = taps(out_w, w);
    let src = img.data();
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                let p = |y: usize, x: usize| src[(y * w + x) * c + ch];
                let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
                let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
                data.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(ImageTensor::from_clamped(out_h, out_w, c, data))
}

/// Affine map from an approximation coefficient to the display range.
#[inline]
pub fn map_approx(v: f64) -> f64 {
    v / 2.0
}

/// Affine map from a detail coefficient to the display range.
#[inline]
pub fn map_detail(v: f64) -> f64 {
    v / 2.0 + 0.5
}

/// One-level sub-band mosaic `[[LL, LH], [HL, HH]]`, per channel, at the
/// input resolution.
///
/// Bands are mapped with `LL/2` and `d/2 + 0.5` and clamped to `[0, 1]`.
/// Symmetric mode produces slightly more than `H/2` coefficients per band
/// for filters longer than two taps; the leading `H/2 x W/2` block (the
/// block aligned with the Periodization grid) is kept.
pub fn subband_mosaic(img: &ImageTensor, fb: &FilterBank, mode: BoundaryMode) -> Result<ImageTensor> {
    let (h, w, c) = img.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimensions { height: h, width: w });
    }
    let (hh, hw) = (h / 2, w / 2);
    let mut planes = Vec::with_capacity(c);
    for ch in 0..c {
        let quad = dwt2d(img.channel(ch).view(), fb, mode)?;
        let mut plane = Array2::zeros((h, w));
        let crop = s![..hh, ..hw];
        plane
            .slice_mut(s![..hh, ..hw])
            .assign(&quad.ll.slice(crop).mapv(map_approx));
        plane
            .slice_mut(s![..hh, hw..])
            .assign(&quad.lh.slice(crop).mapv(map_detail));
        plane
            .slice_mut(s![hh.., ..hw])
            .assign(&quad.hl.slice(crop).mapv(map_detail));
        plane
            .slice_mut(s![hh.., hw..])
            .assign(&quad.hh.slice(crop).mapv(map_detail));
        planes.push(plane);
    }
    ImageTensor::from_planes(&planes)
}

/// Produces the `side x side x 3` classifier input for `domain`.
pub fn prepare(img: &ImageTensor, domain: DomainKind, side: usize) -> Result<ImageTensor> {
    if side == 0 || !side.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("input side {side} must be even and positive")));
    }
    let resized = resize_bilinear(&img.to_rgb(), side, side)?;
    match domain {
        DomainKind::Spatial => Ok(resized),
        DomainKind::Wavelet(wavelet) => {
            subband_mosaic(&resized, &wavelet.filter_bank(), BoundaryMode::Symmetric)
        }
    }
}

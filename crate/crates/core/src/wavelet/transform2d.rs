//! Separable 2D transforms and the multi-level pyramid.

use ndarray::{Array2, ArrayView2, Axis};

use super::filter::FilterBank;
use super::transform1d::{analyze_into, synthesize_into, BoundaryMode};
use crate::error::{Error, Result};

/// One-level 2D decomposition.
///
/// Rows are filtered first. `lh` is the low-pass-rows/high-pass-columns
/// band (horizontal edges), `hl` the high-pass-rows/low-pass-columns band
/// (vertical edges) and `hh` the diagonal band.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandQuad {
    pub ll: Array2<f64>,
    pub lh: Array2<f64>,
    pub hl: Array2<f64>,
    pub hh: Array2<f64>,
    /// `(rows, cols)` of the plane that was decomposed.
    pub source_shape: (usize, usize),
}

impl SubbandQuad {
    pub fn band_shape(&self) -> (usize, usize) {
        self.ll.dim()
    }

    pub fn zeros(band: (usize, usize), source_shape: (usize, usize)) -> Self {
        SubbandQuad {
            ll: Array2::zeros(band),
            lh: Array2::zeros(band),
            hl: Array2::zeros(band),
            hh: Array2::zeros(band),
            source_shape,
        }
    }

    /// Sum of squares over all four bands.
    pub fn energy(&self) -> f64 {
        [&self.ll, &self.lh, &self.hl, &self.hh]
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

fn check_plane(rows: usize, cols: usize, fb: &FilterBank, mode: BoundaryMode) -> Result<()> {
    let min = mode.min_len(fb.len());
    if rows < min || cols < min {
        return Err(Error::DegenerateShape {
            rows,
            cols,
            reason: "both dimensions must reach the filter's minimum length",
        });
    }
    Ok(())
}

/// Applies the 1D analysis to every lane along `axis`.
fn analyze_axis(
    plane: ArrayView2<f64>,
    axis: Axis,
    fb: &FilterBank,
    mode: BoundaryMode,
) -> (Array2<f64>, Array2<f64>) {
    let len = plane.len_of(axis);
    let band = mode.band_len(len, fb.len());
    let mut shape = plane.raw_dim();
    shape[axis.index()] = band;
    let mut lo = Array2::zeros(shape);
    let mut hi = Array2::zeros(shape);
    let mut input = vec![0.0; len];
    let mut a = vec![0.0; band];
    let mut d = vec![0.0; band];
    for ((lane, mut lo_lane), mut hi_lane) in plane
        .lanes(axis)
        .into_iter()
        .zip(lo.lanes_mut(axis))
        .zip(hi.lanes_mut(axis))
    {
        for (dst, src) in input.iter_mut().zip(lane.iter()) {
            *dst = *src;
        }
        analyze_into(&input, fb, mode, &mut a, &mut d);
        for (dst, src) in lo_lane.iter_mut().zip(&a) {
            *dst = *src;
        }
        for (dst, src) in hi_lane.iter_mut().zip(&d) {
            *dst = *src;
        }
    }
    (lo, hi)
}

fn synthesize_axis(
    lo: ArrayView2<f64>,
    hi: ArrayView2<f64>,
    axis: Axis,
    out_len: usize,
    fb: &FilterBank,
    mode: BoundaryMode,
) -> Array2<f64> {
    let band = lo.len_of(axis);
    let mut shape = lo.raw_dim();
    shape[axis.index()] = out_len;
    let mut out = Array2::zeros(shape);
    let mut a = vec![0.0; band];
    let mut d = vec![0.0; band];
    let mut buf = vec![0.0; out_len];
    for ((lo_lane, hi_lane), mut out_lane) in lo
        .lanes(axis)
        .into_iter()
        .zip(hi.lanes(axis))
        .zip(out.lanes_mut(axis))
    {
        for (dst, src) in a.iter_mut().zip(lo_lane.iter()) {
            *dst = *src;
        }
        for (dst, src) in d.iter_mut().zip(hi_lane.iter()) {
            *dst = *src;
        }
        synthesize_into(&a, &d, fb, mode, &mut buf);
        for (dst, src) in out_lane.iter_mut().zip(&buf) {
            *dst = *src;
        }
    }
    out
}

/// One-level separable 2D DWT.
pub fn dwt2d(plane: ArrayView2<f64>, fb: &FilterBank, mode: BoundaryMode) -> Result<SubbandQuad> {
    let (rows, cols) = plane.dim();
    check_plane(rows, cols, fb, mode)?;
    // Filtering each row runs along the column index (Axis(1)).
    let (l, h) = analyze_axis(plane, Axis(1), fb, mode);
    let (ll, lh) = analyze_axis(l.view(), Axis(0), fb, mode);
    let (hl, hh) = analyze_axis(h.view(), Axis(0), fb, mode);
    Ok(SubbandQuad {
        ll,
        lh,
        hl,
        hh,
        source_shape: (rows, cols),
    })
}

/// Inverse of [`dwt2d`]; reconstructs a plane of `quad.source_shape`.
pub fn idwt2d(quad: &SubbandQuad, fb: &FilterBank, mode: BoundaryMode) -> Result<Array2<f64>> {
    let shape = quad.ll.dim();
    for (name, band) in [("lh", &quad.lh), ("hl", &quad.hl), ("hh", &quad.hh)] {
        if band.dim() != shape {
            return Err(Error::ShapeMismatch(format!(
                "band {name} is {:?}, ll is {:?}",
                band.dim(),
                shape
            )));
        }
    }
    let (rows, cols) = quad.source_shape;
    let expected = (
        mode.band_len(rows, fb.len()),
        mode.band_len(cols, fb.len()),
    );
    if expected != shape {
        return Err(Error::ShapeMismatch(format!(
            "bands are {shape:?} but a {rows}x{cols} source needs {expected:?}"
        )));
    }
    let l = synthesize_axis(quad.ll.view(), quad.lh.view(), Axis(0), rows, fb, mode);
    let h = synthesize_axis(quad.hl.view(), quad.hh.view(), Axis(0), rows, fb, mode);
    Ok(synthesize_axis(l.view(), h.view(), Axis(1), cols, fb, mode))
}

/// Detail bands of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailLevel {
    pub lh: Array2<f64>,
    pub hl: Array2<f64>,
    pub hh: Array2<f64>,
    /// Shape of the approximation plane this level decomposed.
    pub source_shape: (usize, usize),
}

/// Multi-level decomposition, finest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub levels: Vec<DetailLevel>,
    pub ll_final: Array2<f64>,
}

/// Largest level count whose coarsest approximation is still at least 2x2
/// and whose every input satisfies the mode's length precondition.
pub fn max_levels(rows: usize, cols: usize, fb: &FilterBank, mode: BoundaryMode) -> usize {
    let min = mode.min_len(fb.len());
    let (mut r, mut c) = (rows, cols);
    let mut levels = 0;
    while r >= min && c >= min {
        let (nr, nc) = (mode.band_len(r, fb.len()), mode.band_len(c, fb.len()));
        if nr < 2 || nc < 2 {
            break;
        }
        levels += 1;
        // Symmetric extension can stop shrinking tiny planes.
        if (nr, nc) == (r, c) {
            break;
        }
        r = nr;
        c = nc;
    }
    levels
}

/// Multi-level 2D DWT: each level decomposes the previous level's LL.
pub fn wavedec2(
    plane: ArrayView2<f64>,
    fb: &FilterBank,
    levels: usize,
    mode: BoundaryMode,
) -> Result<WaveletPyramid> {
    let (rows, cols) = plane.dim();
    let max = max_levels(rows, cols, fb, mode);
    if levels == 0 || levels > max {
        return Err(Error::TooManyLevels {
            requested: levels,
            max,
        });
    }
    let mut out = Vec::with_capacity(levels);
    let mut current = plane.to_owned();
    for _ in 0..levels {
        let quad = dwt2d(current.view(), fb, mode)?;
        out.push(DetailLevel {
            lh: quad.lh,
            hl: quad.hl,
            hh: quad.hh,
            source_shape: quad.source_shape,
        });
        current = quad.ll;
    }
    Ok(WaveletPyramid {
        levels: out,
        ll_final: current,
    })
}

/// Inverse of [`wavedec2`].
pub fn waverec2(pyramid: &WaveletPyramid, fb: &FilterBank, mode: BoundaryMode) -> Result<Array2<f64>> {
    let mut current = pyramid.ll_final.clone();
    for level in pyramid.levels.iter().rev() {
        let quad = SubbandQuad {
            ll: current,
            lh: level.lh.clone(),
            hl: level.hl.clone(),
            hh: level.hh.clone(),
            source_shape: level.source_shape,
        };
        current = idwt2d(&quad, fb, mode)?;
    }
    Ok(current)
}

//! Single-level 1D analysis and synthesis.
//!
//! Coefficient `i` of either band is the correlation
//! `sum_k f[k] * x[2i + k - (L - 2)]`, where `L` is the filter length and
//! out-of-range samples come from the boundary extension. Both modes share
//! this alignment, so interior coefficients agree between them.

use serde::{Deserialize, Serialize};

use super::filter::FilterBank;
use crate::error::{Error, Result};

/// Boundary handling for the finite-length transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Circular extension. Non-expansive: `ceil(N/2)` coefficients per band.
    /// Odd-length input is first padded by repeating its last sample.
    #[default]
    Periodization,
    /// Whole-sample mirror extension (`x[-1] = x[1]`), `floor((N+L-1)/2)`
    /// coefficients per band.
    Symmetric,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodization" | "per" => Ok(BoundaryMode::Periodization),
            "symmetric" | "sym" | "reflect" => Ok(BoundaryMode::Symmetric),
            _ => Err(Error::InvalidConfig(format!("unknown boundary mode `{s}`"))),
        }
    }
}

impl BoundaryMode {
    /// Number of coefficients per band for an input of `len` samples.
    pub fn band_len(self, len: usize, filter_len: usize) -> usize {
        match self {
            BoundaryMode::Periodization => len.div_ceil(2),
            BoundaryMode::Symmetric => (len + filter_len - 1) / 2,
        }
    }

    /// Smallest input length the forward transform accepts.
    pub fn min_len(self, filter_len: usize) -> usize {
        match self {
            BoundaryMode::Periodization => 2,
            BoundaryMode::Symmetric => filter_len.max(2),
        }
    }

    /// Signal length recovered by the inverse from `band_len` coefficients
    /// when the original length is not known.
    pub fn natural_len(self, band_len: usize, filter_len: usize) -> usize {
        match self {
            BoundaryMode::Periodization => 2 * band_len,
            BoundaryMode::Symmetric => (2 * band_len + 2).saturating_sub(filter_len),
        }
    }
}

/// Whole-sample symmetric index into a signal of `len` samples.
#[inline]
fn mirror(j: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = j.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Forward transform of `x` into preallocated `approx` and `detail`.
///
/// `x` must already satisfy the mode's length precondition; in
/// Periodization mode an odd-length `x` is treated as if padded with a copy
/// of its last sample.
pub(crate) fn analyze_into(
    x: &[f64],
    fb: &FilterBank,
    mode: BoundaryMode,
    approx: &mut [f64],
    detail: &mut [f64],
) {
    let l = fb.len();
    let n = x.len();
    let shift = l as isize - 2;
    let out_len = approx.len();
    debug_assert_eq!(out_len, mode.band_len(n, l));
    debug_assert_eq!(detail.len(), out_len);

    match mode {
        BoundaryMode::Periodization => {
            let padded = n + n % 2;
            for i in 0..out_len {
                let mut a = 0.0;
                let mut d = 0.0;
                for k in 0..l {
                    let p = (2 * i as isize + k as isize - shift).rem_euclid(padded as isize) as usize;
                    let v = x[p.min(n - 1)];
                    a += fb.dec_lo[k] * v;
                    d += fb.dec_hi[k] * v;
                }
                approx[i] = a;
                detail[i] = d;
            }
        }
        BoundaryMode::Symmetric => {
            for i in 0..out_len {
                let base = 2 * i as isize - shift;
                let mut a = 0.0;
                let mut d = 0.0;
                for k in 0..l {
                    let j = base + k as isize;
                    let v = if j >= 0 && (j as usize) < n {
                        x[j as usize]
                    } else {
                        x[mirror(j, n)]
                    };
                    a += fb.dec_lo[k] * v;
                    d += fb.dec_hi[k] * v;
                }
                approx[i] = a;
                detail[i] = d;
            }
        }
    }
}

/// Inverse transform into `out`, whose length is the length of the signal
/// being reconstructed.
pub(crate) fn synthesize_into(
    approx: &[f64],
    detail: &[f64],
    fb: &FilterBank,
    mode: BoundaryMode,
    out: &mut [f64],
) {
    let l = fb.len();
    let shift = l as isize - 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    match mode {
        BoundaryMode::Periodization => {
            // The periodized bank is orthogonal, so the inverse is the
            // transpose: scatter every coefficient back along its support.
            let padded = 2 * approx.len();
            let mut full = vec![0.0; padded];
            for i in 0..approx.len() {
                for k in 0..l {
                    let p = (2 * i as isize + k as isize - shift).rem_euclid(padded as isize) as usize;
                    full[p] += fb.rec_lo[l - 1 - k] * approx[i] + fb.rec_hi[l - 1 - k] * detail[i];
                }
            }
            let n = out.len();
            out.copy_from_slice(&full[..n]);
        }
        BoundaryMode::Symmetric => {
            let n = out.len() as isize;
            for i in 0..approx.len() {
                for k in 0..l {
                    let p = 2 * i as isize + k as isize - shift;
                    if p >= 0 && p < n {
                        out[p as usize] +=
                            fb.rec_lo[l - 1 - k] * approx[i] + fb.rec_hi[l - 1 - k] * detail[i];
                    }
                }
            }
        }
    }
}

/// Single-level forward DWT, returning `(approx, detail)`.
pub fn dwt1d(signal: &[f64], fb: &FilterBank, mode: BoundaryMode) -> Result<(Vec<f64>, Vec<f64>)> {
    let min = mode.min_len(fb.len());
    if signal.len() < min {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            min,
        });
    }
    let n = mode.band_len(signal.len(), fb.len());
    let mut approx = vec![0.0; n];
    let mut detail = vec![0.0; n];
    analyze_into(signal, fb, mode, &mut approx, &mut detail);
    Ok((approx, detail))
}

/// Single-level inverse DWT. The output has the band's natural length
/// (`2n` for Periodization, `2n - L + 2` for Symmetric); use
/// [`idwt1d_with_len`] to recover an odd original length.
pub fn idwt1d(
    approx: &[f64],
    detail: &[f64],
    fb: &FilterBank,
    mode: BoundaryMode,
) -> Result<Vec<f64>> {
    let len = mode.natural_len(approx.len(), fb.len());
    idwt1d_with_len(approx, detail, fb, mode, len)
}

/// Inverse DWT producing exactly `len` samples.
pub fn idwt1d_with_len(
    approx: &[f64],
    detail: &[f64],
    fb: &FilterBank,
    mode: BoundaryMode,
    len: usize,
) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::LengthMismatch {
            what: "approximation and detail bands",
            left: approx.len(),
            right: detail.len(),
        });
    }
    if mode.band_len(len, fb.len()) != approx.len() {
        return Err(Error::LengthMismatch {
            what: "band length for the requested output length",
            left: approx.len(),
            right: mode.band_len(len, fb.len()),
        });
    }
    let mut out = vec![0.0; len];
    synthesize_into(approx, detail, fb, mode, &mut out);
    Ok(out)
}

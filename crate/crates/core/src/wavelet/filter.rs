//! Orthonormal filter banks for the Haar and Daubechies-2 wavelets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    Db2,
}

impl Wavelet {
    pub const ALL: [Wavelet; 2] = [Wavelet::Haar, Wavelet::Db2];

    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Db2 => "db2",
        }
    }

    pub fn filter_bank(self) -> FilterBank {
        match self {
            Wavelet::Haar => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                FilterBank::from_scaling(self, vec![h, h], 1)
            }
            Wavelet::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                FilterBank::from_scaling(
                    self,
                    vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d],
                    2,
                )
            }
        }
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Wavelet::Haar),
            "db2" => Ok(Wavelet::Db2),
            _ => Err(Error::UnknownWavelet(s.to_string())),
        }
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Analysis and synthesis filters of one orthonormal wavelet.
///
/// The high-pass is the quadrature mirror of the low-pass,
/// `dec_hi[k] = (-1)^k * dec_lo[L-1-k]`, and the synthesis filters are the
/// time-reversed analysis filters. With this convention the Haar detail
/// coefficient of a pair `(a, b)` is `(a - b) / sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub wavelet: Wavelet,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
    pub vanishing_moments: usize,
}

impl FilterBank {
    fn from_scaling(wavelet: Wavelet, dec_lo: Vec<f64>, vanishing_moments: usize) -> Self {
        let len = dec_lo.len();
        let dec_hi: Vec<f64> = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * dec_lo[len - 1 - k]
            })
            .collect();
        let rec_lo = dec_lo.iter().rev().copied().collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        FilterBank {
            wavelet,
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
            vanishing_moments,
        }
    }

    pub fn name(&self) -> &'static str {
        self.wavelet.name()
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }
}

/// Looks up a filter bank by name, case-insensitively.
pub fn filter_bank(name: &str) -> Result<FilterBank> {
    Ok(name.parse::<Wavelet>()?.filter_bank())
}

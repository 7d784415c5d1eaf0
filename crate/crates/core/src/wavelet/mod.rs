//! Discrete wavelet transforms for the Haar and Daubechies-2 banks.

mod filter;
mod transform1d;
mod transform2d;

pub use filter::{filter_bank, FilterBank, Wavelet};
pub use transform1d::{dwt1d, idwt1d, idwt1d_with_len, BoundaryMode};
pub use transform2d::{
    dwt2d, idwt2d, max_levels, wavedec2, waverec2, DetailLevel, SubbandQuad, WaveletPyramid,
};

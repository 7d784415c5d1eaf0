use ndarray::Array2;

use crate::error::{Error, Result};

/// Row-major, channel-last image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if height * width * channels != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width}x{channels} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ShapeMismatch(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(ImageTensor {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image from values that are clamped into `[0, 1]`.
    pub(crate) fn from_clamped(height: usize, width: usize, channels: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(height * width * channels, data.len());
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        ImageTensor {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Copies one channel out as a plane.
    pub fn channel(&self, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((self.height, self.width), |(y, x)| self.get(y, x, c))
    }

    /// Interleaves planes back into an image, clamping into `[0, 1]`.
    pub fn from_planes(planes: &[Array2<f64>]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no planes".into()))?;
        let (h, w) = first.dim();
        if planes.iter().any(|p| p.dim() != (h, w)) {
            return Err(Error::ShapeMismatch("planes differ in shape".into()));
        }
        let c = planes.len();
        if c != 1 && c != 3 {
            return Err(Error::ShapeMismatch(format!("{c} planes")));
        }
        let mut data = vec![0.0; h * w * c];
        for (ci, plane) in planes.iter().enumerate() {
            for ((y, x), v) in plane.indexed_iter() {
                data[(y * w + x) * c + ci] = *v;
            }
        }
        Ok(Self::from_clamped(h, w, c, data))
    }

    /// Expands a single-channel image to three identical channels.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageTensor {
            height: self.height,
            width: self.width,
            channels: 3,
            data,
        }
    }

    /// Horizontal mirror.
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        let c = self.channels;
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                let base = (y * self.width + x) * c;
                data.extend_from_slice(&self.data[base..base + c]);
            }
        }
        ImageTensor { data, ..*self }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.data.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// 8-bit quantization, `round(v * 255)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(ImageTensor::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(ImageTensor::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![1.5]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn planes_round_trip() {
        let data: Vec<f64> = (0..24).map(|i| i as f64 / 24.0).collect();
        let img = ImageTensor::new(2, 4, 3, data).unwrap();
        let planes: Vec<_> = (0..3).map(|c| img.channel(c)).collect();
        assert_eq!(ImageTensor::from_planes(&planes).unwrap(), img);
    }

    #[test]
    fn flip_twice_is_identity() {
        let data: Vec<f64> = (0..18).map(|i| i as f64 / 18.0).collect();
        let img = ImageTensor::new(2, 3, 3, data).unwrap();
        let f = img.flip_horizontal();
        assert_eq!(f.get(0, 0, 1), img.get(0, 2, 1));
        assert_eq!(f.flip_horizontal(), img);
    }
}

//! PNG/JPEG decoding and PNG encoding.

use std::path::Path;

use image::{DynamicImage, ImageFormat, RgbImage};

use super::ImageTensor;
use crate::error::{Error, Result};

/// Decodes PNG or JPEG bytes into an RGB tensor (grayscale is replicated
/// across the three channels, 8-bit samples map to `v / 255`).
pub fn decode_image(bytes: &[u8]) -> Result<ImageTensor> {
    let format = image::guess_format(bytes)
        .map_err(|_| Error::Decode("unrecognized format (expected PNG or JPEG)".into()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::Decode(format!(
            "unsupported format {format:?} (expected PNG or JPEG)"
        )));
    }
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Decode(format!("{format:?}: {e}")))?;
    Ok(from_dynamic(&img))
}

fn from_dynamic(img: &DynamicImage) -> ImageTensor {
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    ImageTensor::from_clamped(h as usize, w as usize, 3, data)
}

pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Encodes an image as 8-bit RGB PNG.
pub fn encode_png(img: &ImageTensor) -> Result<Vec<u8>> {
    let rgb = img.to_rgb();
    let buf = RgbImage::from_raw(rgb.width() as u32, rgb.height() as u32, rgb.to_u8())
        .ok_or_else(|| Error::ShapeMismatch("buffer does not match dimensions".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Decode(format!("png encode: {e}")))?;
    Ok(out.into_inner())
}

pub fn save_png(img: &ImageTensor, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

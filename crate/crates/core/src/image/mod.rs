//! Image tensors and their conversion into classifier inputs.

mod codec;
mod tensor;
mod transform;

pub use codec::{decode_image, encode_png, load_image, save_png};
pub use tensor::ImageTensor;
pub use transform::{
    map_approx, map_detail, prepare, resize_bilinear, subband_mosaic, DomainKind,
};

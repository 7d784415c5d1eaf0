//! Weight file: `"WGFD"`, version byte, `u32` LE length + JSON metadata,
//! `f32` LE parameters in table order, then a CRC-32 of all prior bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelConfig, TensorSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WGFD";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    architecture: ModelConfig,
    tensors: Vec<TensorSpec>,
    training_seed: Option<u64>,
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let meta = Metadata {
        architecture: model.config().clone(),
        tensors: model.tensors().to_vec(),
        training_seed: model.training_seed,
    };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");
    let mut out = Vec::with_capacity(9 + json.len() + 4 * model.param_count() + 4);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::VersionMismatch("not a weight file (bad magic)".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::VersionMismatch(format!(
            "weight format version {} is not supported (expected {FORMAT_VERSION})",
            bytes[4]
        )));
    }
    if bytes.len() < 13 {
        return Err(Error::Corrupted("weight file truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Corrupted("checksum mismatch".into()));
    }
    let meta_len = u32::from_le_bytes(body[5..9].try_into().unwrap()) as usize;
    let meta_end = 9usize
        .checked_add(meta_len)
        .filter(|&e| e <= body.len())
        .ok_or_else(|| Error::Corrupted("metadata length exceeds file".into()))?;
    let meta: Metadata = serde_json::from_slice(&body[9..meta_end])
        .map_err(|e| Error::Corrupted(format!("metadata: {e}")))?;
    let data = &body[meta_end..];
    if data.len() % 4 != 0 {
        return Err(Error::Corrupted("parameter block is not a whole number of floats".into()));
    }
    let params: Vec<f32> = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut model = Model::from_parts(meta.architecture, params)?;
    let table_matches = meta.tensors.len() == model.tensors().len()
        && meta
            .tensors
            .iter()
            .zip(model.tensors())
            .all(|(a, b)| a.name == b.name && a.shape == b.shape);
    if !table_matches {
        return Err(Error::ShapeMismatch(
            "tensor table disagrees with the stored architecture".into(),
        ));
    }
    model.training_seed = meta.training_seed;
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

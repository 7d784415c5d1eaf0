//! Architecture description, parameter layout and initialization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Shape of the compact CNN. One configuration is shared by every domain
/// in a comparison so that only the input representation differs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_side: usize,
    pub channels_per_block: Vec<usize>,
    pub kernel_size: usize,
    /// Width of an optional ReLU layer between pooling and the output unit;
    /// 0 connects the pooled features straight to the output.
    pub dense_hidden: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_side: 64,
            channels_per_block: vec![8, 16, 32],
            kernel_size: 3,
            dense_hidden: 0,
            seed: 0,
        }
    }
}

pub const INPUT_CHANNELS: usize = 3;

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels_per_block.is_empty() || self.channels_per_block.contains(&0) {
            return Err(Error::InvalidConfig(
                "channels_per_block needs at least one non-zero entry".into(),
            ));
        }
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "kernel_size {} must be odd",
                self.kernel_size
            )));
        }
        let blocks = self.channels_per_block.len() as u32;
        let factor = 1usize
            .checked_shl(blocks)
            .ok_or_else(|| Error::InvalidConfig("too many blocks".into()))?;
        if self.input_side == 0 || !self.input_side.is_multiple_of(factor) {
            return Err(Error::InvalidConfig(format!(
                "input_side {} is not divisible by 2^{blocks} = {factor}",
                self.input_side
            )));
        }
        Ok(())
    }

    pub fn last_channels(&self) -> usize {
        *self.channels_per_block.last().expect("validated non-empty")
    }
}

/// Name, shape and position of one parameter tensor inside the flat buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Parameter tensors in storage order: per block `convN.weight`
/// `[out, in, k, k]` and `convN.bias`, then the optional `hidden.*` pair,
/// then `head.weight` `[1, features]` and `head.bias`.
pub fn layout(cfg: &ModelConfig) -> Vec<TensorSpec> {
    let mut specs = Vec::new();
    let mut push = |name: String, shape: Vec<usize>| {
        let offset = specs.last().map_or(0, |s: &TensorSpec| s.offset + s.len());
        specs.push(TensorSpec { name, shape, offset });
    };
    let k = cfg.kernel_size;
    let mut in_ch = INPUT_CHANNELS;
    for (i, &out) in cfg.channels_per_block.iter().enumerate() {
        push(format!("conv{i}.weight"), vec![out, in_ch, k, k]);
        push(format!("conv{i}.bias"), vec![out]);
        in_ch = out;
    }
    if cfg.dense_hidden > 0 {
        push("hidden.weight".into(), vec![cfg.dense_hidden, in_ch]);
        push("hidden.bias".into(), vec![cfg.dense_hidden]);
        in_ch = cfg.dense_hidden;
    }
    push("head.weight".into(), vec![1, in_ch]);
    push("head.bias".into(), vec![1]);
    specs
}

/// A trained or freshly initialized classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    tensors: Vec<TensorSpec>,
    params: Vec<f32>,
    /// Seed of the training run that produced these weights, if any.
    pub training_seed: Option<u64>,
}

impl Model {
    /// Assembles a model from raw parameters, checking them against the
    /// layout implied by `config`.
    pub fn from_parts(config: ModelConfig, params: Vec<f32>) -> Result<Self> {
        config.validate()?;
        let tensors = layout(&config);
        let expected: usize = tensors.iter().map(TensorSpec::len).sum();
        if params.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters supplied, architecture needs {expected}",
                params.len()
            )));
        }
        Ok(Model {
            config,
            tensors,
            params,
            training_seed: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params_f64(&self) -> Vec<f64> {
        self.params.iter().map(|&p| f64::from(p)).collect()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f32]> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| &self.params[t.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f32]> {
        let range = self.tensors.iter().find(|t| t.name == name)?.range();
        Some(&mut self.params[range])
    }
}

/// Builds a model with fan-in scaled uniform weights and zero biases.
///
/// Convolution and hidden weights use `U(-sqrt(6/fan_in), sqrt(6/fan_in))`
/// (ReLU follows them); the output unit uses `sqrt(3/fan_in)`.
pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    cfg.validate()?;
    let tensors = layout(cfg);
    let total: usize = tensors.iter().map(TensorSpec::len).sum();
    let mut params = vec![0f32; total];
    let mut rng = rng_from(&[cfg.seed]);
    for spec in &tensors {
        if !spec.name.ends_with(".weight") {
            continue;
        }
        let fan_in: usize = spec.shape[1..].iter().product();
        let gain = if spec.name.starts_with("head") { 3.0 } else { 6.0 };
        let limit = (gain / fan_in as f64).sqrt();
        for p in &mut params[spec.range()] {
            *p = rng.random_range(-limit..limit) as f32;
        }
    }
    Model::from_parts(cfg.clone(), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_of_default_architecture() {
        let m = build_model(&ModelConfig::default()).unwrap();
        let by_hand = (3 * 3 * 3 * 8 + 8) + (3 * 3 * 8 * 16 + 16) + (3 * 3 * 16 * 32 + 32) + (32 + 1);
        assert_eq!(by_hand, 6065);
        assert_eq!(m.param_count(), 6065);
        let counted: usize = m.tensors().iter().map(|t| t.len()).sum();
        assert_eq!(counted, 6065);
    }

    #[test]
    fn same_seed_same_weights() {
        let cfg = ModelConfig { seed: 9, ..Default::default() };
        let a = build_model(&cfg).unwrap();
        let b = build_model(&cfg).unwrap();
        assert_eq!(a.params(), b.params());
        let c = build_model(&ModelConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn biases_start_at_zero() {
        let m = build_model(&ModelConfig::default()).unwrap();
        for t in m.tensors().iter().filter(|t| t.name.ends_with(".bias")) {
            assert!(m.tensor(&t.name).unwrap().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn indivisible_side_rejected() {
        let cfg = ModelConfig { input_side: 60, ..Default::default() };
        assert!(matches!(build_model(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hidden_layer_adds_tensors() {
        let cfg = ModelConfig { dense_hidden: 4, ..Default::default() };
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.param_count(), 6065 - 33 + (32 * 4 + 4) + (4 + 1));
        assert!(m.tensor("hidden.weight").is_some());
    }
}

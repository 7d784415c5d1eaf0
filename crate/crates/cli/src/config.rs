use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefp_core::data::{SplitSpec, SynthConfig};
use wavefp_core::image::DomainKind;
use wavefp_core::nn::{ModelConfig, TrainConfig};

use crate::CliError;

/// Everything one invocation needs. Loaded from TOML; absent keys take
/// their defaults and command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Classifier input side; also forced onto `model.input_side`.
    pub side: usize,
    pub domain: DomainKind,
    /// Seed of the synthetic dataset.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Dataset manifest; when absent, a synthetic dataset of
    /// `n_per_class` images per label is generated from `synth` and `seed`.
    pub manifest: Option<PathBuf>,
    pub n_per_class: usize,
    pub synth: SynthConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            side: 64,
            domain: DomainKind::Spatial,
            seed: 0,
            output_dir: PathBuf::from("wavefp-out"),
            manifest: None,
            n_per_class: 500,
            synth: SynthConfig::default(),
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets the dataset, split, training and initialization seeds at once.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
        self.model.seed = seed;
    }

    /// Aligns derived fields and checks the whole configuration.
    pub fn finalize(&mut self) -> Result<(), CliError> {
        if self.side == 0 || !self.side.is_multiple_of(2) {
            return Err(CliError::Usage(format!("side {} must be even and positive", self.side)));
        }
        self.model.input_side = self.side;
        self.model.validate()?;
        self.train.validate()?;
        self.split.validate()?;
        self.synth.validate()?;
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                return Err(CliError::Usage(format!("manifest {} does not exist", m.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let mut odd = RunConfig {
            manifest: Some("m.jsonl".into()),
            domain: "db2".parse().unwrap(),
            ..Default::default()
        };
        odd.train.augment = false;
        assert_eq!(RunConfig::parse(&odd.to_toml()).unwrap(), odd);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::parse("side = 32\n[train]\nmax_epochs = 3\n").unwrap();
        assert_eq!(cfg.side, 32);
        assert_eq!(cfg.train.max_epochs, 3);
        assert_eq!(cfg.train.batch_size, 32);
        assert!(RunConfig::parse("sid = 32\n").is_err());
    }

    #[test]
    fn seed_flag_reaches_every_stream() {
        let mut cfg = RunConfig::default();
        cfg.set_seed(9);
        assert_eq!((cfg.seed, cfg.split.seed, cfg.train.seed, cfg.model.seed), (9, 9, 9, 9));
    }
}

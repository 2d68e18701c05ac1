//! Run configuration: one TOML (or JSON) file covering every stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scma_ntn::channel::{ChannelMode, EbN0Reference, Geometry, PassModel};
use scma_ntn::detect::LogMpaVariant;
use scma_ntn::harness::SweepConfig;
use scma_ntn::neural::{Profile, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Where datasets, weights, results and manifests go.
    pub output_dir: PathBuf,
    /// 5G numerology; only 0 (1 ms slots) is supported.
    pub numerology: u32,
    pub geometry: Geometry,
    pub pass: PassModel,
    pub channel: ChannelSection,
    /// Codebook JSON; the shipped codebook when unset.
    pub codebook: Option<PathBuf>,
    /// Replacement mother-code alist files.
    pub code_high: Option<PathBuf>,
    pub code_low: Option<PathBuf>,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub ebn0_reference: EbN0Reference,
    pub log_mpa_variant: LogMpaVariant,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("runs"),
            numerology: 0,
            geometry: Geometry::default(),
            pass: PassModel::default(),
            channel: ChannelSection::default(),
            codebook: None,
            code_high: None,
            code_low: None,
            model: ModelSection::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
            ebn0_reference: EbN0Reference::default(),
            log_mpa_variant: LogMpaVariant::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub mode: ChannelMode,
    pub users: usize,
    /// Symbol times per dataset.
    pub symbols: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub train_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            mode: ChannelMode::Normalized,
            users: 6,
            symbols: 20_000,
            train_seed: 101,
            test_seed: 202,
            train_file: None,
            test_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub profile: Profile,
    /// Initialization seed.
    pub seed: u64,
    pub weights: Option<PathBuf>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            profile: Profile::Full,
            seed: 7,
            weights: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; `.json` files are parsed as JSON, anything else
    /// as TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.numerology != 0 {
            return Err(CliError::Config(format!(
                "numerology {} is not supported; transport blocks assume 1 ms slots",
                self.numerology
            )));
        }
        if self.channel.train_seed == self.channel.test_seed {
            return Err(CliError::Config("train and test channel seeds must differ".into()));
        }
        self.geometry.validate()?;
        self.train.validate()?;
        self.sweep.validate()?;
        Ok(())
    }

    pub fn train_file(&self) -> PathBuf {
        self.channel.train_file.clone().unwrap_or_else(|| self.output_dir.join("channel_train.csv"))
    }

    pub fn test_file(&self) -> PathBuf {
        self.channel.test_file.clone().unwrap_or_else(|| self.output_dir.join("channel_test.csv"))
    }

    pub fn weights_file(&self) -> PathBuf {
        self.model.weights.clone().unwrap_or_else(|| self.output_dir.join("weights.bin"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.geometry.altitude_m, 600e3);
        assert_eq!(c.geometry.carrier_hz, 2e9);
        assert_eq!(c.sweep.detector_iterations, 10);
        assert_eq!(c.sweep.trials, 10_000);
        assert_eq!(c.sweep.ebn0_grid_db.first(), Some(&-15.0));
        assert_eq!(c.sweep.ebn0_grid_db.last(), Some(&10.0));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("altitude = 5").is_err());
        assert!(toml::from_str::<RunConfig>("[sweep]\ntrails = 5").is_err());
        assert!(toml::from_str::<RunConfig>("[geometry]\naltitude_m = 550e3").is_ok());
    }

    #[test]
    fn toml_and_json_agree() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn guide_example_parses() {
        let guide = include_str!("../../../book/src/cli.md");
        let start = guide.find("```toml\n").unwrap() + "```toml\n".len();
        let end = start + guide[start..].find("```").unwrap();
        let c: RunConfig = toml::from_str(&guide[start..end]).unwrap();
        c.validate().unwrap();
        assert_eq!(c.model.profile, Profile::Small);
        assert_eq!(c.train.minibatch_size, 64);
    }
}

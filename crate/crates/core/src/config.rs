//! Run configuration shared by the CLI subcommands, stored as TOML.
//!
//! ```toml
//! seed = 7
//!
//! [fusion]
//! g = 0.053
//! disparity = "block"
//!
//! [model]
//! part_a_fraction = 0.75
//! [model.train]
//! max_epochs = 500
//!
//! [experiment]
//! repeats = 1000
//! split = "by-scene"
//!
//! [corpus]
//! scenes = 4
//! ```
//!
//! Every table and key is optional; missing entries take the defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{ExperimentConfig, SplitMode};
use crate::fusion::FusionParams;
use crate::model::{StackedConfig, TrainConfig};
use crate::nss::MIN_FEATURE_SIDE;

/// Stacked-model settings; the seed comes from [`RunConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub train: TrainConfig,
    pub part_a_fraction: f64,
    pub level0_valid_fraction: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let s = StackedConfig::default();
        ModelSettings {
            train: s.train,
            part_a_fraction: s.part_a_fraction,
            level0_valid_fraction: s.level0_valid_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub repeats: usize,
    pub split: SplitMode,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            repeats: 1000,
            split: SplitMode::ByRecord,
        }
    }
}

/// Synthetic corpus generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSettings {
    pub scenes: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        CorpusSettings {
            scenes: 4,
            width: 256,
            height: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub fusion: FusionParams,
    pub model: ModelSettings,
    pub experiment: ExperimentSettings,
    pub corpus: CorpusSettings,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(1);
            Error::parse(line, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.stacked().validate()?;
        if self.experiment.repeats == 0 {
            return Err(Error::invalid("experiment.repeats must be >= 1"));
        }
        let c = &self.corpus;
        if c.scenes == 0 {
            return Err(Error::invalid("corpus.scenes must be >= 1"));
        }
        if c.width < MIN_FEATURE_SIDE || c.height < MIN_FEATURE_SIDE {
            return Err(Error::invalid(format!("corpus images must be at least {MIN_FEATURE_SIDE}x{MIN_FEATURE_SIDE}")));
        }
        Ok(())
    }

    pub fn stacked(&self) -> StackedConfig {
        StackedConfig {
            seed: self.seed,
            train: self.model.train,
            part_a_fraction: self.model.part_a_fraction,
            level0_valid_fraction: self.model.level0_valid_fraction,
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            repeats: self.experiment.repeats,
            seed: self.seed,
            split: self.experiment.split,
            model: self.stacked(),
        }
    }

    /// `(dotted key, value)` pairs of the whole config, for echoing into
    /// output files.
    pub fn flatten(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = Vec::new();
        flatten_into("", &value, &mut out);
        out
    }
}

fn flatten_into(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out);
            }
        }
        toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Identifies the settings features depend on; feature files carry it so
/// stale rows are recomputed.
pub fn feature_config_hash(params: &FusionParams) -> String {
    let text = toml::to_string(params).expect("params serialize");
    let digest = Sha256::digest(format!("siqa-features v1\n{text}").as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

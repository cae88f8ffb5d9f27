// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: one JSON file with a section per subcommand. Paths left
//! unset resolve to the fixed artifact names inside `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use saesteer::miner::{FireRule, DEFAULT_TOP_M};
use saesteer::sae::SaeTrainConfig;
use saesteer::steer::SteeringMode;
use saesteer::store::{SynthConfig, DEFAULT_SPLIT_RATIO};
use saesteer::validation::ValidationConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, seeds every section.
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub train: TrainSection,
    pub mine: MineSection,
    pub validate: ValidateSection,
    pub steer: SteerSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub dump: Option<PathBuf>,
    #[serde(flatten)]
    pub sae: SaeTrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MineSection {
    pub dump: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub fire_rule: FireRule,
    pub top_m: usize,
    pub split_ratio: f64,
    pub exclude_dead: bool,
    /// Compare the mined directions with the planted ones in `synth_truth.saew`.
    pub compare_truth: bool,
    pub seed: u64,
}

impl Default for MineSection {
    fn default() -> Self {
        Self {
            dump: None,
            weights: None,
            fire_rule: FireRule::PostTopK,
            top_m: DEFAULT_TOP_M,
            split_ratio: DEFAULT_SPLIT_RATIO,
            exclude_dead: true,
            compare_truth: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateSection {
    pub weights: Option<PathBuf>,
    /// Overrides the latents chosen by `mine`.
    pub hall_latent: Option<usize>,
    pub faithful_latent: Option<usize>,
    #[serde(flatten)]
    pub battery: ValidationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteerSection {
    pub weights: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    /// Input stream; a random one is generated when unset.
    pub stream: Option<PathBuf>,
    /// Fills `gamma` and `layer` from a named model preset.
    pub preset: Option<String>,
    pub gamma: f64,
    pub layer: u32,
    pub mode: SteeringMode,
    pub fixed_alpha: f64,
    pub steps: usize,
    pub gamma_sweep: Vec<f64>,
    /// System, prompt, visual and output lengths of the generated stream.
    pub segment_lengths: [usize; 4],
    pub seed: u64,
}

impl Default for SteerSection {
    fn default() -> Self {
        Self {
            weights: None,
            plan: None,
            stream: None,
            preset: None,
            gamma: 0.6,
            layer: 0,
            mode: SteeringMode::Ssl,
            fixed_alpha: 0.0,
            steps: 16,
            gamma_sweep: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            segment_lengths: [4, 8, 32, 4],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub captions: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub pope: Option<PathBuf>,
    /// `{canonical: [synonyms]}`; the built-in 80-object list when unset.
    pub vocab: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Pushes the top-level seed into every section.
    pub fn propagate_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.synth.seed = seed;
            self.train.sae.seed = seed;
            self.mine.seed = seed;
            self.validate.battery.seed = seed;
            self.validate.battery.logreg.seed = seed;
            self.validate.battery.svm.seed = seed;
            self.steer.seed = seed;
        }
    }

    pub fn write_resolved(&self, out: &Path, command: &str) -> Result<()> {
        let path = out.join(format!("{command}.config.json"));
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `explicit` if given, otherwise `out/name`.
pub fn resolve(explicit: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn sections_accept_partial_fields() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"seed": 9, "train": {"epochs": 3}, "steer": {"mode": "ReverseSSL"}}"#).unwrap();
        assert_eq!(cfg.train.sae.epochs, 3);
        assert_eq!(cfg.train.sae.k, SaeTrainConfig::default().k);
        assert_eq!(cfg.steer.mode, SteeringMode::ReverseSsl);
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sneed": 1}"#).is_err());
    }

    #[test]
    fn seed_reaches_every_section() {
        let mut cfg = RunConfig {
            seed: Some(5),
            ..RunConfig::default()
        };
        cfg.propagate_seed();
        assert_eq!(cfg.synth.seed, 5);
        assert_eq!(cfg.train.sae.seed, 5);
        assert_eq!(cfg.validate.battery.logreg.seed, 5);
        assert_eq!(cfg.steer.seed, 5);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}

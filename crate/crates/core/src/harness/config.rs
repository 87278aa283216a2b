//! Training configuration.
//!
//! Every field has a default, so an empty config file is valid. Keys:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `backbone` | `"stub"` | registry name of the visual backbone |
//! | `stub` | 512-d, 224 px, 8×8 grid, seed 0, bias 1.0 | stub backbone settings |
//! | `fusion` | `"pr"` | `nr`, `fr`, or `pr` |
//! | `text_fusion` | `false` | concatenate a text-prompt embedding |
//! | `text_encoder` | `{ name = "hashing", dim = 768 }` | text encoder used when `text_fusion` |
//! | `freeze_text_encoder` | `true` | text encoders are never fine-tuned unless a trainable one is plugged in |
//! | `freeze_backbone` | `false` | train the head only |
//! | `dimension` | `"quality"` | label dimension to train on |
//! | `train_batch_size` | `8` | |
//! | `eval_batch_size` | `20` | |
//! | `learning_rate` | `1e-4` | Adam step size |
//! | `weight_decay` | `1e-5` | L2 penalty added to gradients |
//! | `epochs` | `50` | |
//! | `seed` | `0` | drives head init, shuffling, and augmentation |
//! | `device` | `"cpu"` | only `cpu` is available |
//! | `policy` | backbone default | preprocessing override |
//!
//! Environment variables `AIGIQA_TRAIN_<KEY>` (upper-case key) override the
//! scalar keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::assessor::optim::AdamConfig;
use crate::assessor::{FusionMode, PreprocessPolicy, StubConfig, TextEncoderSpec};
use crate::hashing::short_hash;
use crate::subjective::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub backbone: String,
    pub stub: StubConfig,
    pub fusion: FusionMode,
    pub text_fusion: bool,
    pub text_encoder: TextEncoderSpec,
    pub freeze_text_encoder: bool,
    pub freeze_backbone: bool,
    pub dimension: Dimension,
    pub train_batch_size: usize,
    pub eval_batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub device: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PreprocessPolicy>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            backbone: "stub".to_string(),
            stub: StubConfig::default(),
            fusion: FusionMode::Pr,
            text_fusion: false,
            text_encoder: TextEncoderSpec {
                name: "hashing".to_string(),
                dim: 768,
            },
            freeze_text_encoder: true,
            freeze_backbone: false,
            dimension: Dimension::Quality,
            train_batch_size: 8,
            eval_batch_size: 20,
            learning_rate: 1e-4,
            weight_decay: 1e-5,
            epochs: 50,
            seed: 0,
            device: "cpu".to_string(),
            policy: None,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Reads a config file and applies `AIGIQA_TRAIN_*` overrides.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), HarnessError> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
            v.parse()
                .map_err(|_| HarnessError::Config(format!("{key}={v} is not a valid value")))
        }
        macro_rules! env_override {
            ($field:ident, $key:literal) => {
                if let Some(v) = get($key) {
                    self.$field = parse($key, &v)?;
                }
            };
        }
        env_override!(backbone, "AIGIQA_TRAIN_BACKBONE");
        env_override!(text_fusion, "AIGIQA_TRAIN_TEXT_FUSION");
        env_override!(freeze_backbone, "AIGIQA_TRAIN_FREEZE_BACKBONE");
        env_override!(freeze_text_encoder, "AIGIQA_TRAIN_FREEZE_TEXT_ENCODER");
        env_override!(train_batch_size, "AIGIQA_TRAIN_TRAIN_BATCH_SIZE");
        env_override!(eval_batch_size, "AIGIQA_TRAIN_EVAL_BATCH_SIZE");
        env_override!(learning_rate, "AIGIQA_TRAIN_LEARNING_RATE");
        env_override!(weight_decay, "AIGIQA_TRAIN_WEIGHT_DECAY");
        env_override!(epochs, "AIGIQA_TRAIN_EPOCHS");
        env_override!(seed, "AIGIQA_TRAIN_SEED");
        env_override!(device, "AIGIQA_TRAIN_DEVICE");
        if let Some(v) = get("AIGIQA_TRAIN_FUSION") {
            self.fusion = v.parse().map_err(HarnessError::Config)?;
        }
        if let Some(v) = get("AIGIQA_TRAIN_DIMENSION") {
            self.dimension = v.parse().map_err(HarnessError::Config)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.device != "cpu" {
            return Err(HarnessError::Config(format!("device `{}` is not available; use `cpu`", self.device)));
        }
        if self.train_batch_size == 0 || self.eval_batch_size == 0 {
            return Err(HarnessError::Config("batch sizes must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.weight_decay < 0.0 {
            return Err(HarnessError::Config("learning rate must be positive and weight decay non-negative".into()));
        }
        if let Some(p) = &self.policy {
            p.validate()?;
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }

    /// Short digest of the full configuration.
    pub fn hash(&self) -> String {
        short_hash(self)
    }

    /// `NR`, `FR`, `PR`, with a `+text` suffix for text fusion.
    pub fn method_label(&self) -> String {
        method_label(self.fusion, self.text_fusion)
    }

    /// Content-bearing checkpoint file name.
    pub fn checkpoint_file_name(&self) -> String {
        format!(
            "ckpt-{}{}-{}-{}-seed{}-{}.json",
            self.fusion,
            if self.text_fusion { "-text" } else { "" },
            self.backbone,
            self.dimension,
            self.seed,
            self.hash()
        )
    }
}

pub fn method_label(fusion: FusionMode, text: bool) -> String {
    let base = fusion.as_str().to_ascii_uppercase();
    if text {
        format!("{base}+text")
    } else {
        base
    }
}

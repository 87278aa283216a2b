//! Serialized assessor state.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::backbone::{BackboneRegistry, BackboneSpec};
use super::fusion::FusionMode;
use super::head::RegressionHead;
use super::model::Assessor;
use super::preprocess::PreprocessPolicy;
use super::text::{HashingTextEncoder, TextEncoder, TextEncoderSpec};
use super::AssessorError;
use crate::metrics::Correlations;
use crate::subjective::Dimension;

const FORMAT_VERSION: u32 = 1;

pub type TextEncoderFactory = Arc<dyn Fn(&TextEncoderSpec) -> Result<Box<dyn TextEncoder>, AssessorError> + Send + Sync>;

/// Everything needed to rebuild assessors from checkpoints.
#[derive(Clone)]
pub struct ModelRegistry {
    pub backbones: BackboneRegistry,
    text_encoders: BTreeMap<String, TextEncoderFactory>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut text_encoders: BTreeMap<String, TextEncoderFactory> = BTreeMap::new();
        text_encoders.insert(
            HashingTextEncoder::NAME.to_string(),
            Arc::new(|spec| Ok(Box::new(HashingTextEncoder::new(spec.dim)) as Box<dyn TextEncoder>)),
        );
        Self {
            backbones: BackboneRegistry::default(),
            text_encoders,
        }
    }
}

impl ModelRegistry {
    pub fn register_text_encoder(&mut self, name: &str, factory: TextEncoderFactory) {
        self.text_encoders.insert(name.to_string(), factory);
    }

    pub fn build_text_encoder(&self, spec: &TextEncoderSpec) -> Result<Box<dyn TextEncoder>, AssessorError> {
        let factory = self
            .text_encoders
            .get(&spec.name)
            .ok_or_else(|| AssessorError::UnknownTextEncoder(spec.name.clone()))?;
        factory(spec)
    }
}

/// Training provenance stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub dimension: Dimension,
    pub config_hash: String,
    pub seed: u64,
    pub epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<Correlations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub backbone: BackboneSpec,
    pub backbone_config: serde_json::Value,
    pub backbone_params: Vec<f64>,
    pub fusion: FusionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_encoder: Option<TextEncoderSpec>,
    pub head: RegressionHead,
    pub policy: PreprocessPolicy,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn capture(assessor: &Assessor, meta: CheckpointMeta) -> Self {
        let backbone = assessor.backbone();
        Self {
            format: FORMAT_VERSION,
            backbone: backbone.spec().clone(),
            backbone_config: backbone.config(),
            backbone_params: backbone.parameters().to_vec(),
            fusion: assessor.fusion(),
            text_encoder: assessor.text_encoder().map(|t| t.spec()),
            head: assessor.head().clone(),
            policy: *assessor.policy(),
            meta,
        }
    }

    pub fn restore(&self, registry: &ModelRegistry) -> Result<Assessor, AssessorError> {
        if self.format != FORMAT_VERSION {
            return Err(AssessorError::Checkpoint(format!("unsupported format {}", self.format)));
        }
        let mut backbone = registry.backbones.build(&self.backbone.name, &self.backbone_config)?;
        let slot = backbone.parameters_mut();
        if slot.len() != self.backbone_params.len() {
            return Err(AssessorError::Checkpoint(format!(
                "backbone `{}` has {} parameters, checkpoint stores {}",
                self.backbone.name,
                slot.len(),
                self.backbone_params.len()
            )));
        }
        slot.copy_from_slice(&self.backbone_params);
        let text = self
            .text_encoder
            .as_ref()
            .map(|spec| registry.build_text_encoder(spec))
            .transpose()?;
        Assessor::from_parts(backbone, self.head.clone(), self.fusion, text, self.policy)
    }

    pub fn save(&self, path: &Path) -> Result<(), AssessorError> {
        let file = std::fs::File::create(path).map_err(|e| AssessorError::Checkpoint(format!("{}: {e}", path.display())))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self).map_err(|e| AssessorError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AssessorError> {
        let file = std::fs::File::open(path).map_err(|e| AssessorError::Checkpoint(format!("{}: {e}", path.display())))?;
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| AssessorError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assessor::backbone::{StubBackbone, StubConfig};
    use crate::assessor::model::AssessorInput;
    use crate::assessor::preprocess::ImageTensor;

    #[test]
    fn roundtrip_preserves_predictions_bit_exactly() {
        let stub = StubBackbone::new(StubConfig { feature_dim: 6, input_size: 8, grid: 2, seed: 4, bias: 0.0 });
        let mut a = Assessor::new(Box::new(stub), FusionMode::Pr, Some(Box::new(HashingTextEncoder::new(5))), 9);
        a.backbone_mut().parameters_mut()[3] = 0.123_456_789_012_345;
        let meta = CheckpointMeta {
            dimension: Dimension::Quality,
            config_hash: "abc".into(),
            seed: 1,
            epoch: 2,
            eval: None,
        };
        let ckpt = Checkpoint::capture(&a, meta);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        let b = loaded.restore(&ModelRegistry::default()).unwrap();

        let input = AssessorInput {
            generated: ImageTensor(ndarray::Array3::from_shape_fn((3, 8, 8), |(c, y, x)| (c + y * x) as f32 * 0.01)),
            reference: None,
            text_prompt: Some("a bird".into()),
        };
        assert_eq!(a.predict(std::slice::from_ref(&input)).unwrap(), b.predict(&[input]).unwrap());
    }

    #[test]
    fn restore_reports_unavailable_backbones() {
        let stub = StubBackbone::new(StubConfig { feature_dim: 4, input_size: 8, grid: 2, seed: 0, bias: 0.0 });
        let a = Assessor::new(Box::new(stub), FusionMode::Nr, None, 0);
        let mut ckpt = Checkpoint::capture(
            &a,
            CheckpointMeta { dimension: Dimension::Quality, config_hash: String::new(), seed: 0, epoch: 0, eval: None },
        );
        ckpt.backbone.name = "resnet18".into();
        assert!(matches!(ckpt.restore(&ModelRegistry::default()), Err(AssessorError::BackboneUnavailable(_))));
    }
}

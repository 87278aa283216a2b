//! Visual feature extractors.
//!
//! [`Backbone`] is the plugin surface for pretrained networks. The crate ships
//! one concrete implementation, [`StubBackbone`]: a seeded linear map over a
//! block-averaged copy of the input, which is cheap, differentiable in closed
//! form, and exact enough to serve as a test oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::preprocess::{ImageTensor, Normalization, PreprocessPolicy};
use super::AssessorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub name: String,
    pub feature_dim: usize,
    pub input_size: usize,
    pub pretrained: bool,
    pub normalization: Normalization,
}

impl BackboneSpec {
    /// Preprocessing that produces this backbone's input size.
    pub fn preprocess_policy(&self) -> PreprocessPolicy {
        if self.input_size == PreprocessPolicy::INCEPTION.crop_to as usize {
            PreprocessPolicy::INCEPTION
        } else if self.input_size == PreprocessPolicy::DEFAULT.crop_to as usize {
            PreprocessPolicy::DEFAULT
        } else {
            // keep the 256/224 margin ratio for other sizes
            let crop = self.input_size as u32;
            PreprocessPolicy {
                resize_to: (crop * 8).div_ceil(7),
                crop_to: crop,
                ..PreprocessPolicy::DEFAULT
            }
        }
    }
}

/// Known pretrained architectures. Their weights are not bundled; a plugin
/// factory must be registered to instantiate them.
pub fn pretrained_specs() -> Vec<BackboneSpec> {
    let spec = |name: &str, d: usize, size: usize, norm: Normalization| BackboneSpec {
        name: name.to_string(),
        feature_dim: d,
        input_size: size,
        pretrained: true,
        normalization: norm,
    };
    vec![
        spec("vgg16", 512, 224, Normalization::IMAGENET),
        spec("vgg19", 512, 224, Normalization::IMAGENET),
        spec("resnet18", 512, 224, Normalization::IMAGENET),
        spec("resnet50", 2048, 224, Normalization::IMAGENET),
        spec("inception_v4", 1536, 299, Normalization::SYMMETRIC),
        spec("vit_small_patch16_224", 384, 224, Normalization::SYMMETRIC),
        spec("vit_base_patch16_224", 768, 224, Normalization::SYMMETRIC),
        spec("vit_large_patch16_224", 1024, 224, Normalization::SYMMETRIC),
    ]
}

/// A feature extractor with optional trainable parameters.
///
/// Parameters are exposed as one flat slice so the optimizer can treat every
/// backbone uniformly. Frozen or non-differentiable backbones return an empty
/// slice and never receive gradients.
pub trait Backbone: Send + Sync {
    fn spec(&self) -> &BackboneSpec;

    /// Features for a batch, shape `(batch.len(), feature_dim)`.
    fn extract(&self, batch: &[ImageTensor]) -> Result<Array2<f64>, AssessorError>;

    fn parameters(&self) -> &[f64] {
        &[]
    }

    fn parameters_mut(&mut self) -> &mut [f64] {
        &mut []
    }

    /// Adds `d loss / d parameters` into `grads` given `d loss / d features`.
    fn accumulate_gradient(
        &self,
        _batch: &[ImageTensor],
        _d_features: ArrayView2<'_, f64>,
        _grads: &mut [f64],
    ) -> Result<(), AssessorError> {
        Ok(())
    }

    /// Extra state needed to rebuild the backbone from a checkpoint.
    fn config(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StubConfig {
    pub feature_dim: usize,
    pub input_size: usize,
    /// Side of the block-averaging grid; the linear map sees `3 · grid²` inputs.
    pub grid: usize,
    pub seed: u64,
    /// Initial value of every bias entry. A positive offset mimics the
    /// non-negative pooled activations of real backbones.
    #[serde(default)]
    pub bias: f64,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            feature_dim: 512,
            input_size: 224,
            grid: 8,
            seed: 0,
            bias: 1.0,
        }
    }
}

/// `f = W · pool(x) + b` with `W ~ N(0, 1/P)` drawn from `seed` and every
/// entry of `b` set to `bias`.
#[derive(Debug, Clone)]
pub struct StubBackbone {
    spec: BackboneSpec,
    config: StubConfig,
    /// Row-major `W` (`feature_dim × inputs`) followed by `b` (`feature_dim`).
    params: Vec<f64>,
}

impl StubBackbone {
    pub const NAME: &'static str = "stub";

    pub fn new(config: StubConfig) -> Self {
        assert!(config.grid >= 1 && config.grid <= config.input_size, "grid must fit the input");
        let inputs = 3 * config.grid * config.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, (1.0 / inputs as f64).sqrt()).expect("finite std");
        let mut params: Vec<f64> = (0..config.feature_dim * inputs).map(|_| normal.sample(&mut rng)).collect();
        params.extend(std::iter::repeat_n(config.bias, config.feature_dim));
        Self {
            spec: BackboneSpec {
                name: Self::NAME.to_string(),
                feature_dim: config.feature_dim,
                input_size: config.input_size,
                pretrained: false,
                normalization: Normalization::IMAGENET,
            },
            config,
            params,
        }
    }

    /// Replaces all parameters; `params` must use the layout of
    /// [`Backbone::parameters`].
    pub fn with_parameters(config: StubConfig, params: Vec<f64>) -> Result<Self, AssessorError> {
        let mut stub = Self::new(config);
        if params.len() != stub.params.len() {
            return Err(AssessorError::DimensionMismatch {
                expected: stub.params.len(),
                found: params.len(),
                what: "stub backbone parameters",
            });
        }
        stub.params = params;
        Ok(stub)
    }

    pub fn stub_config(&self) -> StubConfig {
        self.config
    }

    pub fn pooled_len(&self) -> usize {
        3 * self.config.grid * self.config.grid
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        let n = self.config.feature_dim * self.pooled_len();
        ArrayView2::from_shape((self.config.feature_dim, self.pooled_len()), &self.params[..n])
            .expect("parameter layout")
    }

    pub fn bias(&self) -> &[f64] {
        &self.params[self.config.feature_dim * self.pooled_len()..]
    }

    /// Block averages per channel, channel-major then row-major cells.
    pub fn pool(&self, image: &ImageTensor) -> Result<Vec<f64>, AssessorError> {
        let size = self.config.input_size;
        if image.channels() != 3 || image.size() != (size, size) {
            let (h, w) = image.size();
            return Err(AssessorError::InputSize {
                expected: size,
                found: (h, w),
            });
        }
        let g = self.config.grid;
        let mut out = Vec::with_capacity(self.pooled_len());
        for ch in 0..3 {
            for gy in 0..g {
                let (y0, y1) = (gy * size / g, (gy + 1) * size / g);
                for gx in 0..g {
                    let (x0, x1) = (gx * size / g, (gx + 1) * size / g);
                    let mut acc = 0.0f64;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            acc += image.0[[ch, y, x]] as f64;
                        }
                    }
                    out.push(acc / ((y1 - y0) * (x1 - x0)) as f64);
                }
            }
        }
        Ok(out)
    }

    fn pooled_batch(&self, batch: &[ImageTensor]) -> Result<Array2<f64>, AssessorError> {
        let mut m = Array2::zeros((batch.len(), self.pooled_len()));
        for (i, img) in batch.iter().enumerate() {
            let pooled = self.pool(img)?;
            m.row_mut(i).assign(&ndarray::ArrayView1::from(&pooled[..]));
        }
        Ok(m)
    }
}

impl Backbone for StubBackbone {
    fn spec(&self) -> &BackboneSpec {
        &self.spec
    }

    fn extract(&self, batch: &[ImageTensor]) -> Result<Array2<f64>, AssessorError> {
        let pooled = self.pooled_batch(batch)?;
        let mut feats = pooled.dot(&self.weights().t());
        let bias = ndarray::ArrayView1::from(self.bias());
        feats += &bias;
        Ok(feats)
    }

    fn parameters(&self) -> &[f64] {
        &self.params
    }

    fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn accumulate_gradient(
        &self,
        batch: &[ImageTensor],
        d_features: ArrayView2<'_, f64>,
        grads: &mut [f64],
    ) -> Result<(), AssessorError> {
        if d_features.dim() != (batch.len(), self.config.feature_dim) || grads.len() != self.params.len() {
            return Err(AssessorError::DimensionMismatch {
                expected: self.config.feature_dim,
                found: d_features.ncols(),
                what: "stub backbone gradient",
            });
        }
        let pooled = self.pooled_batch(batch)?;
        let d_w = d_features.t().dot(&pooled);
        let n = d_w.len();
        for (g, d) in grads[..n].iter_mut().zip(d_w.iter()) {
            *g += d;
        }
        for (g, d) in grads[n..].iter_mut().zip(d_features.sum_axis(ndarray::Axis(0)).iter()) {
            *g += d;
        }
        Ok(())
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(self.config).expect("stub config serializes")
    }
}

/// Builds a backbone from its spec and saved configuration.
pub type BackboneFactory =
    Arc<dyn Fn(&BackboneSpec, &serde_json::Value) -> Result<Box<dyn Backbone>, AssessorError> + Send + Sync>;

/// Name → factory lookup, seeded with the stub and open to plugins.
#[derive(Clone)]
pub struct BackboneRegistry {
    factories: BTreeMap<String, BackboneFactory>,
    specs: BTreeMap<String, BackboneSpec>,
}

impl Default for BackboneRegistry {
    fn default() -> Self {
        let mut reg = Self {
            factories: BTreeMap::new(),
            specs: pretrained_specs().into_iter().map(|s| (s.name.clone(), s)).collect(),
        };
        let stub = StubBackbone::new(StubConfig::default());
        reg.specs.insert(StubBackbone::NAME.into(), stub.spec().clone());
        reg.factories.insert(
            StubBackbone::NAME.into(),
            Arc::new(|_spec, config| {
                let cfg: StubConfig = if config.is_null() {
                    StubConfig::default()
                } else {
                    serde_json::from_value(config.clone()).map_err(|e| AssessorError::Checkpoint(e.to_string()))?
                };
                Ok(Box::new(StubBackbone::new(cfg)) as Box<dyn Backbone>)
            }),
        );
        reg
    }
}

impl BackboneRegistry {
    pub fn register(&mut self, spec: BackboneSpec, factory: BackboneFactory) {
        self.factories.insert(spec.name.clone(), factory);
        self.specs.insert(spec.name.clone(), spec);
    }

    pub fn spec(&self, name: &str) -> Option<&BackboneSpec> {
        self.specs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, config: &serde_json::Value) -> Result<Box<dyn Backbone>, AssessorError> {
        let spec = self
            .specs
            .get(name)
            .ok_or_else(|| AssessorError::UnknownBackbone(name.to_string()))?;
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| AssessorError::BackboneUnavailable(name.to_string()))?;
        factory(spec, config)
    }
}

//! Quality assessors: no-reference, full-reference, and partial-reference
//! predictors over a pluggable visual backbone, with optional text fusion.

use std::path::PathBuf;

use thiserror::Error;

pub mod backbone;
pub mod checkpoint;
pub mod fusion;
pub mod head;
pub mod loss;
pub mod model;
pub mod optim;
pub mod preprocess;
pub mod text;

pub use backbone::{Backbone, BackboneRegistry, BackboneSpec, StubBackbone, StubConfig};
pub use checkpoint::{Checkpoint, ModelRegistry};
pub use fusion::{fuse_pr, fuse_text, FeatureBundle, FusionMode, PaddingMask};
pub use head::RegressionHead;
pub use loss::mse_loss;
pub use model::{predict_fr, predict_nr, predict_pr, Assessor, AssessorInput, Gradients, PrSample};
pub use optim::{Adam, AdamConfig};
pub use preprocess::{preprocess, ImageTensor, Mode, Normalization, PreprocessPolicy};
pub use text::{HashingTextEncoder, TextEncoder, TextEncoderSpec};

#[derive(Debug, Error)]
pub enum AssessorError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        what: &'static str,
    },
    #[error("backbone expects {expected}x{expected} inputs, got {found:?}")]
    InputSize { expected: usize, found: (usize, usize) },
    #[error("batch length mismatch: {generated} generated vs {reference} paired")]
    BatchMismatch { generated: usize, reference: usize },
    #[error("a reference image is present but its padding mask marks it absent")]
    MaskConflict,
    #[error("a sample requires a reference image but has none")]
    MissingReference,
    #[error("text fusion requires a text prompt for every sample")]
    MissingTextPrompt,
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid preprocessing policy: {0}")]
    InvalidPolicy(String),
    #[error("cannot decode image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("unknown backbone `{0}`")]
    UnknownBackbone(String),
    #[error("backbone `{0}` has no registered weights provider; register a plugin factory")]
    BackboneUnavailable(String),
    #[error("unknown text encoder `{0}`")]
    UnknownTextEncoder(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

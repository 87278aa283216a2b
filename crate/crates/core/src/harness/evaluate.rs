//! Predictors and test-fold evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::method_label;
use super::data::ImageCache;
use super::HarnessError;
use crate::assessor::checkpoint::Checkpoint;
use crate::assessor::{Assessor, Mode, ModelRegistry};
use crate::corpus::{fold_ids, Corpus, Fold, SplitAssignment, Subset};
use crate::hashing::short_hash;
use crate::metrics::correlations;
use crate::subjective::{label_index, Dimension, MosLabel};

/// Anything that scores images on one dimension. Trained assessors and
/// external baseline methods plug in here.
pub trait ScorePredictor {
    /// Method label used as a report row key.
    fn method(&self) -> String;
    fn backbone(&self) -> String;
    fn dimension(&self) -> Dimension;
    /// Where the predictor came from, for report provenance.
    fn source(&self) -> String;
    fn predict(&self, corpus: &Corpus, image_ids: &[String]) -> Result<Vec<f64>, HarnessError>;
}

/// An assessor restored from a checkpoint.
pub struct TrainedModel {
    checkpoint: Checkpoint,
    assessor: Assessor,
    source: String,
    eval_batch_size: usize,
}

impl TrainedModel {
    pub fn new(checkpoint: Checkpoint, registry: &ModelRegistry, source: impl Into<String>) -> Result<Self, HarnessError> {
        let assessor = checkpoint.restore(registry)?;
        Ok(Self {
            checkpoint,
            assessor,
            source: source.into(),
            eval_batch_size: 20,
        })
    }

    pub fn load(path: &Path, registry: &ModelRegistry) -> Result<Self, HarnessError> {
        let ckpt = Checkpoint::load(path)?;
        Self::new(ckpt, registry, path.display().to_string())
    }

    pub fn with_eval_batch_size(mut self, n: usize) -> Self {
        self.eval_batch_size = n.max(1);
        self
    }

    pub fn checkpoint(&self) -> &Checkpoint {
        &self.checkpoint
    }

    pub fn assessor(&self) -> &Assessor {
        &self.assessor
    }
}

impl ScorePredictor for TrainedModel {
    fn method(&self) -> String {
        method_label(self.checkpoint.fusion, self.checkpoint.text_encoder.is_some())
    }

    fn backbone(&self) -> String {
        self.checkpoint.backbone.name.clone()
    }

    fn dimension(&self) -> Dimension {
        self.checkpoint.meta.dimension
    }

    fn source(&self) -> String {
        self.source.clone()
    }

    fn predict(&self, corpus: &Corpus, image_ids: &[String]) -> Result<Vec<f64>, HarnessError> {
        predict_in_batches(&self.assessor, corpus, image_ids, self.eval_batch_size)
    }
}

/// Eval-mode predictions for `ids`, `batch_size` images at a time.
pub fn predict_in_batches(
    assessor: &Assessor,
    corpus: &Corpus,
    ids: &[String],
    batch_size: usize,
) -> Result<Vec<f64>, HarnessError> {
    let cache = ImageCache::load(corpus, ids, *assessor.policy(), assessor.backbone().spec().normalization)?;
    predict_cached(assessor, &cache, ids, batch_size)
}

pub(crate) fn predict_cached(
    assessor: &Assessor,
    cache: &ImageCache,
    ids: &[String],
    batch_size: usize,
) -> Result<Vec<f64>, HarnessError> {
    // eval mode consumes no randomness; the rng only satisfies the signature
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(ids.len());
    for chunk in ids.chunks(batch_size.max(1)) {
        let inputs = cache.inputs(chunk, Mode::Eval, &mut rng)?;
        out.extend(assessor.predict(&inputs)?);
    }
    Ok(out)
}

/// Returns the ground-truth labels; scores are perfect by construction.
pub struct OraclePredictor {
    dimension: Dimension,
    labels: BTreeMap<String, f64>,
}

impl OraclePredictor {
    pub fn new(labels: &[MosLabel], dimension: Dimension) -> Self {
        Self {
            dimension,
            labels: label_index(labels, dimension),
        }
    }
}

impl ScorePredictor for OraclePredictor {
    fn method(&self) -> String {
        "oracle".to_string()
    }

    fn backbone(&self) -> String {
        "-".to_string()
    }

    fn dimension(&self) -> Dimension {
        self.dimension
    }

    fn source(&self) -> String {
        "labels".to_string()
    }

    fn predict(&self, _corpus: &Corpus, image_ids: &[String]) -> Result<Vec<f64>, HarnessError> {
        image_ids
            .iter()
            .map(|id| self.labels.get(id).copied().ok_or_else(|| HarnessError::MissingLabels(vec![id.clone()])))
            .collect()
    }
}

/// Which part of the database an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Full,
    T2i,
    I2i,
}

impl Scope {
    pub fn of<'a>(subsets: impl IntoIterator<Item = &'a Subset>) -> Scope {
        let (mut t2i, mut i2i) = (false, false);
        for s in subsets {
            match s {
                Subset::T2I => t2i = true,
                Subset::I2I => i2i = true,
            }
        }
        match (t2i, i2i) {
            (true, false) => Scope::T2i,
            (false, true) => Scope::I2i,
            _ => Scope::Full,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Full => "full",
            Scope::T2i => "T2IQA subset",
            Scope::I2i => "I2IQA subset",
        })
    }
}

/// One (method, dimension) result on a test fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub method: String,
    pub backbone: String,
    pub dimension: Dimension,
    pub scope: Scope,
    pub srcc: f64,
    pub plcc: f64,
    pub count: usize,
    pub checkpoint: String,
    pub split: String,
}

/// Scores the test fold and correlates with the MOS labels of `dimension`.
pub fn evaluate(
    predictor: &dyn ScorePredictor,
    dimension: Dimension,
    corpus: &Corpus,
    split: &[SplitAssignment],
    labels: &[MosLabel],
) -> Result<Evaluation, HarnessError> {
    if predictor.dimension() != dimension {
        return Err(HarnessError::DimensionMismatch {
            requested: dimension,
            checkpoint: predictor.dimension(),
        });
    }
    let ids = fold_ids(split, Fold::Test);
    if ids.is_empty() {
        return Err(HarnessError::EmptyFold(Fold::Test));
    }
    let truth = truth_for(labels, dimension, &ids)?;
    let predicted = predictor.predict(corpus, &ids)?;
    let c = correlations(&truth, &predicted)?;
    let subsets: Vec<Subset> = ids.iter().filter_map(|id| corpus.get(id)).map(|r| r.subset).collect();
    Ok(Evaluation {
        method: predictor.method(),
        backbone: predictor.backbone(),
        dimension,
        scope: Scope::of(&subsets),
        srcc: c.srcc,
        plcc: c.plcc,
        count: ids.len(),
        checkpoint: predictor.source(),
        split: split_fingerprint(split),
    })
}

pub(crate) fn truth_for(labels: &[MosLabel], dimension: Dimension, ids: &[String]) -> Result<Vec<f64>, HarnessError> {
    let index = label_index(labels, dimension);
    let missing: Vec<String> = ids.iter().filter(|id| !index.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingLabels(missing));
    }
    Ok(ids.iter().map(|id| index[id]).collect())
}

/// Stable identifier of a split assignment.
pub fn split_fingerprint(split: &[SplitAssignment]) -> String {
    format!("split-{}", short_hash(&split))
}

/// Conventional file name for a split artifact.
pub fn split_file_name(seed: u64, split: &[SplitAssignment]) -> PathBuf {
    PathBuf::from(format!("split-seed{seed}-{}.jsonl", short_hash(&split)))
}

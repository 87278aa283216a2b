//! Side-by-side predictions of several methods for one image.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::evaluate::ScorePredictor;
use super::HarnessError;
use crate::corpus::{Corpus, Fold, SplitAssignment, Subset};
use crate::subjective::{Dimension, MosLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePrediction {
    pub method: String,
    pub backbone: String,
    pub scores: BTreeMap<Dimension, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub image_id: String,
    pub subset: Subset,
    pub generator: String,
    pub text_prompt: String,
    pub ground_truth: BTreeMap<Dimension, f64>,
    pub predictions: Vec<CasePrediction>,
}

/// Runs every predictor on `image_id`. Predictors are grouped into one row
/// per (method, backbone); all rows must cover the same dimensions.
pub fn case_study(
    predictors: &[&dyn ScorePredictor],
    corpus: &Corpus,
    split: &[SplitAssignment],
    labels: &[MosLabel],
    image_id: &str,
) -> Result<CaseStudy, HarnessError> {
    let record = corpus
        .get(image_id)
        .ok_or_else(|| HarnessError::UnknownImage(image_id.to_string()))?;
    if !split.iter().any(|a| a.image_id == image_id && a.fold == Fold::Test) {
        return Err(HarnessError::NotInTestFold(image_id.to_string()));
    }
    let ground_truth: BTreeMap<Dimension, f64> = labels
        .iter()
        .filter(|l| l.image_id == image_id)
        .map(|l| (l.dimension, l.mos))
        .collect();
    if ground_truth.is_empty() {
        return Err(HarnessError::MissingLabels(vec![image_id.to_string()]));
    }

    let ids = [image_id.to_string()];
    let mut rows: BTreeMap<(String, String), BTreeMap<Dimension, f64>> = BTreeMap::new();
    for p in predictors {
        let score = p.predict(corpus, &ids)?[0];
        rows.entry((p.method(), p.backbone())).or_default().insert(p.dimension(), score);
    }
    let dims: Vec<Vec<Dimension>> = rows.values().map(|s| s.keys().copied().collect()).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(HarnessError::Config("case-study models must cover the same dimensions".into()));
    }
    Ok(CaseStudy {
        image_id: image_id.to_string(),
        subset: record.subset,
        generator: record.generator.clone(),
        text_prompt: record.text_prompt.clone(),
        ground_truth,
        predictions: rows
            .into_iter()
            .map(|((method, backbone), scores)| CasePrediction { method, backbone, scores })
            .collect(),
    })
}

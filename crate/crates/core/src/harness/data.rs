//! Decoded, resized images held in memory for training and evaluation.

use std::collections::HashMap;

use image::RgbImage;
use rand::Rng;

use super::HarnessError;
use crate::assessor::preprocess::{crop_flip_normalize, load_rgb, resize};
use crate::assessor::{AssessorInput, Mode, Normalization, PreprocessPolicy};
use crate::corpus::Corpus;

#[derive(Debug, Clone)]
struct Entry {
    generated: RgbImage,
    reference: Option<RgbImage>,
    text_prompt: String,
}

/// Images of a subset of the corpus after the deterministic resize stage.
#[derive(Debug, Clone)]
pub struct ImageCache {
    policy: PreprocessPolicy,
    norm: Normalization,
    entries: HashMap<String, Entry>,
}

impl ImageCache {
    pub fn load(
        corpus: &Corpus,
        ids: &[String],
        policy: PreprocessPolicy,
        norm: Normalization,
    ) -> Result<Self, HarnessError> {
        policy.validate()?;
        let mut entries = HashMap::with_capacity(ids.len());
        for id in ids {
            if entries.contains_key(id) {
                continue;
            }
            let record = corpus.get(id).ok_or_else(|| HarnessError::UnknownImage(id.clone()))?;
            let generated = resize(&load_rgb(&corpus.image_path(record))?, &policy);
            let reference = match corpus.reference_path(record) {
                Some(p) => Some(resize(&load_rgb(&p)?, &policy)),
                None => None,
            };
            entries.insert(
                id.clone(),
                Entry {
                    generated,
                    reference,
                    text_prompt: record.text_prompt.clone(),
                },
            );
        }
        Ok(Self { policy, norm, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Preprocessed inputs for `ids` in order. Train mode draws crops and
    /// flips from `rng`; eval mode never touches it.
    pub fn inputs<R: Rng + ?Sized>(
        &self,
        ids: &[String],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<AssessorInput>, HarnessError> {
        ids.iter()
            .map(|id| {
                let e = self.entries.get(id).ok_or_else(|| HarnessError::UnknownImage(id.clone()))?;
                let generated = crop_flip_normalize(&e.generated, &self.policy, &self.norm, mode, rng);
                let reference = e
                    .reference
                    .as_ref()
                    .map(|r| crop_flip_normalize(r, &self.policy, &self.norm, mode, rng));
                Ok(AssessorInput {
                    generated,
                    reference,
                    text_prompt: Some(e.text_prompt.clone()),
                })
            })
            .collect()
    }
}

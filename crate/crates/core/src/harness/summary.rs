//! MOS distribution summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::Corpus;
use crate::subjective::{Dimension, MosLabel};

/// Equal-width bins over `[0, 5]`. Each bin is half-open except the last,
/// which includes 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub const LOW: f64 = 0.0;
    pub const HIGH: f64 = 5.0;

    pub fn new(bins: usize) -> Self {
        let bins = bins.max(1);
        let width = (Self::HIGH - Self::LOW) / bins as f64;
        Self {
            edges: (0..=bins).map(|i| Self::LOW + width * i as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let bins = self.counts.len();
        let scaled = (value - Self::LOW) / (Self::HIGH - Self::LOW) * bins as f64;
        (scaled.floor().max(0.0) as usize).min(bins - 1)
    }

    pub fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub dimension: Dimension,
    pub global: Histogram,
    pub per_subset: BTreeMap<String, Histogram>,
    pub per_generator: BTreeMap<String, Histogram>,
    pub generator_means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosSummary {
    pub bins: usize,
    pub dimensions: Vec<DimensionSummary>,
}

/// Histograms of the labels of every dimension present in `labels`.
pub fn mos_summary(labels: &[MosLabel], corpus: &Corpus, bins: usize) -> Result<MosSummary, HarnessError> {
    let bins = bins.max(1);
    let mut dimensions = Vec::new();
    for dim in Dimension::ALL {
        let mut selected: Vec<&MosLabel> = labels.iter().filter(|l| l.dimension == dim).collect();
        if selected.is_empty() {
            continue;
        }
        selected.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let mut global = Histogram::new(bins);
        let mut per_subset: BTreeMap<String, Histogram> = BTreeMap::new();
        let mut per_generator: BTreeMap<String, Histogram> = BTreeMap::new();
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for label in selected {
            let record = corpus
                .get(&label.image_id)
                .ok_or_else(|| HarnessError::UnknownImage(label.image_id.clone()))?;
            global.add(label.mos);
            per_subset
                .entry(record.subset.to_string())
                .or_insert_with(|| Histogram::new(bins))
                .add(label.mos);
            per_generator
                .entry(record.generator.clone())
                .or_insert_with(|| Histogram::new(bins))
                .add(label.mos);
            let s = sums.entry(record.generator.clone()).or_default();
            s.0 += label.mos;
            s.1 += 1;
        }
        dimensions.push(DimensionSummary {
            dimension: dim,
            global,
            per_subset,
            per_generator,
            generator_means: sums.into_iter().map(|(g, (s, n))| (g, s / n as f64)).collect(),
        });
    }
    Ok(MosSummary { bins, dimensions })
}

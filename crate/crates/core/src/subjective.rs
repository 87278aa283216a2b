//! Reduction of raw evaluator ratings to per-image mean opinion scores.
//!
//! For each image and dimension, the sample mean and standard deviation of all
//! N ratings define a 95% confidence half-width `ε = 1.96 · S / √N`. Ratings
//! outside the closed interval `[μ - ε, μ + ε]` are discarded once (no
//! re-screening) and the MOS is the mean of the survivors.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// z-value of the two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Largest score on the rating scale, in hundredths.
const MAX_CENTIS: u16 = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MosError {
    #[error("need at least 2 ratings, got {0}")]
    InsufficientRatings(usize),
    #[error("images with fewer than 2 ratings: {0:?}")]
    UnderRated(Vec<String>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("score {0} is outside [0, 5]")]
    OutOfRange(f64),
    #[error("score {0} is not a multiple of 0.01")]
    OffGrid(f64),
}

/// A rating on the 0..=5 scale in steps of 0.01, stored in hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u16);

impl Score {
    pub fn from_centis(centis: u16) -> Result<Self, ScoreError> {
        if centis > MAX_CENTIS {
            return Err(ScoreError::OutOfRange(centis as f64 / 100.0));
        }
        Ok(Self(centis))
    }

    pub fn centis(self) -> u16 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl TryFrom<f64> for Score {
    type Error = ScoreError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        if !value.is_finite() {
            return Err(ScoreError::OutOfRange(value));
        }
        let scaled = value * 100.0;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 {
            return Err(ScoreError::OffGrid(value));
        }
        if !(0.0..=500.0).contains(&rounded) {
            return Err(ScoreError::OutOfRange(value));
        }
        Self::from_centis(rounded as u16)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Score::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// The three rated aspects of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Quality,
    Authenticity,
    Correspondence,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::Quality,
        Dimension::Authenticity,
        Dimension::Correspondence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Quality => "quality",
            Dimension::Authenticity => "authenticity",
            Dimension::Correspondence => "correspondence",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quality" => Ok(Dimension::Quality),
            "authenticity" => Ok(Dimension::Authenticity),
            "correspondence" => Ok(Dimension::Correspondence),
            other => Err(format!("unknown dimension `{other}`")),
        }
    }
}

/// One evaluator's scores for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub image_id: String,
    pub evaluator_id: String,
    pub stage: u32,
    pub quality: Score,
    pub authenticity: Score,
    pub correspondence: Score,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

impl RatingEvent {
    pub fn score(&self, dimension: Dimension) -> Score {
        match dimension {
            Dimension::Quality => self.quality,
            Dimension::Authenticity => self.authenticity,
            Dimension::Correspondence => self.correspondence,
        }
    }
}

/// How ratings are grouped before outlier rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionScope {
    /// All ratings of one image form one group regardless of stage.
    PerImage,
}

/// Per-image, per-dimension MOS with its rejection audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosLabel {
    pub image_id: String,
    pub dimension: Dimension,
    pub mean: f64,
    pub stddev: f64,
    pub epsilon: f64,
    pub total_count: usize,
    pub kept_count: usize,
    pub discarded_ids: Vec<String>,
    pub mos: f64,
    pub rejection_scope: RejectionScope,
}

/// Sample mean and standard deviation (divisor N - 1).
pub fn compute_mean_std(ratings: &[f64]) -> Result<(f64, f64), MosError> {
    let n = ratings.len();
    if n < 2 {
        return Err(MosError::InsufficientRatings(n));
    }
    let mean = ratings.iter().sum::<f64>() / n as f64;
    let ss: f64 = ratings.iter().map(|r| (mean - r) * (mean - r)).sum();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}

/// Half-width of the 95% confidence interval.
pub fn confidence_epsilon(stddev: f64, n: usize) -> f64 {
    debug_assert!(n >= 1 && stddev >= 0.0);
    Z_95 * stddev / (n as f64).sqrt()
}

/// MOS for one image on one dimension from `(evaluator_id, score)` pairs.
pub fn compute_mos(
    image_id: &str,
    dimension: Dimension,
    ratings: &[(String, f64)],
) -> Result<MosLabel, MosError> {
    // summation order fixed by value so the label is permutation invariant
    let mut values: Vec<f64> = ratings.iter().map(|(_, s)| *s).collect();
    values.sort_by(f64::total_cmp);
    let (mean, stddev) = compute_mean_std(&values)?;
    let epsilon = confidence_epsilon(stddev, values.len());

    let mut kept = Vec::with_capacity(ratings.len());
    let mut discarded_ids = Vec::new();
    for (id, score) in ratings {
        if (score - mean).abs() > epsilon {
            discarded_ids.push(id.clone());
        } else {
            kept.push(*score);
        }
    }
    discarded_ids.sort();
    kept.sort_by(f64::total_cmp);

    let mos = if kept.is_empty() {
        // unreachable in exact arithmetic; kept as a total fallback
        discarded_ids.clear();
        kept.extend_from_slice(&values);
        mean
    } else {
        kept.iter().sum::<f64>() / kept.len() as f64
    };

    Ok(MosLabel {
        image_id: image_id.to_string(),
        dimension,
        mean,
        stddev,
        epsilon,
        total_count: ratings.len(),
        kept_count: kept.len(),
        discarded_ids,
        mos,
        rejection_scope: RejectionScope::PerImage,
    })
}

/// One label per (image, dimension), sorted by image id then dimension.
pub fn compute_all_mos(events: &[RatingEvent]) -> Result<Vec<MosLabel>, MosError> {
    let mut by_image: BTreeMap<&str, Vec<&RatingEvent>> = BTreeMap::new();
    for e in events {
        by_image.entry(e.image_id.as_str()).or_default().push(e);
    }

    let under: Vec<String> = by_image
        .iter()
        .filter(|(_, evs)| evs.len() < 2)
        .map(|(id, _)| id.to_string())
        .collect();
    if !under.is_empty() {
        return Err(MosError::UnderRated(under));
    }

    let mut labels = Vec::with_capacity(by_image.len() * 3);
    for (image_id, mut evs) in by_image {
        // order-independent output for any input permutation
        evs.sort_by(|a, b| a.evaluator_id.cmp(&b.evaluator_id));
        for dim in Dimension::ALL {
            let ratings: Vec<(String, f64)> = evs
                .iter()
                .map(|e| (e.evaluator_id.clone(), e.score(dim).value()))
                .collect();
            labels.push(compute_mos(image_id, dim, &ratings)?);
        }
    }
    Ok(labels)
}

/// Writes labels as one JSON record per line.
pub fn write_labels<W: Write>(mut out: W, labels: &[MosLabel]) -> std::io::Result<()> {
    for label in labels {
        serde_json::to_writer(&mut out, label)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_labels<R: BufRead>(input: R) -> std::io::Result<Vec<MosLabel>> {
    let mut labels = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        labels.push(serde_json::from_str(&line)?);
    }
    Ok(labels)
}

pub fn load_labels(path: &Path) -> std::io::Result<Vec<MosLabel>> {
    read_labels(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_labels(path: &Path, labels: &[MosLabel]) -> std::io::Result<()> {
    write_labels(std::io::BufWriter::new(std::fs::File::create(path)?), labels)
}

/// Index of `image_id -> mos` for one dimension.
pub fn label_index(labels: &[MosLabel], dimension: Dimension) -> BTreeMap<String, f64> {
    labels
        .iter()
        .filter(|l| l.dimension == dimension)
        .map(|l| (l.image_id.clone(), l.mos))
        .collect()
}

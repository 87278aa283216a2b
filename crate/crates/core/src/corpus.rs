//! On-disk data model for the image database: manifest ingestion, validation,
//! and stratified train/test splitting.
//!
//! A manifest is a UTF-8 file with one JSON record per line. Relative image
//! paths are resolved against the directory holding the manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::seed_from_parts;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate image_id `{0}`")]
    DuplicateId(String),
    #[error("record `{0}`: subset I2I requires image_prompt_path")]
    MissingImagePrompt(String),
    #[error("record `{0}`: subset T2I must not carry an image_prompt_path")]
    UnexpectedImagePrompt(String),
    #[error("record `{id}`: file {path} does not exist")]
    MissingFile { id: String, path: PathBuf },
    #[error("record `{id}`: file {path} is not a readable raster image: {message}")]
    Undecodable {
        id: String,
        path: PathBuf,
        message: String,
    },
    #[error("split ratio must be positive on both sides, got {train}:{test}")]
    InvalidRatio { train: u32, test: u32 },
}

/// Generation scenario of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subset {
    T2I,
    I2I,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subset::T2I => f.write_str("T2I"),
            Subset::I2I => f.write_str("I2I"),
        }
    }
}

/// One generated image with its prompts and provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AigiRecord {
    pub image_id: String,
    pub image_path: PathBuf,
    pub generator: String,
    pub category: String,
    pub text_prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_prompt_path: Option<PathBuf>,
    pub subset: Subset,
}

impl AigiRecord {
    fn check_subset(&self) -> Result<(), CorpusError> {
        match (self.subset, &self.image_prompt_path) {
            (Subset::I2I, None) => Err(CorpusError::MissingImagePrompt(self.image_id.clone())),
            (Subset::T2I, Some(_)) => Err(CorpusError::UnexpectedImagePrompt(self.image_id.clone())),
            _ => Ok(()),
        }
    }

    pub fn has_reference(&self) -> bool {
        self.image_prompt_path.is_some()
    }
}

/// Validated, immutable set of records.
#[derive(Debug, Clone)]
pub struct Corpus {
    root: PathBuf,
    records: Vec<AigiRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from in-memory records, checking every invariant
    /// including that referenced files exist and carry a raster header.
    pub fn from_records(root: impl Into<PathBuf>, records: Vec<AigiRecord>) -> Result<Self, CorpusError> {
        let root = root.into();
        let mut index = HashMap::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if index.insert(rec.image_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(rec.image_id.clone()));
            }
            rec.check_subset()?;
            check_image(&rec.image_id, &resolve(&root, &rec.image_path))?;
            if let Some(p) = &rec.image_prompt_path {
                check_image(&rec.image_id, &resolve(&root, p))?;
            }
        }
        Ok(Self { root, records, index })
    }

    pub fn records(&self) -> &[AigiRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&AigiRecord> {
        self.index.get(image_id).map(|&i| &self.records[i])
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn image_path(&self, record: &AigiRecord) -> PathBuf {
        resolve(&self.root, &record.image_path)
    }

    pub fn reference_path(&self, record: &AigiRecord) -> Option<PathBuf> {
        record.image_prompt_path.as_ref().map(|p| resolve(&self.root, p))
    }

    pub fn contains_subset(&self, subset: Subset) -> bool {
        self.records.iter().any(|r| r.subset == subset)
    }

    pub fn generators(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<_> = self.records.iter().map(|r| r.generator.clone()).collect();
        set.into_iter().collect()
    }
}

fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

fn check_image(id: &str, path: &Path) -> Result<(), CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::MissingFile {
            id: id.to_string(),
            path: path.to_path_buf(),
        });
    }
    image::image_dimensions(path).map_err(|e| CorpusError::Undecodable {
        id: id.to_string(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(())
}

/// Reads and validates a line-delimited manifest.
pub fn ingest(manifest_path: &Path) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(manifest_path).map_err(|source| CorpusError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: manifest_path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AigiRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Corpus::from_records(root, records)
}

pub fn write_manifest<W: Write>(mut out: W, records: &[AigiRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Train:test proportions, e.g. `3:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub test: u32,
}

impl SplitRatio {
    pub const THREE_TO_ONE: SplitRatio = SplitRatio { train: 3, test: 1 };

    pub fn new(train: u32, test: u32) -> Result<Self, CorpusError> {
        if train == 0 || test == 0 {
            return Err(CorpusError::InvalidRatio { train, test });
        }
        Ok(Self { train, test })
    }

    /// Test images for a group of `n`: `floor(n · test / (train + test))`.
    pub fn test_count(&self, n: usize) -> usize {
        n * self.test as usize / (self.train + self.test) as usize
    }
}

impl std::str::FromStr for SplitRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected TRAIN:TEST, got `{s}`"))?;
        let train = a.trim().parse().map_err(|e| format!("{e}"))?;
        let test = b.trim().parse().map_err(|e| format!("{e}"))?;
        SplitRatio::new(train, test).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub image_id: String,
    pub fold: Fold,
}

/// Splits every (generator, category) group independently. Output follows
/// corpus order; the result is a pure function of its arguments.
pub fn stratified_split(corpus: &Corpus, ratio: SplitRatio, seed: u64) -> Result<Vec<SplitAssignment>, CorpusError> {
    SplitRatio::new(ratio.train, ratio.test)?;

    let mut groups: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for r in corpus.records() {
        groups
            .entry((r.generator.as_str(), r.category.as_str()))
            .or_default()
            .push(r.image_id.as_str());
    }

    let mut test_ids = HashSet::new();
    for ((generator, category), mut ids) in groups {
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[
            &seed.to_le_bytes(),
            generator.as_bytes(),
            category.as_bytes(),
        ]));
        ids.shuffle(&mut rng);
        let n_test = ratio.test_count(ids.len());
        test_ids.extend(ids.into_iter().take(n_test));
    }

    Ok(corpus
        .records()
        .iter()
        .map(|r| SplitAssignment {
            image_id: r.image_id.clone(),
            fold: if test_ids.contains(r.image_id.as_str()) {
                Fold::Test
            } else {
                Fold::Train
            },
        })
        .collect())
}

pub fn write_split<W: Write>(mut out: W, split: &[SplitAssignment]) -> std::io::Result<()> {
    for a in split {
        serde_json::to_writer(&mut out, a)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn load_split(path: &Path) -> std::io::Result<Vec<SplitAssignment>> {
    let mut out = Vec::new();
    for line in BufReader::new(std::fs::File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Image ids of one fold, in split order.
pub fn fold_ids(split: &[SplitAssignment], fold: Fold) -> Vec<String> {
    split
        .iter()
        .filter(|a| a.fold == fold)
        .map(|a| a.image_id.clone())
        .collect()
}

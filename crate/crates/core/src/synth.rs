//! Small synthetic databases for examples, tests, and smoke runs.
//!
//! Each image is a tinted stripe pattern whose brightness, contrast, and hue
//! are drawn per image. The latent quality, authenticity, and
//! correspondence scores are fixed functions of those three knobs, so a
//! model that can read global image statistics can learn them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{write_manifest, AigiRecord, Corpus, CorpusError, Subset};
use crate::hashing::seed_from_parts;
use crate::subjective::{compute_mos, Dimension, MosLabel, RatingEvent, Score};

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub generators: Vec<String>,
    pub categories: Vec<String>,
    pub per_group: usize,
    /// Fraction of each group generated image-to-image, rounded down.
    pub i2i_fraction: f64,
    pub side: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// 2 generators × 4 categories × 4 images, half of each group I2I.
    fn default() -> Self {
        Self {
            generators: vec!["gen-a".into(), "gen-b".into()],
            categories: ["people", "animals", "scenery", "objects"].map(String::from).into(),
            per_group: 4,
            i2i_fraction: 0.5,
            side: 64,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn len(&self) -> usize {
        self.generators.len() * self.categories.len() * self.per_group
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Only text-to-image records.
    pub fn t2i_only(mut self) -> Self {
        self.i2i_fraction = 0.0;
        self
    }

    /// Only image-to-image records.
    pub fn i2i_only(mut self) -> Self {
        self.i2i_fraction = 1.0;
        self
    }
}

/// The drawn knobs of one image, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knobs {
    pub brightness: f64,
    pub contrast: f64,
    pub hue: f64,
}

impl Knobs {
    /// Latent score of one dimension, on the 0.01 grid in `[0, 5]`.
    pub fn latent(&self, dimension: Dimension) -> f64 {
        let raw = match dimension {
            Dimension::Quality => 0.5 + 4.0 * self.brightness,
            Dimension::Authenticity => 1.0 + 3.5 * self.contrast,
            Dimension::Correspondence => 0.8 + 3.8 * self.hue,
        };
        (raw.clamp(0.0, 5.0) * 100.0).round() / 100.0
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub manifest: PathBuf,
    pub knobs: BTreeMap<String, Knobs>,
}

impl SynthCorpus {
    pub fn latent(&self, image_id: &str, dimension: Dimension) -> Option<f64> {
        self.knobs.get(image_id).map(|k| k.latent(dimension))
    }

    /// Noise-free labels: every image scored at its latent value.
    pub fn labels(&self) -> Vec<MosLabel> {
        let mut out = Vec::with_capacity(self.knobs.len() * 3);
        for (id, k) in &self.knobs {
            for dim in Dimension::ALL {
                let v = k.latent(dim);
                let ratings = [("synth-a".to_string(), v), ("synth-b".to_string(), v)];
                out.push(compute_mos(id, dim, &ratings).expect("two ratings always reduce"));
            }
        }
        out
    }

    /// One event per (evaluator, image) with Gaussian rating noise of
    /// standard deviation `noise`, clamped and rounded onto the score grid.
    pub fn rating_events(&self, evaluators: usize, noise: f64, seed: u64) -> Vec<RatingEvent> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[b"synth-ratings", &seed.to_le_bytes()]));
        let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
        let mut events = Vec::with_capacity(evaluators * self.knobs.len());
        for e in 0..evaluators {
            for (i, (id, k)) in self.knobs.iter().enumerate() {
                let mut draw = |dim| {
                    let v = (k.latent(dim) + normal.sample(&mut rng)).clamp(0.0, 5.0);
                    Score::from_centis((v * 100.0).round() as u16).expect("clamped into range")
                };
                events.push(RatingEvent {
                    image_id: id.clone(),
                    evaluator_id: format!("e{:02}", e + 1),
                    stage: 0,
                    quality: draw(Dimension::Quality),
                    authenticity: draw(Dimension::Authenticity),
                    correspondence: draw(Dimension::Correspondence),
                    timestamp_ms: 1_700_000_000_000 + (e * self.knobs.len() + i) as u64,
                });
            }
        }
        events
    }
}

/// Additive tone model: a grey level set by brightness, a top-to-bottom
/// ramp set by contrast, a colour offset set by hue, and a faint
/// category-specific stripe texture.
fn render(knobs: Knobs, category: usize, side: u32, transpose: bool) -> RgbImage {
    let tint = hue_to_rgb(knobs.hue);
    let level = 35.0 + 185.0 * knobs.brightness;
    let ramp = 60.0 * (knobs.contrast - 0.5);
    let period = 2 + category as u32 % 3;
    RgbImage::from_fn(side, side, |x, y| {
        let (u, v) = if transpose { (y, x) } else { (x, y) };
        let stripe = if ((u + v * (category as u32 % 2)) / period).is_multiple_of(2) { 6.0 } else { -6.0 };
        let height = y as f64 / (side - 1).max(1) as f64 - 0.5;
        let px = |c: f64| (level + 50.0 * (c - 0.5) + ramp * height + stripe).clamp(0.0, 255.0) as u8;
        Rgb([px(tint[0]), px(tint[1]), px(tint[2])])
    })
}

/// Warm-to-cool axis; monotone in `h` so the hue is recoverable.
fn hue_to_rgb(h: f64) -> [f64; 3] {
    [h, 0.5, 1.0 - h]
}

/// Writes images and `manifest.jsonl` under `dir` and ingests the result.
pub fn generate(spec: &SynthSpec, dir: &Path) -> Result<SynthCorpus, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let images = dir.join("images");
    let refs = dir.join("prompts");
    std::fs::create_dir_all(&images).map_err(io(&images))?;
    std::fs::create_dir_all(&refs).map_err(io(&refs))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[b"synth", &spec.seed.to_le_bytes()]));
    let i2i_per_group = (spec.per_group as f64 * spec.i2i_fraction.clamp(0.0, 1.0)).floor() as usize;
    let mut records = Vec::with_capacity(spec.len());
    let mut knobs = BTreeMap::new();
    for generator in &spec.generators {
        for (c, category) in spec.categories.iter().enumerate() {
            for k in 0..spec.per_group {
                let id = format!("{generator}-{category}-{k:02}");
                let drawn = Knobs {
                    brightness: rng.random(),
                    contrast: rng.random(),
                    hue: rng.random(),
                };
                let rel = PathBuf::from("images").join(format!("{id}.png"));
                save_png(&render(drawn, c, spec.side, false), &dir.join(&rel))?;
                let subset = if k < i2i_per_group { Subset::I2I } else { Subset::T2I };
                let image_prompt_path = if subset == Subset::I2I {
                    // the source image shares the tone of the output, not its layout
                    let rel = PathBuf::from("prompts").join(format!("{id}.png"));
                    save_png(&render(drawn, c, spec.side, true), &dir.join(&rel))?;
                    Some(rel)
                } else {
                    None
                };
                records.push(AigiRecord {
                    image_id: id.clone(),
                    image_path: rel,
                    generator: generator.clone(),
                    category: category.clone(),
                    text_prompt: format!("a {category} scene, tone {:.2}", drawn.hue),
                    image_prompt_path,
                    subset,
                });
                knobs.insert(id, drawn);
            }
        }
    }
    let manifest = dir.join("manifest.jsonl");
    let file = File::create(&manifest).map_err(io(&manifest))?;
    write_manifest(BufWriter::new(file), &records).map_err(io(&manifest))?;
    let corpus = crate::corpus::ingest(&manifest)?;
    Ok(SynthCorpus { corpus, manifest, knobs })
}

fn save_png(image: &RgbImage, path: &Path) -> Result<(), CorpusError> {
    image.save(path).map_err(|e| CorpusError::Undecodable {
        id: path.display().to_string(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let a = generate(&SynthSpec::default(), dir.path()).unwrap();
        assert_eq!(a.corpus.len(), 32);
        assert!(a.corpus.contains_subset(Subset::T2I) && a.corpus.contains_subset(Subset::I2I));
        let dir2 = tempfile::tempdir().unwrap();
        let b = generate(&SynthSpec::default(), dir2.path()).unwrap();
        assert_eq!(a.knobs, b.knobs);
        assert_eq!(a.labels().len(), 96);
    }

    #[test]
    fn noisy_events_stay_on_grid() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate(&SynthSpec { per_group: 1, ..SynthSpec::default() }, dir.path()).unwrap();
        let events = s.rating_events(5, 0.4, 1);
        assert_eq!(events.len(), 5 * 8);
        assert!(events.iter().all(|e| e.quality.value() <= 5.0));
    }
}

//! Stage planning, seeded sessions, and rating submission.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::store::RatingStore;
use super::RatingError;
use crate::corpus::{AigiRecord, Corpus};
use crate::hashing::seed_from_parts;
use crate::subjective::{RatingEvent, Score};

/// Service settings. Loaded from TOML; every key can be overridden by an
/// `AIGIQA_*` environment variable (see [`ServiceConfig::apply_env`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_stage_count")]
    pub stage_count: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_listen")]
    pub listen: String,
    pub corpus: PathBuf,
    pub store: PathBuf,
    /// Registered evaluator ids; the id doubles as the access token.
    #[serde(default)]
    pub evaluators: Vec<String>,
}

fn default_stage_count() -> u32 {
    20
}

fn default_listen() -> String {
    "127.0.0.1:8080".to_string()
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, RatingError> {
        toml::from_str(text).map_err(|e| RatingError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RatingError> {
        let text = std::fs::read_to_string(path).map_err(|e| RatingError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Overrides from `AIGIQA_STAGE_COUNT`, `AIGIQA_SEED`, `AIGIQA_LISTEN`,
    /// `AIGIQA_CORPUS`, `AIGIQA_STORE`, and `AIGIQA_EVALUATORS`
    /// (comma-separated).
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), RatingError> {
        let parse_err = |k: &str, v: &str| RatingError::Config(format!("{k}={v} is not a valid value"));
        if let Some(v) = get("AIGIQA_STAGE_COUNT") {
            self.stage_count = v.parse().map_err(|_| parse_err("AIGIQA_STAGE_COUNT", &v))?;
        }
        if let Some(v) = get("AIGIQA_SEED") {
            self.seed = v.parse().map_err(|_| parse_err("AIGIQA_SEED", &v))?;
        }
        if let Some(v) = get("AIGIQA_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = get("AIGIQA_CORPUS") {
            self.corpus = v.into();
        }
        if let Some(v) = get("AIGIQA_STORE") {
            self.store = v.into();
        }
        if let Some(v) = get("AIGIQA_EVALUATORS") {
            self.evaluators = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        Ok(())
    }
}

/// Splits the corpus into `stage_count` contiguous blocks after one global
/// seeded shuffle. Block sizes differ by at most one.
pub fn plan_stages(corpus: &Corpus, stage_count: u32, seed: u64) -> Result<Vec<Vec<String>>, RatingError> {
    let stages = stage_count as usize;
    if stages == 0 || stages > corpus.len() {
        return Err(RatingError::Config(format!(
            "stage_count {stage_count} must be in 1..={}",
            corpus.len()
        )));
    }
    let mut ids: Vec<String> = corpus.records().iter().map(|r| r.image_id.clone()).collect();
    ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[b"stages", &seed.to_le_bytes()]));
    ids.shuffle(&mut rng);
    let n = ids.len();
    Ok((0..stages).map(|i| ids[i * n / stages..(i + 1) * n / stages].to_vec()).collect())
}

/// Presentation order for one evaluator and stage.
pub fn session_order(stage_ids: &[String], evaluator_id: &str, stage: u32, seed: u64) -> Vec<String> {
    let mut order = stage_ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[
        b"session",
        evaluator_id.as_bytes(),
        &stage.to_le_bytes(),
        &seed.to_le_bytes(),
    ]));
    order.shuffle(&mut rng);
    order
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub evaluator_id: String,
    pub stage: u32,
    pub order: Vec<String>,
    pub cursor: usize,
}

impl Session {
    pub fn is_complete(&self) -> bool {
        self.cursor >= self.order.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBlob {
    pub mime: &'static str,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingItem {
    pub image_id: String,
    pub position: usize,
    pub stage_size: usize,
    pub text_prompt: String,
    pub image: ImageBlob,
    /// Image prompt, present exactly for I2I records.
    pub reference: Option<ImageBlob>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextItem {
    Item(RatingItem),
    Complete { rated: usize, stage_size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub image_id: String,
    pub cursor: usize,
    pub stage_size: usize,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageProgress {
    pub stage: u32,
    pub rated: usize,
    pub total: usize,
    pub complete: bool,
}

/// Raw slider values as submitted by a client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub quality: f64,
    pub authenticity: f64,
    pub correspondence: f64,
}

/// Shared rating state: corpus, stage plan, and the durable store.
#[derive(Debug)]
pub struct RatingService {
    corpus: Corpus,
    stages: Vec<Vec<String>>,
    seed: u64,
    evaluators: HashSet<String>,
    store: RwLock<RatingStore>,
}

impl RatingService {
    pub fn new(corpus: Corpus, config: &ServiceConfig) -> Result<Self, RatingError> {
        let stages = plan_stages(&corpus, config.stage_count, config.seed)?;
        let store = RatingStore::open(&config.store)?;
        Ok(Self {
            corpus,
            stages,
            seed: config.seed,
            evaluators: config.evaluators.iter().cloned().collect(),
            store: RwLock::new(store),
        })
    }

    /// Ingests the configured corpus and opens the store.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, RatingError> {
        let corpus = crate::corpus::ingest(&config.corpus).map_err(|e| RatingError::Config(e.to_string()))?;
        Self::new(corpus, config)
    }

    pub fn stage_count(&self) -> u32 {
        self.stages.len() as u32
    }

    pub fn stage_ids(&self, stage: u32) -> Result<&[String], RatingError> {
        if stage == 0 || stage as usize > self.stages.len() {
            return Err(RatingError::StageOutOfRange {
                stage,
                stage_count: self.stage_count(),
            });
        }
        Ok(&self.stages[stage as usize - 1])
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    fn check_evaluator(&self, evaluator_id: &str) -> Result<(), RatingError> {
        if self.evaluators.contains(evaluator_id) {
            Ok(())
        } else {
            Err(RatingError::UnknownEvaluator(evaluator_id.to_string()))
        }
    }

    fn read_store(&self) -> std::sync::RwLockReadGuard<'_, RatingStore> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Deterministic session; the cursor is recovered from the store.
    pub fn open_session(&self, evaluator_id: &str, stage: u32) -> Result<Session, RatingError> {
        self.check_evaluator(evaluator_id)?;
        let ids = self.stage_ids(stage)?;
        let order = session_order(ids, evaluator_id, stage, self.seed);
        let store = self.read_store();
        let cursor = order.iter().take_while(|id| store.contains(evaluator_id, id)).count();
        Ok(Session {
            evaluator_id: evaluator_id.to_string(),
            stage,
            order,
            cursor,
        })
    }

    pub fn next_item(&self, evaluator_id: &str, stage: u32) -> Result<NextItem, RatingError> {
        let session = self.open_session(evaluator_id, stage)?;
        let stage_size = session.order.len();
        if session.is_complete() {
            return Ok(NextItem::Complete {
                rated: session.cursor,
                stage_size,
            });
        }
        let image_id = &session.order[session.cursor];
        let record = self
            .corpus
            .get(image_id)
            .ok_or_else(|| RatingError::Store(format!("stage image `{image_id}` missing from corpus")))?;
        Ok(NextItem::Item(RatingItem {
            image_id: image_id.clone(),
            position: session.cursor,
            stage_size,
            text_prompt: record.text_prompt.clone(),
            image: read_blob(&self.corpus.image_path(record))?,
            reference: self.reference_blob(record)?,
        }))
    }

    fn reference_blob(&self, record: &AigiRecord) -> Result<Option<ImageBlob>, RatingError> {
        self.corpus.reference_path(record).map(|p| read_blob(&p)).transpose()
    }

    /// Validates and durably records one rating for the item at the cursor.
    pub fn submit_rating(
        &self,
        evaluator_id: &str,
        stage: u32,
        image_id: &str,
        scores: ScoreTriple,
    ) -> Result<Acknowledgment, RatingError> {
        self.check_evaluator(evaluator_id)?;
        let ids = self.stage_ids(stage)?;
        let quality = Score::try_from(scores.quality)?;
        let authenticity = Score::try_from(scores.authenticity)?;
        let correspondence = Score::try_from(scores.correspondence)?;

        let order = session_order(ids, evaluator_id, stage, self.seed);
        let mut store = self.store.write().unwrap_or_else(|e| e.into_inner());
        if store.contains(evaluator_id, image_id) {
            return Err(RatingError::Duplicate {
                evaluator_id: evaluator_id.to_string(),
                image_id: image_id.to_string(),
            });
        }
        let cursor = order.iter().take_while(|id| store.contains(evaluator_id, id)).count();
        let Some(expected) = order.get(cursor) else {
            return Err(RatingError::StageComplete { stage });
        };
        if expected != image_id {
            return Err(RatingError::OutOfOrder {
                expected: expected.clone(),
                got: image_id.to_string(),
            });
        }
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        store.append(RatingEvent {
            image_id: image_id.to_string(),
            evaluator_id: evaluator_id.to_string(),
            stage,
            quality,
            authenticity,
            correspondence,
            timestamp_ms,
        })?;
        Ok(Acknowledgment {
            image_id: image_id.to_string(),
            cursor: cursor + 1,
            stage_size: order.len(),
            timestamp_ms,
        })
    }

    pub fn progress(&self, evaluator_id: &str) -> Result<Vec<StageProgress>, RatingError> {
        self.check_evaluator(evaluator_id)?;
        let store = self.read_store();
        Ok(self
            .stages
            .iter()
            .enumerate()
            .map(|(i, ids)| {
                let rated = ids.iter().filter(|id| store.contains(evaluator_id, id)).count();
                StageProgress {
                    stage: i as u32 + 1,
                    rated,
                    total: ids.len(),
                    complete: rated == ids.len(),
                }
            })
            .collect())
    }

    /// Snapshot of every stored event.
    pub fn events(&self) -> Vec<RatingEvent> {
        self.read_store().events().to_vec()
    }
}

fn read_blob(path: &Path) -> Result<ImageBlob, RatingError> {
    let bytes = std::fs::read(path).map_err(|e| RatingError::Store(format!("{}: {e}", path.display())))?;
    let mime = match image::guess_format(&bytes) {
        Ok(image::ImageFormat::Jpeg) => "image/jpeg",
        Ok(image::ImageFormat::Png) => "image/png",
        _ => "application/octet-stream",
    };
    Ok(ImageBlob { mime, bytes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subjective::ScoreError;
    use crate::synth::{generate, SynthSpec};

    struct Fixture {
        _dir: tempfile::TempDir,
        config: ServiceConfig,
        corpus: Corpus,
    }

    fn fixture(stage_count: u32) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let synth = generate(&SynthSpec::default(), &dir.path().join("db")).unwrap();
        let config = ServiceConfig {
            stage_count,
            seed: 11,
            listen: default_listen(),
            corpus: synth.manifest.clone(),
            store: dir.path().join("ratings.jsonl"),
            evaluators: vec!["alice".into(), "bob".into()],
        };
        Fixture { _dir: dir, config, corpus: synth.corpus }
    }

    fn triple(q: f64) -> ScoreTriple {
        ScoreTriple { quality: q, authenticity: 2.80, correspondence: 4.00 }
    }

    #[test]
    fn stages_partition_the_corpus() {
        let f = fixture(5);
        let stages = plan_stages(&f.corpus, 5, 11).unwrap();
        let mut all: Vec<String> = stages.concat();
        assert!(stages.iter().all(|s| s.len() == 6 || s.len() == 7));
        all.sort();
        all.dedup();
        assert_eq!(all.len(), f.corpus.len());
        assert_eq!(stages, plan_stages(&f.corpus, 5, 11).unwrap());
        assert_ne!(stages, plan_stages(&f.corpus, 5, 12).unwrap());
    }

    #[test]
    fn session_order_is_seeded_per_evaluator() {
        let f = fixture(4);
        let svc = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        let a = svc.open_session("alice", 1).unwrap();
        assert_eq!(a, svc.open_session("alice", 1).unwrap());
        assert_eq!(a.cursor, 0);
        let b = svc.open_session("bob", 1).unwrap();
        let (mut x, mut y) = (a.order.clone(), b.order.clone());
        x.sort();
        y.sort();
        assert_eq!(x, y);
        assert_ne!(a.order, b.order);
    }

    #[test]
    fn stage_bounds_and_evaluators() {
        let f = fixture(20);
        let svc = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        assert!(matches!(svc.open_session("alice", 21), Err(RatingError::StageOutOfRange { stage: 21, stage_count: 20 })));
        assert!(matches!(svc.open_session("alice", 0), Err(RatingError::StageOutOfRange { .. })));
        assert!(matches!(svc.open_session("mallory", 1), Err(RatingError::UnknownEvaluator(_))));
    }

    #[test]
    fn cursor_follows_the_store() {
        let f = fixture(4);
        let svc = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        let order = svc.open_session("alice", 1).unwrap().order;
        for id in &order[..3] {
            svc.submit_rating("alice", 1, id, triple(3.25)).unwrap();
        }
        assert_eq!(svc.open_session("alice", 1).unwrap().cursor, 3);
        drop(svc);
        let reopened = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        assert_eq!(reopened.open_session("alice", 1).unwrap().cursor, 3);
        assert_eq!(reopened.open_session("bob", 1).unwrap().cursor, 0);
    }

    #[test]
    fn items_carry_references_exactly_for_i2i() {
        let f = fixture(1);
        let svc = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        let order = svc.open_session("alice", 1).unwrap().order;
        for id in &order {
            let NextItem::Item(item) = svc.next_item("alice", 1).unwrap() else {
                panic!("stage ended early")
            };
            assert_eq!(&item.image_id, id);
            assert_eq!(item.image.mime, "image/png");
            let record = f.corpus.get(id).unwrap();
            assert_eq!(item.reference.is_some(), record.has_reference());
            svc.submit_rating("alice", 1, id, triple(1.0)).unwrap();
        }
        assert_eq!(
            svc.next_item("alice", 1).unwrap(),
            NextItem::Complete { rated: order.len(), stage_size: order.len() }
        );
        assert!(matches!(
            svc.submit_rating("alice", 1, &order[0], triple(1.0)),
            Err(RatingError::Duplicate { .. })
        ));
    }

    #[test]
    fn submissions_are_validated() {
        let f = fixture(4);
        let svc = RatingService::new(f.corpus.clone(), &f.config).unwrap();
        let order = svc.open_session("alice", 2).unwrap().order;
        let ack = svc.submit_rating("alice", 2, &order[0], triple(3.25)).unwrap();
        assert_eq!((ack.cursor, ack.stage_size), (1, order.len()));
        let stored = &svc.events()[0];
        assert_eq!(
            (stored.quality.centis(), stored.authenticity.centis(), stored.correspondence.centis()),
            (325, 280, 400)
        );

        assert!(matches!(
            svc.submit_rating("alice", 2, &order[1], triple(5.005)),
            Err(RatingError::Score(ScoreError::OffGrid(_)))
        ));
        assert!(matches!(
            svc.submit_rating("alice", 2, &order[1], triple(-0.01)),
            Err(RatingError::Score(ScoreError::OutOfRange(_)))
        ));
        assert!(matches!(
            svc.submit_rating("alice", 2, &order[0], triple(2.0)),
            Err(RatingError::Duplicate { .. })
        ));
        assert!(matches!(
            svc.submit_rating("alice", 2, &order[2], triple(2.0)),
            Err(RatingError::OutOfOrder { .. })
        ));
        assert_eq!(svc.events().len(), 1);
        let progress = svc.progress("alice").unwrap();
        assert_eq!(progress[1].rated, 1);
        assert_eq!(progress.iter().map(|p| p.total).sum::<usize>(), f.corpus.len());
    }

    #[test]
    fn env_overrides_config() {
        let mut cfg = ServiceConfig::from_toml("corpus = \"m.jsonl\"\nstore = \"r.jsonl\"").unwrap();
        assert_eq!((cfg.stage_count, cfg.listen.as_str()), (20, "127.0.0.1:8080"));
        cfg.apply_env(|k| match k {
            "AIGIQA_STAGE_COUNT" => Some("4".into()),
            "AIGIQA_EVALUATORS" => Some("a, b,".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.stage_count, 4);
        assert_eq!(cfg.evaluators, vec!["a", "b"]);
    }
}

//! Seeded minibatch training of one assessor on one label dimension.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::data::ImageCache;
use super::evaluate::{predict_cached, truth_for};
use super::HarnessError;
use crate::assessor::checkpoint::{Checkpoint, CheckpointMeta};
use crate::assessor::{mse_loss, Adam, Assessor, FusionMode, Mode, ModelRegistry};
use crate::corpus::{fold_ids, Corpus, Fold, SplitAssignment, Subset};
use crate::hashing::seed_from_parts;
use crate::metrics::{correlations, Correlations};
use crate::subjective::MosLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss seen while training this epoch.
    pub running_loss: f64,
    /// Eval-mode loss over the whole train fold after the epoch.
    pub train_loss: f64,
    /// Test-fold correlations, absent when the test fold is empty.
    pub eval: Option<Correlations>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the highest test SRCC (the last one when there is
    /// no test fold).
    pub best: Checkpoint,
    pub last: Checkpoint,
    /// Eval-mode train-fold loss before the first update.
    pub initial_train_loss: f64,
    pub history: Vec<EpochRecord>,
    pub config_hash: String,
}

impl TrainOutcome {
    pub fn final_train_loss(&self) -> f64 {
        self.history.last().map_or(self.initial_train_loss, |r| r.train_loss)
    }
}

/// Fresh assessor for `config`, with seeded head initialization.
pub fn build_assessor(config: &TrainConfig, registry: &ModelRegistry) -> Result<Assessor, HarnessError> {
    config.validate()?;
    let backbone_config = if config.backbone == crate::assessor::StubBackbone::NAME {
        serde_json::to_value(config.stub).map_err(|e| HarnessError::Config(e.to_string()))?
    } else {
        serde_json::Value::Null
    };
    let backbone = registry.backbones.build(&config.backbone, &backbone_config)?;
    let text = if config.text_fusion {
        let encoder = registry.build_text_encoder(&config.text_encoder)?;
        if !config.freeze_text_encoder {
            return Err(HarnessError::Config(format!(
                "text encoder `{}` has no trainable parameters; set freeze_text_encoder = true",
                config.text_encoder.name
            )));
        }
        Some(encoder)
    } else {
        None
    };
    let head_seed = seed_from_parts(&[b"head", &config.seed.to_le_bytes()]);
    let mut assessor = Assessor::new(backbone, config.fusion, text, head_seed);
    if let Some(policy) = config.policy {
        assessor = assessor.with_policy(policy);
    }
    assessor.freeze_backbone(config.freeze_backbone);
    Ok(assessor)
}

/// Refuses full-reference training when any record lacks a reference.
pub fn check_fusion_scope(fusion: FusionMode, corpus: &Corpus) -> Result<(), HarnessError> {
    if fusion != FusionMode::Fr {
        return Ok(());
    }
    let t2i: Vec<&str> = corpus
        .records()
        .iter()
        .filter(|r| r.subset == Subset::T2I)
        .map(|r| r.image_id.as_str())
        .collect();
    match t2i.first() {
        None => Ok(()),
        Some(first) => Err(HarnessError::FrRequiresReferences {
            t2i_count: t2i.len(),
            first: first.to_string(),
        }),
    }
}

/// Trains on the train fold of `split`, evaluating on the test fold after
/// every epoch. Only labels of `config.dimension` are read.
pub fn train(
    config: &TrainConfig,
    corpus: &Corpus,
    split: &[SplitAssignment],
    labels: &[MosLabel],
    registry: &ModelRegistry,
) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    check_fusion_scope(config.fusion, corpus)?;
    let train_ids = fold_ids(split, Fold::Train);
    if train_ids.is_empty() {
        return Err(HarnessError::EmptyFold(Fold::Train));
    }
    let test_ids = fold_ids(split, Fold::Test);
    let train_truth = truth_for(labels, config.dimension, &train_ids)?;
    let test_truth = if test_ids.is_empty() {
        Vec::new()
    } else {
        truth_for(labels, config.dimension, &test_ids)?
    };

    let mut assessor = build_assessor(config, registry)?;
    let norm = assessor.backbone().spec().normalization;
    let train_cache = ImageCache::load(corpus, &train_ids, *assessor.policy(), norm)?;
    let test_cache = ImageCache::load(corpus, &test_ids, *assessor.policy(), norm)?;
    let config_hash = config.hash();
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_parts(&[b"train", &config.seed.to_le_bytes()]));
    let mut adam = Adam::new(config.adam());

    let fold_loss = |a: &Assessor| -> Result<f64, HarnessError> {
        let pred = predict_cached(a, &train_cache, &train_ids, config.eval_batch_size)?;
        Ok(mse_loss(&pred, &train_truth)?)
    };
    let initial_train_loss = fold_loss(&assessor)?;
    log::info!(
        "training {} on {} ({} train / {} test), initial loss {initial_train_loss:.5}",
        config.method_label(),
        config.dimension,
        train_ids.len(),
        test_ids.len()
    );

    let mut order: Vec<usize> = (0..train_ids.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, Checkpoint)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.train_batch_size) {
            let ids: Vec<String> = batch.iter().map(|&i| train_ids[i].clone()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| train_truth[i]).collect();
            let inputs = train_cache.inputs(&ids, Mode::Train, &mut rng)?;
            let (loss, grads) = assessor.loss_and_gradients(&inputs, &targets)?;
            adam.step(&mut assessor.parameter_groups_mut(), &grads.groups);
            total += loss * batch.len() as f64;
        }
        let running_loss = total / train_ids.len() as f64;
        let train_loss = fold_loss(&assessor)?;
        let eval = if test_ids.is_empty() {
            None
        } else {
            let pred = predict_cached(&assessor, &test_cache, &test_ids, config.eval_batch_size)?;
            match correlations(&test_truth, &pred) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("epoch {epoch}: test correlations undefined: {e}");
                    None
                }
            }
        };
        match &eval {
            Some(c) => log::info!(
                "epoch {epoch}: loss {running_loss:.5} (fold {train_loss:.5}), test srcc {:.4} plcc {:.4}",
                c.srcc,
                c.plcc
            ),
            None => log::info!("epoch {epoch}: loss {running_loss:.5} (fold {train_loss:.5})"),
        }
        let meta = CheckpointMeta {
            dimension: config.dimension,
            config_hash: config_hash.clone(),
            seed: config.seed,
            epoch,
            eval,
        };
        if let Some(c) = eval {
            if best.as_ref().is_none_or(|(s, _)| c.srcc > *s) {
                best = Some((c.srcc, Checkpoint::capture(&assessor, meta.clone())));
            }
        }
        history.push(EpochRecord {
            epoch,
            running_loss,
            train_loss,
            eval,
        });
    }

    let last = Checkpoint::capture(
        &assessor,
        CheckpointMeta {
            dimension: config.dimension,
            config_hash: config_hash.clone(),
            seed: config.seed,
            epoch: config.epochs,
            eval: history.last().and_then(|r| r.eval),
        },
    );
    let best = best.map_or_else(|| last.clone(), |(_, c)| c);
    Ok(TrainOutcome {
        best,
        last,
        initial_train_loss,
        history,
        config_hash,
    })
}

/// Eval-mode MSE of `assessor` over the `fold` of `split`.
pub fn fold_loss(
    assessor: &Assessor,
    corpus: &Corpus,
    split: &[SplitAssignment],
    fold: Fold,
    labels: &[MosLabel],
    dimension: crate::subjective::Dimension,
) -> Result<f64, HarnessError> {
    let ids = fold_ids(split, fold);
    if ids.is_empty() {
        return Err(HarnessError::EmptyFold(fold));
    }
    let truth = truth_for(labels, dimension, &ids)?;
    let cache = ImageCache::load(corpus, &ids, *assessor.policy(), assessor.backbone().spec().normalization)?;
    let pred = predict_cached(assessor, &cache, &ids, 20)?;
    Ok(mse_loss(&pred, &truth)?)
}

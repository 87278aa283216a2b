mod common;

use std::collections::BTreeMap;

use aigiqa::assessor::{FusionMode, ModelRegistry, StubConfig};
use aigiqa::corpus::{stratified_split, Fold, SplitAssignment, SplitRatio, Subset};
use aigiqa::harness::{
    case_study, evaluate, mos_summary, render_table, report, train, HarnessError, OraclePredictor, ScorePredictor, Scope,
    TrainConfig, TrainedModel,
};
use aigiqa::subjective::{compute_mos, Dimension, MosLabel};
use aigiqa::synth::SynthSpec;
use common::synth;

fn small(fusion: FusionMode, epochs: usize) -> TrainConfig {
    TrainConfig {
        fusion,
        epochs,
        stub: StubConfig { feature_dim: 32, input_size: 32, grid: 4, seed: 1, bias: 1.0 },
        ..TrainConfig::default()
    }
}

fn split_of(db: &aigiqa::synth::SynthCorpus) -> Vec<SplitAssignment> {
    stratified_split(&db.corpus, SplitRatio::THREE_TO_ONE, 5).unwrap()
}

#[test]
fn identical_seeds_give_identical_curves() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    let registry = ModelRegistry::default();
    let a = train(&small(FusionMode::Pr, 3), &db.corpus, &split, &labels, &registry).unwrap();
    let b = train(&small(FusionMode::Pr, 3), &db.corpus, &split, &labels, &registry).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.best, b.best);
    assert_eq!(a.history.len(), 3);
    assert!(a.history.iter().all(|r| r.eval.is_some()));
    assert!(a.final_train_loss() < a.initial_train_loss);

    let c = train(&TrainConfig { seed: 1, ..small(FusionMode::Pr, 3) }, &db.corpus, &split, &labels, &registry).unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn training_reads_only_its_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let quality_only: Vec<MosLabel> = db.labels().into_iter().filter(|l| l.dimension == Dimension::Quality).collect();
    let registry = ModelRegistry::default();
    train(&small(FusionMode::Nr, 1), &db.corpus, &split, &quality_only, &registry).unwrap();

    let cfg = TrainConfig { dimension: Dimension::Authenticity, ..small(FusionMode::Nr, 1) };
    let err = train(&cfg, &db.corpus, &split, &quality_only, &registry).unwrap_err();
    assert!(matches!(err, HarnessError::MissingLabels(ids) if ids.len() == 24));
}

#[test]
fn full_reference_needs_references_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = synth(&dir.path().join("mixed"), SynthSpec::default());
    let err = train(&small(FusionMode::Fr, 1), &mixed.corpus, &split_of(&mixed), &mixed.labels(), &ModelRegistry::default())
        .unwrap_err();
    assert!(matches!(err, HarnessError::FrRequiresReferences { t2i_count: 16, .. }), "{err}");

    let i2i = synth(&dir.path().join("i2i"), SynthSpec::default().i2i_only());
    train(&small(FusionMode::Fr, 1), &i2i.corpus, &split_of(&i2i), &i2i.labels(), &ModelRegistry::default()).unwrap();
}

#[test]
fn text_fusion_widens_the_head() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let cfg = TrainConfig { text_fusion: true, ..small(FusionMode::Pr, 1) };
    let out = train(&cfg, &db.corpus, &split_of(&db), &db.labels(), &ModelRegistry::default()).unwrap();
    assert_eq!(out.best.head.input_dim(), 32 + 768);
    let model = TrainedModel::new(out.best, &ModelRegistry::default(), "mem").unwrap();
    assert_eq!(model.method(), "PR+text");

    let frozen_off = TrainConfig { freeze_text_encoder: false, ..cfg };
    assert!(matches!(
        train(&frozen_off, &db.corpus, &split_of(&db), &db.labels(), &ModelRegistry::default()),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn evaluation_is_deterministic_and_survives_reload() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    let registry = ModelRegistry::default();
    let out = train(&small(FusionMode::Pr, 2), &db.corpus, &split, &labels, &registry).unwrap();
    let path = dir.path().join(small(FusionMode::Pr, 2).checkpoint_file_name());
    out.best.save(&path).unwrap();

    let model = TrainedModel::load(&path, &registry).unwrap();
    let first = evaluate(&model, Dimension::Quality, &db.corpus, &split, &labels).unwrap();
    let second = evaluate(&model, Dimension::Quality, &db.corpus, &split, &labels).unwrap();
    assert_eq!(first, second);
    assert_eq!((first.count, first.scope), (8, Scope::Full));
    assert_eq!(first.srcc, out.best.meta.eval.unwrap().srcc);

    let in_memory = TrainedModel::new(out.best.clone(), &registry, "mem").unwrap();
    let third = evaluate(&in_memory, Dimension::Quality, &db.corpus, &split, &labels).unwrap();
    assert_eq!((third.srcc, third.plcc), (first.srcc, first.plcc));

    assert!(matches!(
        evaluate(&model, Dimension::Authenticity, &db.corpus, &split, &labels),
        Err(HarnessError::DimensionMismatch { .. })
    ));
    let all_train: Vec<SplitAssignment> = split.iter().map(|a| SplitAssignment { fold: Fold::Train, ..a.clone() }).collect();
    assert!(matches!(
        evaluate(&model, Dimension::Quality, &db.corpus, &all_train, &labels),
        Err(HarnessError::EmptyFold(Fold::Test))
    ));
}

#[test]
fn oracle_predictor_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    for dim in Dimension::ALL {
        let e = evaluate(&OraclePredictor::new(&labels, dim), dim, &db.corpus, &split, &labels).unwrap();
        assert!((e.srcc - 1.0).abs() < 1e-12 && (e.plcc - 1.0).abs() < 1e-12);
    }
}

#[test]
fn subset_scopes_are_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default().t2i_only());
    let split = split_of(&db);
    let labels = db.labels();
    let e = evaluate(&OraclePredictor::new(&labels, Dimension::Quality), Dimension::Quality, &db.corpus, &split, &labels).unwrap();
    assert_eq!(e.scope, Scope::T2i);
    let reports = report(&[e]).unwrap();
    assert!(render_table(&reports[0]).starts_with("### T2IQA subset"));
}

#[test]
fn report_from_trained_models() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    let registry = ModelRegistry::default();
    let mut evals = Vec::new();
    for fusion in [FusionMode::Nr, FusionMode::Pr] {
        for dim in Dimension::ALL {
            let cfg = TrainConfig { dimension: dim, ..small(fusion, 1) };
            let out = train(&cfg, &db.corpus, &split, &labels, &registry).unwrap();
            let model = TrainedModel::new(out.best, &registry, cfg.checkpoint_file_name()).unwrap();
            evals.push(evaluate(&model, dim, &db.corpus, &split, &labels).unwrap());
        }
    }
    let reports = report(&evals).unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!((r.scope, r.rows.len(), r.metric_columns()), (Scope::Full, 2, 6));
    assert!(r.rows.iter().all(|row| row.cells.values().all(|c| c.checkpoint.starts_with("ckpt-") && c.split.starts_with("split-"))));
    let table = render_table(r);
    assert_eq!(table.lines().filter(|l| l.starts_with("| NR") || l.starts_with("| PR")).count(), 2);
}

#[test]
fn summary_matches_an_independent_count() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec { per_group: 8, ..SynthSpec::default() });
    let labels = db.labels();
    let s = mos_summary(&labels, &db.corpus, 10).unwrap();
    assert_eq!(s.dimensions.len(), 3);
    for d in &s.dimensions {
        assert_eq!(d.per_generator.len(), 2);
        assert_eq!(d.per_subset.len(), 2);
        let mut expected = [0usize; 10];
        let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for l in labels.iter().filter(|l| l.dimension == d.dimension) {
            // edges are k/2; a value v belongs to the last edge not above it
            let bin = (0..10).rev().find(|&k| l.mos >= k as f64 * 0.5).unwrap();
            expected[bin] += 1;
            let g = &db.corpus.get(&l.image_id).unwrap().generator;
            let e = sums.entry(g.clone()).or_default();
            e.0 += l.mos;
            e.1 += 1.0;
        }
        assert_eq!(d.global.counts, expected);
        for (g, (sum, n)) in sums {
            assert!((d.generator_means[&g] - sum / n).abs() < 1e-12);
        }
        let by_gen: usize = d.per_generator.values().map(|h| h.total()).sum();
        assert_eq!(by_gen, d.global.total());
    }
}

#[test]
fn constant_labels_fill_one_bin() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec { per_group: 1, ..SynthSpec::default() });
    let labels: Vec<MosLabel> = db
        .corpus
        .records()
        .iter()
        .map(|r| compute_mos(&r.image_id, Dimension::Quality, &[("a".into(), 3.0), ("b".into(), 3.0)]).unwrap())
        .collect();
    let s = mos_summary(&labels, &db.corpus, 10).unwrap();
    assert_eq!(s.dimensions.len(), 1);
    assert_eq!(s.dimensions[0].global.counts.iter().filter(|&&c| c > 0).count(), 1);
}

fn test_image(db: &aigiqa::synth::SynthCorpus, split: &[SplitAssignment], subset: Subset) -> String {
    split
        .iter()
        .find(|a| a.fold == Fold::Test && db.corpus.get(&a.image_id).unwrap().subset == subset)
        .unwrap()
        .image_id
        .clone()
}

fn trained_triple(
    fusion: FusionMode,
    db: &aigiqa::synth::SynthCorpus,
    split: &[SplitAssignment],
    labels: &[MosLabel],
) -> Vec<TrainedModel> {
    let registry = ModelRegistry::default();
    Dimension::ALL
        .iter()
        .map(|&dim| {
            let cfg = TrainConfig { dimension: dim, ..small(fusion, 1) };
            let out = train(&cfg, &db.corpus, split, labels, &registry).unwrap();
            TrainedModel::new(out.best, &registry, cfg.checkpoint_file_name()).unwrap()
        })
        .collect()
}

#[test]
fn case_study_t2i_nr_and_pr() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    let nr = trained_triple(FusionMode::Nr, &db, &split, &labels);
    let pr = trained_triple(FusionMode::Pr, &db, &split, &labels);
    let predictors: Vec<&dyn ScorePredictor> = nr.iter().chain(&pr).map(|m| m as &dyn ScorePredictor).collect();
    let id = test_image(&db, &split, Subset::T2I);
    let study = case_study(&predictors, &db.corpus, &split, &labels, &id).unwrap();
    assert_eq!(study.subset, Subset::T2I);
    assert_eq!(study.predictions.len(), 2);
    assert!(study.predictions.iter().all(|p| p.scores.len() == 3));
    assert_eq!(study.ground_truth.len(), 3);
}

#[test]
fn case_study_i2i_nr_and_fr() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default().i2i_only());
    let split = split_of(&db);
    let labels = db.labels();
    let nr = trained_triple(FusionMode::Nr, &db, &split, &labels);
    let fr = trained_triple(FusionMode::Fr, &db, &split, &labels);
    let predictors: Vec<&dyn ScorePredictor> = nr.iter().chain(&fr).map(|m| m as &dyn ScorePredictor).collect();
    let id = test_image(&db, &split, Subset::I2I);
    let study = case_study(&predictors, &db.corpus, &split, &labels, &id).unwrap();
    let methods: Vec<&str> = study.predictions.iter().map(|p| p.method.as_str()).collect();
    assert_eq!(methods, vec!["FR", "NR"]);
}

#[test]
fn case_study_oracle_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec::default());
    let split = split_of(&db);
    let labels = db.labels();
    let oracles: Vec<OraclePredictor> = Dimension::ALL.iter().map(|&d| OraclePredictor::new(&labels, d)).collect();
    let predictors: Vec<&dyn ScorePredictor> = oracles.iter().map(|o| o as &dyn ScorePredictor).collect();
    let id = test_image(&db, &split, Subset::I2I);
    let study = case_study(&predictors, &db.corpus, &split, &labels, &id).unwrap();
    assert_eq!(study.predictions[0].scores, study.ground_truth);

    assert!(matches!(
        case_study(&predictors, &db.corpus, &split, &labels, "nope"),
        Err(HarnessError::UnknownImage(_))
    ));
    let train_id = &split.iter().find(|a| a.fold == Fold::Train).unwrap().image_id;
    assert!(matches!(
        case_study(&predictors, &db.corpus, &split, &labels, train_id),
        Err(HarnessError::NotInTestFold(_))
    ));
}

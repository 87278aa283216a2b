//! Compares an NR and a PR assessor on one image-to-image test sample.
//!
//! ```text
//! cargo run --release --example case_study
//! ```

use aigiqa::assessor::{FusionMode, ModelRegistry};
use aigiqa::corpus::{fold_ids, stratified_split, Fold, SplitRatio, Subset};
use aigiqa::harness::{case_study, train, ScorePredictor, TrainConfig, TrainedModel};
use aigiqa::subjective::Dimension;
use aigiqa::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec::default(), dir.path())?;
    let split = stratified_split(&synth.corpus, SplitRatio::THREE_TO_ONE, 0)?;
    let labels = synth.labels();
    let registry = ModelRegistry::default();

    let mut models = Vec::new();
    for fusion in [FusionMode::Nr, FusionMode::Pr] {
        for dimension in Dimension::ALL {
            let config = TrainConfig { fusion, dimension, epochs: 20, ..TrainConfig::default() };
            let outcome = train(&config, &synth.corpus, &split, &labels, &registry)?;
            models.push(TrainedModel::new(outcome.best, &registry, config.checkpoint_file_name())?);
        }
    }
    let predictors: Vec<&dyn ScorePredictor> = models.iter().map(|m| m as &dyn ScorePredictor).collect();

    let image = fold_ids(&split, Fold::Test)
        .into_iter()
        .find(|id| synth.corpus.get(id).is_some_and(|r| r.subset == Subset::I2I))
        .ok_or("no image-to-image sample in the test fold")?;
    let study = case_study(&predictors, &synth.corpus, &split, &labels, &image)?;

    println!("{} ({}, {}): \"{}\"", study.image_id, study.subset, study.generator, study.text_prompt);
    print!("{:<8}", "truth");
    for v in study.ground_truth.values() {
        print!(" {v:>6.2}");
    }
    println!();
    for p in &study.predictions {
        print!("{:<8}", p.method);
        for v in p.scores.values() {
            print!(" {v:>6.2}");
        }
        println!();
    }
    Ok(())
}

//! Trains NR and PR assessors for every label dimension, evaluates them on
//! the test fold, and prints the benchmark table with the oracle as an
//! upper bound.
//!
//! ```text
//! cargo run --release --example benchmark_report -- [epochs]
//! ```

use aigiqa::assessor::{FusionMode, ModelRegistry};
use aigiqa::corpus::{stratified_split, SplitRatio};
use aigiqa::harness::{evaluate, render_table, report, train, OraclePredictor, TrainConfig, TrainedModel};
use aigiqa::subjective::Dimension;
use aigiqa::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec { per_group: 8, ..SynthSpec::default() }, dir.path())?;
    let split = stratified_split(&synth.corpus, SplitRatio::THREE_TO_ONE, 0)?;
    let labels = synth.labels();
    let registry = ModelRegistry::default();

    let mut evaluations = Vec::new();
    for fusion in [FusionMode::Nr, FusionMode::Pr] {
        for dimension in Dimension::ALL {
            let config = TrainConfig { fusion, dimension, epochs, ..TrainConfig::default() };
            let outcome = train(&config, &synth.corpus, &split, &labels, &registry)?;
            let model = TrainedModel::new(outcome.best, &registry, config.checkpoint_file_name())?;
            evaluations.push(evaluate(&model, dimension, &synth.corpus, &split, &labels)?);
        }
    }
    for dimension in Dimension::ALL {
        let oracle = OraclePredictor::new(&labels, dimension);
        evaluations.push(evaluate(&oracle, dimension, &synth.corpus, &split, &labels)?);
    }
    for table in report(&evaluations)? {
        println!("{}", render_table(&table));
    }
    Ok(())
}

//! Trains a partial-reference assessor on a synthetic database and saves
//! the best checkpoint.
//!
//! ```text
//! cargo run --release --example train_assessor -- [epochs]
//! ```

use aigiqa::assessor::ModelRegistry;
use aigiqa::corpus::{stratified_split, SplitRatio};
use aigiqa::harness::{train, TrainConfig};
use aigiqa::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);

    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec::default(), dir.path())?;
    let split = stratified_split(&synth.corpus, SplitRatio::THREE_TO_ONE, 0)?;
    let labels = synth.labels();

    let config = TrainConfig { epochs, ..TrainConfig::default() };
    let started = std::time::Instant::now();
    let outcome = train(&config, &synth.corpus, &split, &labels, &ModelRegistry::default())?;
    println!(
        "{} epochs in {:.1?}: train loss {:.4} -> {:.4}",
        outcome.history.len(),
        started.elapsed(),
        outcome.initial_train_loss,
        outcome.final_train_loss()
    );
    if let Some(eval) = outcome.best.meta.eval {
        println!("best epoch {}: test SRCC {:.4}, PLCC {:.4}", outcome.best.meta.epoch, eval.srcc, eval.plcc);
    }
    let path = dir.path().join(config.checkpoint_file_name());
    outcome.best.save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}

//! Thin command-line front end. Every subcommand reads files, calls one
//! library function, and writes a content-named artifact.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use aigiqa::assessor::ModelRegistry;
use aigiqa::corpus::{ingest, load_split, stratified_split, write_split, Corpus, SplitRatio, Subset};
use aigiqa::harness::evaluate::split_file_name;
use aigiqa::harness::{
    case_study, evaluate, mos_summary, render_table, report, train, write_reports, Evaluation, ScorePredictor,
    TrainConfig, TrainedModel,
};
use aigiqa::hashing::short_hash;
use aigiqa::rating::{read_events, RatingService, ServiceConfig};
use aigiqa::subjective::{compute_all_mos, load_labels, save_labels, MosLabel};
use clap::{Parser, Subcommand};
use log::info;

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "aigiqa", version, about = "Quality database and assessor tooling for AI-generated images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a manifest and print per-subset and per-generator counts.
    Ingest {
        manifest: PathBuf,
    },
    /// Write a stratified train/test split.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0, env = "AIGIQA_SPLIT_SEED")]
        seed: u64,
        #[arg(long, default_value = "3:1")]
        ratio: SplitRatio,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the rating service.
    Serve {
        #[arg(long, env = "AIGIQA_SERVICE_CONFIG")]
        config: PathBuf,
    },
    /// Reduce a rating store to MOS labels.
    ComputeMos {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Train one assessor and save its best and last checkpoints.
    Train {
        /// TOML training config; `AIGIQA_TRAIN_*` variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Score the test fold with one or more checkpoints; appends JSONL.
    Evaluate {
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "evaluations.jsonl")]
        out: PathBuf,
    },
    /// Build benchmark tables from evaluation records.
    Report {
        #[arg(required = true)]
        evaluations: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Histograms and per-generator means of MOS labels.
    MosSummary {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Predictions of several checkpoints for one test image.
    CaseStudy {
        #[arg(long)]
        image: String,
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse().command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { manifest } => {
            let corpus = ingest(&manifest)?;
            println!("{} images under {}", corpus.len(), corpus.root().display());
            for subset in [Subset::T2I, Subset::I2I] {
                let n = corpus.records().iter().filter(|r| r.subset == subset).count();
                println!("  {subset}: {n}");
            }
            for g in corpus.generators() {
                let n = corpus.records().iter().filter(|r| r.generator == g).count();
                println!("  {g}: {n}");
            }
        }
        Command::Split { manifest, seed, ratio, out_dir } => {
            let corpus = ingest(&manifest)?;
            let split = stratified_split(&corpus, ratio, seed)?;
            let path = out_dir.join(split_file_name(seed, &split));
            fs::create_dir_all(&out_dir)?;
            write_split(BufWriter::new(File::create(&path)?), &split)?;
            println!("{}", path.display());
        }
        Command::Serve { config } => serve(&config)?,
        Command::ComputeMos { events, out_dir } => {
            let labels = compute_all_mos(&read_events(&events)?)?;
            let path = out_dir.join(format!("mos-{}.jsonl", short_hash(&labels)));
            fs::create_dir_all(&out_dir)?;
            save_labels(&path, &labels)?;
            info!("{} labels", labels.len());
            println!("{}", path.display());
        }
        Command::Train { config, manifest, split, labels, out_dir } => {
            let cfg = match config {
                Some(p) => TrainConfig::load(&p)?,
                None => {
                    let mut cfg = TrainConfig::default();
                    cfg.apply_env(|k| std::env::var(k).ok())?;
                    cfg
                }
            };
            let (corpus, split, labels) = load_inputs(&manifest, &split, &labels)?;
            let outcome = train(&cfg, &corpus, &split, &labels, &ModelRegistry::default())?;
            fs::create_dir_all(&out_dir)?;
            let best = out_dir.join(cfg.checkpoint_file_name());
            let last = best.with_extension("last.json");
            outcome.best.save(&best)?;
            outcome.last.save(&last)?;
            let history = best.with_extension("history.json");
            fs::write(&history, serde_json::to_vec_pretty(&outcome.history)?)?;
            println!("{}\n{}\n{}", best.display(), last.display(), history.display());
        }
        Command::Evaluate { checkpoints, manifest, split, labels, out } => {
            let (corpus, split, labels) = load_inputs(&manifest, &split, &labels)?;
            let registry = ModelRegistry::default();
            let mut file = fs::OpenOptions::new().create(true).append(true).open(&out)?;
            for path in checkpoints {
                let model = TrainedModel::load(&path, &registry)?;
                let e = evaluate(&model, model.dimension(), &corpus, &split, &labels)?;
                println!("{} {} {} ({}): SRCC {:.4} PLCC {:.4}", e.method, e.backbone, e.dimension, e.scope, e.srcc, e.plcc);
                serde_json::to_writer(&mut file, &e)?;
                file.write_all(b"\n")?;
            }
            file.sync_all()?;
        }
        Command::Report { evaluations, out_dir } => {
            let mut evals = Vec::new();
            for path in evaluations {
                for line in BufReader::new(File::open(&path)?).lines() {
                    let line = line?;
                    if !line.trim().is_empty() {
                        evals.push(serde_json::from_str::<Evaluation>(&line)?);
                    }
                }
            }
            let reports = report(&evals)?;
            let stem = format!("report-{}", short_hash(&reports));
            fs::create_dir_all(&out_dir)?;
            write_reports(BufWriter::new(File::create(out_dir.join(format!("{stem}.jsonl")))?), &reports)?;
            let tables: Vec<String> = reports.iter().map(render_table).collect();
            let md = tables.join("\n");
            fs::write(out_dir.join(format!("{stem}.md")), &md)?;
            print!("{md}");
        }
        Command::MosSummary { labels, manifest, bins } => {
            let summary = mos_summary(&load_labels(&labels)?, &ingest(&manifest)?, bins)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::CaseStudy { image, checkpoints, manifest, split, labels } => {
            let (corpus, split, labels) = load_inputs(&manifest, &split, &labels)?;
            let registry = ModelRegistry::default();
            let models = checkpoints
                .iter()
                .map(|p| TrainedModel::load(p, &registry))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let predictors: Vec<&dyn ScorePredictor> = models.iter().map(|m| m as &dyn ScorePredictor).collect();
            let study = case_study(&predictors, &corpus, &split, &labels, &image)?;
            println!("{}", serde_json::to_string_pretty(&study)?);
        }
    }
    Ok(())
}

fn load_inputs(
    manifest: &Path,
    split: &Path,
    labels: &Path,
) -> Result<(Corpus, Vec<aigiqa::corpus::SplitAssignment>, Vec<MosLabel>)> {
    Ok((ingest(manifest)?, load_split(split)?, load_labels(labels)?))
}

#[tokio::main]
async fn serve(config: &Path) -> Result<()> {
    let config = ServiceConfig::load(config)?;
    let service = RatingService::from_config(&config)?;
    info!(
        "{} images in {} stages, {} evaluators",
        service.corpus().len(),
        service.stage_count(),
        config.evaluators.len()
    );
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, aigiqa::rating::http::router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

//! Training, evaluation, and reporting on top of the other modules.
//!
//! Each operation is a library function; the `aigiqa` binary and the
//! examples only wire files to them.

pub mod case_study;
pub mod config;
pub mod data;
pub mod evaluate;
pub mod report;
pub mod summary;
pub mod train;

pub use case_study::{case_study, CasePrediction, CaseStudy};
pub use config::{method_label, TrainConfig};
pub use data::ImageCache;
pub use evaluate::{evaluate, split_fingerprint, Evaluation, OraclePredictor, ScorePredictor, Scope, TrainedModel};
pub use report::{render_table, report, write_reports, BenchmarkReport, ReportCell, ReportRow};
pub use summary::{mos_summary, DimensionSummary, Histogram, MosSummary};
pub use train::{build_assessor, train, EpochRecord, TrainOutcome};

use thiserror::Error;

use crate::assessor::AssessorError;
use crate::corpus::{CorpusError, Fold};
use crate::metrics::MetricError;
use crate::rating::RatingError;
use crate::subjective::{Dimension, MosError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("image `{0}` is not in the corpus")]
    UnknownImage(String),
    #[error("full-reference mode needs a reference for every image, but the corpus holds {t2i_count} text-to-image records (first: `{first}`)")]
    FrRequiresReferences { t2i_count: usize, first: String },
    #[error("no MOS label for {} image(s), first `{}`", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    MissingLabels(Vec<String>),
    #[error("the {0:?} fold is empty")]
    EmptyFold(Fold),
    #[error("image `{0}` is not in the test fold")]
    NotInTestFold(String),
    #[error("requested dimension {requested} but the model was trained on {checkpoint}")]
    DimensionMismatch { requested: Dimension, checkpoint: Dimension },
    #[error("two results for {method}/{backbone} {dimension} on the {scope} scope; results from different runs are never merged")]
    DuplicateResult {
        method: String,
        backbone: String,
        dimension: Dimension,
        scope: String,
    },
    #[error("no evaluations to report")]
    NoEvaluations,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mos(#[from] MosError),
    #[error(transparent)]
    Assessor(#[from] AssessorError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

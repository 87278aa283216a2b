//! Rating collection: an append-only event store, deterministic per-evaluator
//! sessions, and an HTTP front end for browser clients.

use thiserror::Error;

use crate::subjective::ScoreError;

pub mod http;
pub mod service;
pub mod store;

pub use service::{
    plan_stages, session_order, Acknowledgment, NextItem, RatingItem, RatingService, ScoreTriple, ServiceConfig,
    Session, StageProgress,
};
pub use store::{read_events, RatingStore};

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("unknown evaluator `{0}`")]
    UnknownEvaluator(String),
    #[error("stage {stage} is outside 1..={stage_count}")]
    StageOutOfRange { stage: u32, stage_count: u32 },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("`{evaluator_id}` already rated `{image_id}`")]
    Duplicate { evaluator_id: String, image_id: String },
    #[error("expected a rating for `{expected}`, got `{got}`")]
    OutOfOrder { expected: String, got: String },
    #[error("stage {stage} is already complete")]
    StageComplete { stage: u32 },
    #[error("rating store: {0}")]
    Store(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl RatingError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            RatingError::UnknownEvaluator(_) => "unknown_evaluator",
            RatingError::StageOutOfRange { .. } => "stage_out_of_range",
            RatingError::Score(ScoreError::OutOfRange(_)) => "score_out_of_range",
            RatingError::Score(ScoreError::OffGrid(_)) => "score_off_grid",
            RatingError::Duplicate { .. } => "duplicate",
            RatingError::OutOfOrder { .. } => "out_of_order",
            RatingError::StageComplete { .. } => "stage_complete",
            RatingError::Store(_) => "store",
            RatingError::Config(_) => "config",
        }
    }
}

//! Tooling for a perceptual quality database of AI-generated images.
//!
//! - [`corpus`]: manifest ingestion, validation, stratified splits
//! - [`subjective`]: rating events to MOS labels with confidence-interval
//!   outlier rejection
//! - [`rating`]: durable rating store, seeded sessions, and the HTTP service
//! - [`assessor`]: NR / FR / PR quality predictors, training objective
//! - [`metrics`]: SRCC and PLCC
//! - [`harness`]: training, evaluation, reports, summaries, case studies
//!
//! Runnable walkthroughs for each capability live under `examples/`.

pub mod assessor;
pub mod corpus;
pub mod harness;
pub mod hashing;
pub mod metrics;
pub mod rating;
pub mod subjective;
pub mod synth;

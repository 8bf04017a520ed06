//! Next-item recommendation with self-attentive short-term intent and
//! Euclidean long-term preference.
//!
//! The pipeline: [`corpus`] turns a rating file into chronological
//! sequences and sliding-window training instances, [`model`] scores
//! user/item pairs by a blend of two squared distances, [`optim`] trains the
//! parameters with Adagrad on a pairwise hinge loss, and [`eval`] ranks the
//! held-out items. [`config`] and [`cli`] wrap the pipeline as the `attrec`
//! command.
//!
//! Runnable examples for each piece live in the crate's `examples/`
//! directory.

pub mod attention;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod optim;

pub use attention::{Aggregation, AttentionOutput, AttentionParams};
pub use config::RunConfig;
pub use corpus::{ColumnSpec, Delimiter, InteractionLog, RawEvent, Split, Target, TrainingInstance};
pub use error::{Error, Result};
pub use eval::{CandidatePolicy, EvalReport};
pub use model::{ModelConfig, ModelParams};
pub use numerics::{Matrix, Rng};
pub use optim::{TrainConfig, TrainOutcome};

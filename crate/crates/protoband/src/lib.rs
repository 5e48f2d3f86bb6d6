//! Budgeted hyperparameter search for few-shot image classifiers.
//!
//! The crate glues together a small stack: a search space over optimization
//! and augmentation hyperparameters ([`hpspace`]), a kernel density sampler
//! ([`kde`]), a successive-halving scheduler ([`scheduler`]), a tiny convnet
//! trained with hand-written gradients ([`tinynet`]), episode construction and
//! few-shot classifiers ([`episodes`]), procedural two-domain image data
//! ([`datagen`]), and a runtime that executes trials in process or across
//! TCP workers with a replayable event ledger ([`runtime`]). The [`engine`]
//! and [`report`] modules tie those into end-to-end runs and analysis
//! commands consumed by the CLI.

pub mod augment;
pub mod datagen;
pub mod engine;
pub mod episodes;
pub mod hpspace;
pub mod kde;
pub mod report;
pub mod runtime;
pub mod scheduler;
pub mod seed;
pub mod tinynet;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("search space: {0}")]
    Space(String),
    #[error("density model: {0}")]
    Kde(String),
    #[error("scheduler: {0}")]
    Scheduler(String),
    #[error("network: {0}")]
    Net(String),
    #[error("augmentation: {0}")]
    Augment(String),
    #[error("episodes: {0}")]
    Episodes(String),
    #[error("data generation: {0}")]
    Datagen(String),
    #[error("runtime: {0}")]
    Runtime(String),
    #[error("report: {0}")]
    Report(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

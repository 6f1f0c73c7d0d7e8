//! Std companion to `levyconc-core`: measure files, a thread-pool executor,
//! Monte Carlo verification of the bounds, report formats and the command line.

pub mod cli;
pub mod measure_file;
pub mod output;
pub mod parallel;
pub mod verify;

pub use levyconc_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] levyconc_core::error::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

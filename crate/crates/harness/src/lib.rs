//! Experiment harness for the multiscale learners: config-driven runs,
//! parameter sweeps, offline benchmarks, and the verification suite behind
//! the `multiscale` CLI.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod output;

/// Output format selector for `emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

/// Harness-level errors. Config problems exit with code 2, bound-check
/// failures with 1.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("run error: {0}")]
    Lib(#[from] multiscale::Error),
    #[error("run error: {0}")]
    Run(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

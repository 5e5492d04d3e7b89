//! Experiment runner for the QOCA workbench: TOML configs, depth sweeps and
//! the CSV/JSON artifacts they produce.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, Overrides, Plan};
pub use runner::{run_plan, RunOutcome, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Rejected before any computation started.
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

//! Experiment orchestration behind the `spnn` binary.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{build_config, load_config, parse_config, ExperimentConfig, WeightSource};
pub use experiments::{run_experiment, Artifacts, Experiment};
pub use table::{emit_csv, Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] spnn_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Writes every artifact into `<out>/<experiment>-<config hash>/` together
/// with the resolved configuration, and returns that directory.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    exp: Experiment,
    out: &Path,
    art: &Artifacts,
) -> Result<PathBuf, CliError> {
    let dir = out.join(format!("{}-{}", exp.name(), cfg.hash()));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e| CliError::Io { path, source: e }
    };
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, cfg.to_json() + "\n").map_err(io(&cfg_path))?;
    for (name, table) in &art.tables {
        emit_csv(table, &dir.join(format!("{name}.csv")))?;
    }
    for (name, text) in &art.json {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(dir)
}

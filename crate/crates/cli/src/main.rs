use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spnn_cli::{build_config, run_experiment, write_artifacts, CliError, Experiment, ExperimentConfig};

const OUT_ENV: &str = "SPNN_OUT_DIR";

/// Loss and coherent-crosstalk experiments for MZI-mesh photonic neural networks.
#[derive(Parser)]
#[command(name = "spnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config `out`, then $SPNN_OUT_DIR, then ./spnn-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. `--set n=16` or `--set xb_grid=[-30,-25]`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// IDX image file (with --labels) instead of the packaged digits.
    #[arg(long, global = true)]
    images: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Single-MZI insertion loss and crosstalk over theta.
    DeviceSweep,
    /// Per-port IL and crosstalk box statistics of one layer.
    LayerStats,
    /// Network IL, crosstalk and penalty over the N x M grid.
    NetworkStats,
    /// Per-port laser power penalty of random or file networks.
    PowerPenalty,
    /// Compile weights into Clements layouts (JSON).
    Compile,
    /// Train the reference model on the digit features.
    Train,
    /// Accuracy of the model on lossy hardware.
    Accuracy,
    /// Accuracy along each single-loss sweep.
    LossSweep,
    /// Accuracy over half-normal joint loss samples.
    JointSample,
    /// Largest losses keeping the accuracy drop bounded.
    Tolerance,
    /// Accuracy over a crosstalk (xB, xC) grid.
    XtalkGrid,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::DeviceSweep => Experiment::DeviceSweep,
            Command::LayerStats => Experiment::LayerStats,
            Command::NetworkStats => Experiment::NetworkStats,
            Command::PowerPenalty => Experiment::PowerPenalty,
            Command::Compile => Experiment::Compile,
            Command::Train => Experiment::Train,
            Command::Accuracy => Experiment::Accuracy,
            Command::LossSweep => Experiment::LossSweep,
            Command::JointSample => Experiment::JointSample,
            Command::Tolerance => Experiment::Tolerance,
            Command::XtalkGrid => Experiment::XtalkGrid,
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    for (key, path) in [("images", &cli.images), ("labels", &cli.labels)] {
        if let Some(p) = path {
            overrides.push(format!("{key}={}", serde_json::Value::String(p.display().to_string())));
        }
    }
    build_config(cli.config.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exp: Experiment = cli.command.into();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.dry_run {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spnn-out"));
    let result = run_experiment(exp, &cfg).and_then(|art| Ok((write_artifacts(&cfg, exp, &out, &art)?, art)));
    match result {
        Ok((dir, art)) => {
            println!("{} seed {} config {}", exp.name(), cfg.seed, cfg.hash());
            for line in &art.summary {
                println!("  {line}");
            }
            println!("  wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}\nresolved configuration:\n{}", cfg.to_json());
            ExitCode::FAILURE
        }
    }
}

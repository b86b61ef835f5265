//! `trajrecon`: simulate, clean, fit, and evaluate bus trajectory
//! reconstructions from sparse AVL samples.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RunConfig;

/// A configuration or usage mistake; exits with code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(
    name = "trajrecon",
    version,
    about = "Rebuild continuous bus trajectories from sparse AVL samples"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Comma-separated method names, overriding the configured list.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,

    /// Global seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Baseline cell override as METHOD-dataset, e.g. VCHIP-ME-dense.
    #[arg(long, global = true)]
    baseline: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a corridor corpus: raw trips CSV plus ground-truth sidecar.
    Synth,
    /// Clean raw trips and derive the sparse companion corpus.
    Preprocess {
        /// Input trips: sparse, dense, or a CSV path. Defaults to
        /// <out>/raw.csv.
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Fit configured methods to a corpus; dump models and grid
    /// trajectories.
    Fit {
        /// Input trips: sparse, dense, or a CSV path.
        #[arg(long, default_value = "dense")]
        dataset: String,
    },
    /// Run holdout, physics, and intersection suites; emit report tables.
    Evaluate {
        /// Datasets to evaluate: both, sparse, dense, or a CSV path.
        #[arg(long, default_value = "both")]
        dataset: String,
    },
    /// Time fits across trip lengths.
    Bench,
}

fn split_baseline(token: &str) -> anyhow::Result<(String, String)> {
    let mut parts = token.rsplitn(2, '-');
    let dataset = parts.next().unwrap_or_default();
    let method = parts.next().unwrap_or_default();
    if method.is_empty() || dataset.is_empty() {
        return Err(Usage(format!("baseline must be METHOD-dataset, got {token:?}")).into());
    }
    Ok((method.to_string(), dataset.to_string()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(methods) = cli.methods {
        cfg.methods = methods;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(baseline) = &cli.baseline {
        let (method, dataset) = split_baseline(baseline)?;
        cfg.baseline_method = method;
        cfg.baseline_dataset = dataset;
    }
    let methods = cfg.resolve()?;

    match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Preprocess { dataset } => commands::preprocess(&cfg, dataset.as_deref()),
        Command::Fit { dataset } => commands::fit_cmd(&cfg, &methods, &dataset),
        Command::Evaluate { dataset } => commands::evaluate(&cfg, &methods, &dataset),
        Command::Bench => commands::bench(&cfg, &methods),
    }
}

fn classify(err: &anyhow::Error) -> (i32, &'static str) {
    if let Some(e) = err.downcast_ref::<trajrecon::Error>() {
        if matches!(e, trajrecon::Error::UnknownMethod(_)) {
            return (2, "unknown-method");
        }
    }
    if err.downcast_ref::<Usage>().is_some() {
        return (2, "config");
    }
    (1, "runtime")
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let (code, kind) = classify(&err);
        let payload = serde_json::json!({
            "error": { "kind": kind, "message": format!("{err:#}") }
        });
        eprintln!("{payload}");
        std::process::exit(code);
    }
}

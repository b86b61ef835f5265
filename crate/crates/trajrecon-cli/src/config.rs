//! Run configuration: one TOML file carrying every knob explicitly, so a
//! saved config fully documents an experiment.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use trajrecon::evaluate::{EvalConfig, IntersectionSpec};
use trajrecon::fit::FitParams;
use trajrecon::preprocess::PreprocessConfig;
use trajrecon::synthetic::CorridorSpec;
use trajrecon::Method;

use crate::Usage;

/// Corpus generation knobs: the corridor itself plus the two sampling
/// densities. Trips are sampled at `dense_interval`; the sparse corpus is
/// derived from the cleaned dense one by seeded subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub trips: usize,
    pub dense_interval: f64,
    pub sparse_interval: f64,
    pub corridor: CorridorSpec,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            trips: 200,
            dense_interval: 5.96,
            sparse_interval: 16.49,
            corridor: CorridorSpec::default(),
        }
    }
}

/// Timing-sweep knobs for `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n_values: Vec<usize>,
    pub batch: usize,
    pub sample_dt: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { n_values: vec![100, 200, 400, 800], batch: 3, sample_dt: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub methods: Vec<String>,
    pub seed: u64,
    /// Where artifacts land. Accepted from config files but left out of
    /// resolved_config.toml: the experiment is defined by knobs and
    /// seeds, not by where a run happened to write.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub baseline_method: String,
    pub baseline_dataset: String,
    pub synth: SynthConfig,
    pub fit: FitParams,
    pub preprocess: PreprocessConfig,
    pub evaluate: EvalConfig,
    pub intersections: IntersectionSpec,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            seed: 0,
            out: PathBuf::from("out"),
            baseline_method: "VCHIP-ME".into(),
            baseline_dataset: "dense".into(),
            synth: SynthConfig::default(),
            fit: FitParams::default(),
            preprocess: PreprocessConfig::default(),
            evaluate: EvalConfig::default(),
            intersections: IntersectionSpec::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Usage(format!("bad config: {e}")))?;
        Ok(cfg)
    }

    /// Fills derived defaults and checks every field; returns the parsed
    /// method list. Call after flag overrides are applied.
    pub fn resolve(&mut self) -> anyhow::Result<Vec<Method>> {
        // The corridor generator owns all randomness downstream of the
        // global seed.
        self.synth.corridor.seed = self.seed;
        if self.intersections.signal_positions.is_empty() {
            self.intersections.signal_positions = self.synth.corridor.signal_positions.clone();
        }

        let methods = parse_methods(&self.methods)?;
        if methods.is_empty() {
            return Err(Usage("method list is empty".into()).into());
        }
        Method::from_str(&self.baseline_method)?;
        if self.synth.trips == 0 {
            return Err(Usage("synth.trips must be positive".into()).into());
        }
        for (name, value) in [
            ("synth.dense_interval", self.synth.dense_interval),
            ("synth.sparse_interval", self.synth.sparse_interval),
            ("bench.sample_dt", self.bench.sample_dt),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Usage(format!("{name} must be positive, got {value}")).into());
            }
        }
        if self.synth.sparse_interval < self.synth.dense_interval {
            return Err(Usage(format!(
                "synth.sparse_interval {} is denser than dense_interval {}",
                self.synth.sparse_interval, self.synth.dense_interval
            ))
            .into());
        }
        if self.bench.batch == 0 || self.bench.n_values.is_empty() {
            return Err(Usage("bench needs at least one n and a positive batch".into()).into());
        }
        if self.bench.n_values.iter().any(|&n| n < 4) {
            return Err(Usage("bench.n_values entries must be at least 4".into()).into());
        }

        self.synth.corridor.validate().map_err(usage)?;
        self.preprocess.validate().map_err(usage)?;
        self.evaluate.validate().map_err(usage)?;
        self.intersections.validate().map_err(usage)?;
        Ok(methods)
    }

    /// Writes the fully resolved configuration next to the run artifacts.
    pub fn write_resolved(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = toml::to_string_pretty(self)?;
        std::fs::write(dir.join("resolved_config.toml"), text)?;
        Ok(())
    }
}

fn usage(err: trajrecon::Error) -> anyhow::Error {
    Usage(err.to_string()).into()
}

pub fn parse_methods(names: &[String]) -> anyhow::Result<Vec<Method>> {
    let mut methods = Vec::with_capacity(names.len());
    for name in names {
        methods.push(Method::from_str(name)?);
    }
    Ok(methods)
}

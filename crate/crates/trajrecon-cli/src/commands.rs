//! The five subcommands. Every artifact except the timing tables is a
//! pure function of (config, seeds).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use serde::Serialize;
use trajrecon::evaluate::{benchmark_timing, evaluate_corpus};
use trajrecon::fit::fit;
use trajrecon::io;
use trajrecon::preprocess::{preprocess_trips, subsample};
use trajrecon::synthetic::{generate_trip, splitmix, CorridorSpec};
use trajrecon::{Method, ObservationSeries, TrajectoryModel};

use crate::config::RunConfig;
use crate::Usage;

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

/// Maps a `--dataset` token to a CSV path: the literals name files in the
/// output directory, anything else is a path.
fn dataset_path(cfg: &RunConfig, token: &str) -> PathBuf {
    match token {
        "sparse" => cfg.out.join("sparse.csv"),
        "dense" => cfg.out.join("dense.csv"),
        other => PathBuf::from(other),
    }
}

fn dataset_name(token: &str) -> String {
    match token {
        "sparse" | "dense" => token.to_string(),
        other => Path::new(other)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| other.to_string()),
    }
}

fn read_dataset(path: &Path) -> anyhow::Result<Vec<ObservationSeries>> {
    let trips =
        io::read_trips(path).with_context(|| format!("reading trips from {}", path.display()))?;
    if trips.is_empty() {
        return Err(anyhow::anyhow!("{}: no trips", path.display()));
    }
    Ok(trips)
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let corridor =
        CorridorSpec { mean_sample_interval: cfg.synth.dense_interval, ..cfg.synth.corridor.clone() };
    corridor.validate().map_err(|e| Usage(e.to_string()))?;

    let mut truths = Vec::with_capacity(cfg.synth.trips);
    let mut trips = Vec::with_capacity(cfg.synth.trips);
    for trip_seed in 0..cfg.synth.trips as u64 {
        let (truth, series) = generate_trip(&corridor, trip_seed)?;
        truths.push(truth);
        trips.push(series);
    }

    std::fs::create_dir_all(&cfg.out)?;
    let trips_path = cfg.out.join("raw.csv");
    io::write_trips(&trips_path, &trips)?;
    announce(&trips_path);
    let truth_path = cfg.out.join("truth.json");
    io::write_truths(&truth_path, &truths)?;
    announce(&truth_path);
    cfg.write_resolved(&cfg.out)?;
    Ok(())
}

/// Derives the sparse companion of a cleaned trip. Trips already at or
/// below the target density pass through unchanged.
pub fn sparse_of(
    trip: &ObservationSeries,
    index: usize,
    target_interval: f64,
    seed: u64,
) -> anyhow::Result<ObservationSeries> {
    let span = trip.samples()[trip.len() - 1].t - trip.samples()[0].t;
    let native = span / (trip.len() - 1) as f64;
    if native >= target_interval {
        return Ok(trip.clone());
    }
    Ok(subsample(trip, target_interval, splitmix(seed ^ index as u64))?)
}

pub fn preprocess(cfg: &RunConfig, dataset: Option<&str>) -> anyhow::Result<()> {
    let input = match dataset {
        Some(token) => dataset_path(cfg, token),
        None => cfg.out.join("raw.csv"),
    };
    let raw = read_dataset(&input)?;
    let (clean, report) = preprocess_trips(&raw, &cfg.preprocess)?;

    let mut sparse = Vec::with_capacity(clean.len());
    for (i, trip) in clean.iter().enumerate() {
        sparse.push(sparse_of(trip, i, cfg.synth.sparse_interval, cfg.seed)?);
    }

    std::fs::create_dir_all(&cfg.out)?;
    let dense_path = cfg.out.join("dense.csv");
    io::write_trips(&dense_path, &clean)?;
    announce(&dense_path);
    let sparse_path = cfg.out.join("sparse.csv");
    io::write_trips(&sparse_path, &sparse)?;
    announce(&sparse_path);
    let report_path = cfg.out.join("preprocess_report.json");
    io::write_preprocess_report(&report_path, &report)?;
    announce(&report_path);
    cfg.write_resolved(&cfg.out)?;
    Ok(())
}

#[derive(Serialize)]
struct ModelDump<'a> {
    trip_id: &'a str,
    method: &'a str,
    model: &'a TrajectoryModel,
}

pub fn fit_cmd(cfg: &RunConfig, methods: &[Method], dataset: &str) -> anyhow::Result<()> {
    let trips = read_dataset(&dataset_path(cfg, dataset))?;
    let name = dataset_name(dataset);

    let mut fitted: Vec<(Method, &ObservationSeries, TrajectoryModel)> = Vec::new();
    for &method in methods {
        for trip in &trips {
            let model = fit(trip, method, &cfg.fit).with_context(|| {
                format!("fitting {} to trip {}", method.name(), trip.trip_id())
            })?;
            fitted.push((method, trip, model));
        }
    }

    std::fs::create_dir_all(&cfg.out)?;
    let models_path = cfg.out.join(format!("models_{name}.json"));
    let dumps: Vec<ModelDump> = fitted
        .iter()
        .map(|(m, trip, model)| ModelDump { trip_id: trip.trip_id(), method: m.name(), model })
        .collect();
    let file = std::io::BufWriter::new(std::fs::File::create(&models_path)?);
    serde_json::to_writer(file, &dumps)?;
    announce(&models_path);

    let grid_path = cfg.out.join(format!("trajectories_{name}.csv"));
    let mut writer = csv::Writer::from_path(&grid_path)?;
    writer.write_record(["method", "trip_id", "t", "x", "v", "a"])?;
    let dt = cfg.evaluate.grid_dt;
    for (method, trip, model) in &fitted {
        let (lo, hi) = model.domain();
        let mut t = lo;
        while t <= hi + 1e-9 {
            let p = model.eval(t.min(hi))?;
            writer.write_record([
                method.name(),
                trip.trip_id(),
                &t.min(hi).to_string(),
                &p.x.to_string(),
                &p.v.to_string(),
                &p.a.to_string(),
            ])?;
            t += dt;
        }
    }
    writer.flush()?;
    announce(&grid_path);
    cfg.write_resolved(&cfg.out)?;
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, methods: &[Method], dataset: &str) -> anyhow::Result<()> {
    let tokens: Vec<&str> = match dataset {
        "both" => vec!["sparse", "dense"],
        other => vec![other],
    };
    let named: Vec<(String, Vec<ObservationSeries>)> = tokens
        .iter()
        .map(|token| {
            Ok((dataset_name(token), read_dataset(&dataset_path(cfg, token))?))
        })
        .collect::<anyhow::Result<_>>()?;
    if !named.iter().any(|(name, _)| *name == cfg.baseline_dataset) {
        return Err(Usage(format!(
            "baseline dataset {:?} is not among the evaluated datasets ({:?})",
            cfg.baseline_dataset,
            named.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>()
        ))
        .into());
    }

    let datasets: Vec<(&str, &[ObservationSeries])> =
        named.iter().map(|(name, trips)| (name.as_str(), trips.as_slice())).collect();
    let baseline = Method::from_str(&cfg.baseline_method)?;
    let report = evaluate_corpus(
        &datasets,
        methods,
        &cfg.fit,
        &cfg.evaluate,
        &cfg.intersections,
        baseline,
        &cfg.baseline_dataset,
    )?;

    io::write_report(&cfg.out, &report)?;
    for name in
        ["fit_metrics.csv", "profile_metrics.csv", "intersection_metrics.csv", "timings.csv", "report.json"]
    {
        announce(&cfg.out.join(name));
    }
    cfg.write_resolved(&cfg.out)?;
    Ok(())
}

/// Deterministic fixture for timing: a strictly increasing trip with a
/// gently oscillating speed, n samples at a fixed cadence.
pub fn bench_series(n: usize, dt: f64) -> ObservationSeries {
    let ts: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| 12.0 + 8.0 * (t / 40.0).sin()).collect();
    let xs: Vec<f64> = ts.iter().map(|&t| 12.0 * t - 320.0 * (t / 40.0).cos() + 320.0).collect();
    ObservationSeries::from_txvs(format!("bench-{n}"), &ts, &xs, &vs)
        .expect("bench fixture is strictly increasing")
}

pub fn bench(cfg: &RunConfig, methods: &[Method]) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("bench.csv");
    let mut writer = csv::Writer::from_path(&path)?;
    writer.write_record(["method", "n", "mean_ms", "sd_ms"])?;
    for &n in &cfg.bench.n_values {
        let batch = vec![bench_series(n, cfg.bench.sample_dt); cfg.bench.batch];
        for &method in methods {
            let stats = benchmark_timing(|s| fit(s, method, &cfg.fit), &batch)?;
            writer.write_record([
                method.name(),
                &n.to_string(),
                &stats.mean_ms.to_string(),
                &stats.sd_ms.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    announce(&path);
    cfg.write_resolved(&cfg.out)?;
    Ok(())
}

//! Three-tier evaluation: holdout fit metrics, physical-profile checks,
//! and intersection-window operational metrics, plus corpus-level report
//! assembly.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit, FitParams};
use crate::model::{Method, TrajectoryModel};
use crate::series::{Observation, ObservationSeries};
use crate::synthetic::splitmix;

/// Position decreases larger than this count as monotonicity violations.
pub const MONOTONE_TOL: f64 = 1e-6;

/// Accelerations below this count as braking when averaging deceleration.
const BRAKE_THRESHOLD: f64 = -0.1;

/// Crossing times are bisected to this resolution in seconds.
const CROSSING_TOL: f64 = 1e-9;

fn time_grid(lo: f64, hi: f64, dt: f64) -> Vec<f64> {
    let steps = ((hi - lo) / dt).floor() as usize;
    let mut ts: Vec<f64> = (0..=steps).map(|i| (lo + i as f64 * dt).min(hi)).collect();
    if hi - *ts.last().unwrap() > 1e-9 {
        ts.push(hi);
    }
    ts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample standard deviation; one value has spread 0.
pub fn mean_sd(values: &[f64]) -> MeanSd {
    if values.is_empty() {
        return MeanSd { mean: 0.0, sd: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return MeanSd { mean, sd: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MeanSd { mean, sd: var.sqrt() }
}

fn sd_population(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Which samples are withheld from fitting. Endpoints always stay in the
/// fit set so held points never need extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub fit_indices: Vec<usize>,
    pub held_indices: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
}

pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(Error::BadParameter {
            name: "fraction",
            reason: format!("must lie in (0, 1), got {fraction}"),
        });
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::EmptyHoldout { n, fraction });
    }
    if n < 3 || k > n - 2 {
        return Err(Error::BadParameter {
            name: "fraction",
            reason: format!("holding {k} of {n} samples leaves no interior fit points"),
        });
    }
    let mut interior: Vec<usize> = (1..n - 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for slot in 0..k {
        let pick = rng.gen_range(slot..interior.len());
        interior.swap(slot, pick);
    }
    let mut held_indices = interior[..k].to_vec();
    held_indices.sort_unstable();
    let mut fit_indices = Vec::with_capacity(n - k);
    let mut held_cursor = 0;
    for i in 0..n {
        if held_cursor < held_indices.len() && held_indices[held_cursor] == i {
            held_cursor += 1;
        } else {
            fit_indices.push(i);
        }
    }
    Ok(HoldoutSplit { fit_indices, held_indices, fraction, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub rmse_pos: f64,
    pub mae_pos: f64,
    pub rmse_vel: Option<f64>,
    pub mae_vel: Option<f64>,
}

/// RMSE/MAE of the model at withheld samples. Velocity errors are
/// reported only when every held sample carries a recorded speed.
pub fn holdout_metrics(model: &TrajectoryModel, held: &[Observation]) -> Result<FitMetrics> {
    if held.is_empty() {
        return Err(Error::BadParameter { name: "held", reason: "no held samples".into() });
    }
    let n = held.len() as f64;
    let mut abs_pos = 0.0;
    let mut sq_pos = 0.0;
    let mut abs_vel = 0.0;
    let mut sq_vel = 0.0;
    let with_velocity = held.iter().all(|s| s.v.is_some());
    for s in held {
        let p = model.eval(s.t)?;
        let dx = p.x - s.x;
        abs_pos += dx.abs();
        sq_pos += dx * dx;
        if with_velocity {
            let dv = p.v - s.v.unwrap();
            abs_vel += dv.abs();
            sq_vel += dv * dv;
        }
    }
    Ok(FitMetrics {
        rmse_pos: (sq_pos / n).sqrt(),
        mae_pos: abs_pos / n,
        rmse_vel: with_velocity.then(|| (sq_vel / n).sqrt()),
        mae_vel: with_velocity.then_some(abs_vel / n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityMetrics {
    pub violation_rate: f64,
    pub is_monotone: bool,
}

/// Fraction of adjacent grid pairs where position falls by more than
/// `tol` feet.
pub fn monotonicity_metrics(
    model: &TrajectoryModel,
    grid_dt: f64,
    tol: f64,
) -> Result<MonotonicityMetrics> {
    let (lo, hi) = model.domain();
    let ts = time_grid(lo, hi, grid_dt);
    let mut violations = 0usize;
    let mut prev = model.eval(ts[0])?.x;
    for &t in &ts[1..] {
        let x = model.eval(t)?.x;
        if x < prev - tol {
            violations += 1;
        }
        prev = x;
    }
    let pairs = ts.len() - 1;
    let violation_rate = if pairs == 0 { 0.0 } else { violations as f64 / pairs as f64 };
    Ok(MonotonicityMetrics { violation_rate, is_monotone: violation_rate == 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelBounds {
    pub lo: f64,
    pub hi: f64,
}

impl AccelBounds {
    pub fn tight() -> Self {
        Self { lo: -5.79, hi: 4.26 }
    }

    pub fn loose() -> Self {
        Self { lo: -7.77, hi: 5.43 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo >= 0.0 || self.hi <= 0.0 {
            return Err(Error::BadParameter {
                name: "accel_bounds",
                reason: format!("need lo < 0 < hi, got ({}, {})", self.lo, self.hi),
            });
        }
        Ok(())
    }
}

/// Percent of grid samples whose acceleration lies within the bounds.
/// Grid points landing on a velocity breakpoint are skipped.
pub fn accel_adherence(
    model: &TrajectoryModel,
    bounds: &AccelBounds,
    grid_dt: f64,
) -> Result<f64> {
    bounds.validate()?;
    let (lo, hi) = model.domain();
    let breakpoints = model.velocity_breakpoints();
    let mut total = 0usize;
    let mut within = 0usize;
    for t in time_grid(lo, hi, grid_dt) {
        if breakpoints.iter().any(|&b| (t - b).abs() < 1e-9) {
            continue;
        }
        let a = model.eval(t)?.a;
        total += 1;
        if a >= bounds.lo && a <= bounds.hi {
            within += 1;
        }
    }
    if total == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * within as f64 / total as f64)
}

/// Among samples flagged stopped, percent whose reconstructed speed is at
/// or under `threshold`. `None` when the series has no flagged samples.
pub fn stop_consistency(
    model: &TrajectoryModel,
    series: &ObservationSeries,
    threshold: f64,
) -> Result<Option<f64>> {
    let flagged: Vec<&Observation> = series.samples().iter().filter(|s| s.stopped).collect();
    if flagged.is_empty() {
        return Ok(None);
    }
    let mut consistent = 0usize;
    for s in &flagged {
        if model.eval(s.t)?.v <= threshold {
            consistent += 1;
        }
    }
    Ok(Some(100.0 * consistent as f64 / flagged.len() as f64))
}

/// Signalized intersections to analyze: each window covers `window` feet
/// of route immediately upstream of a signal position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntersectionSpec {
    pub signal_positions: Vec<f64>,
    pub window: f64,
}

impl Default for IntersectionSpec {
    fn default() -> Self {
        Self { signal_positions: Vec::new(), window: 300.0 }
    }
}

impl IntersectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.window.is_finite() || self.window <= 0.0 {
            return Err(Error::BadParameter {
                name: "window",
                reason: format!("must be finite and positive, got {}", self.window),
            });
        }
        if self.signal_positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::BadParameter {
                name: "signal_positions",
                reason: "positions must be finite".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    /// Signal position this window belongs to, feet.
    pub position: f64,
    pub travel_time: f64,
    pub mean_speed: f64,
    pub speed_volatility: f64,
    pub deceleration: f64,
    /// True when the reconstruction backtracks inside the window, in which
    /// case entry/exit were taken as first crossings.
    pub non_monotone: bool,
}

/// First time the model's position reaches `level`, scanning a 1 s grid
/// and bisecting the bracketing pair. `None` when the level is never
/// reached; a start already past the level returns the domain start.
fn first_crossing(model: &TrajectoryModel, level: f64) -> Result<Option<f64>> {
    let (lo, hi) = model.domain();
    let mut prev_t = lo;
    let mut prev_x = model.eval(lo)?.x;
    if prev_x >= level {
        return Ok(Some(lo));
    }
    for t in time_grid(lo, hi, 1.0).into_iter().skip(1) {
        let x = model.eval(t)?.x;
        if x >= level {
            let mut a = prev_t;
            let mut b = t;
            while b - a > CROSSING_TOL {
                let mid = 0.5 * (a + b);
                if model.eval(mid)?.x >= level {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(Some(b));
        }
        prev_t = t;
        prev_x = x;
    }
    let _ = prev_x;
    Ok(None)
}

/// Travel time, speed, speed volatility, and braking intensity inside
/// each covered window. Windows the trajectory never fully traverses are
/// omitted; if none is covered the call fails.
pub fn intersection_metrics(
    model: &TrajectoryModel,
    spec: &IntersectionSpec,
) -> Result<Vec<WindowMetrics>> {
    spec.validate()?;
    let (tlo, _) = model.domain();
    let x_start = model.eval(tlo)?.x;
    let mut out = Vec::new();

    for &position in &spec.signal_positions {
        let entry_level = position - spec.window;
        if x_start > entry_level {
            continue;
        }
        let Some(entry) = first_crossing(model, entry_level)? else { continue };
        let Some(exit_raw) = first_crossing(model, position)? else { continue };
        let exit = exit_raw.max(entry);
        let travel_time = exit - entry;

        let ts = time_grid(entry, exit, 1.0);
        let mut speeds = Vec::with_capacity(ts.len());
        let mut braking = Vec::new();
        let mut non_monotone = false;
        let mut prev_x = f64::NEG_INFINITY;
        for &t in &ts {
            let p = model.eval(t)?;
            speeds.push(p.v);
            if p.a < BRAKE_THRESHOLD {
                braking.push(p.a.abs());
            }
            if p.x < prev_x - MONOTONE_TOL {
                non_monotone = true;
            }
            prev_x = p.x;
        }
        let deceleration = if braking.is_empty() {
            0.0
        } else {
            braking.iter().sum::<f64>() / braking.len() as f64
        };
        out.push(WindowMetrics {
            position,
            travel_time,
            mean_speed: spec.window / travel_time.max(CROSSING_TOL),
            speed_volatility: sd_population(&speeds),
            deceleration,
            non_monotone,
        });
    }

    if out.is_empty() {
        return Err(Error::BadParameter {
            name: "intersections",
            reason: "trajectory covers no intersection window".into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    pub value: f64,
    /// Pairs dropped because the baseline value was zero.
    pub excluded: usize,
}

/// Mean absolute percent error of `values` against `baseline`, pairwise.
pub fn mape(values: &[f64], baseline: &[f64]) -> Result<Mape> {
    if values.len() != baseline.len() {
        return Err(Error::BadParameter {
            name: "baseline",
            reason: format!("length mismatch: {} vs {}", values.len(), baseline.len()),
        });
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (&v, &b) in values.iter().zip(baseline) {
        if b.abs() < 1e-12 {
            excluded += 1;
            continue;
        }
        sum += ((v - b) / b).abs();
        used += 1;
    }
    let value = if used == 0 { 0.0 } else { 100.0 * sum / used as f64 };
    Ok(Mape { value, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub sd_ms: f64,
}

/// Wall-clock cost of fitting plus one 1 Hz grid evaluation, averaged
/// over the batch. The first trajectory is fitted once untimed to warm
/// caches.
pub fn benchmark_timing<F>(fit_fn: F, batch: &[ObservationSeries]) -> Result<TimingStats>
where
    F: Fn(&ObservationSeries) -> Result<TrajectoryModel>,
{
    if batch.is_empty() {
        return Err(Error::BadParameter { name: "batch", reason: "empty batch".into() });
    }
    let warm = fit_fn(&batch[0])?;
    std::hint::black_box(warm.eval(warm.domain().0)?);

    let mut times = Vec::with_capacity(batch.len());
    for series in batch {
        let start = Instant::now();
        let model = fit_fn(series)?;
        let (lo, hi) = model.domain();
        let mut sink = 0.0;
        for t in time_grid(lo, hi, 1.0) {
            sink += model.eval(t)?.x;
        }
        std::hint::black_box(sink);
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let stats = mean_sd(&times);
    Ok(TimingStats { mean_ms: stats.mean, sd_ms: stats.sd })
}

/// Knobs for corpus evaluation; defaults mirror the report conventions
/// used throughout (5% holdout, 1 s grid, 1e-6 ft tolerance, stop
/// thresholds 2/5/10 ft/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub holdout_fraction: f64,
    pub holdout_seed: u64,
    pub grid_dt: f64,
    pub monotone_tol: f64,
    pub tight_bounds: AccelBounds,
    pub loose_bounds: AccelBounds,
    pub stop_thresholds: (f64, f64, f64),
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.05,
            holdout_seed: 17,
            grid_dt: 1.0,
            monotone_tol: MONOTONE_TOL,
            tight_bounds: AccelBounds::tight(),
            loose_bounds: AccelBounds::loose(),
            stop_thresholds: (2.0, 5.0, 10.0),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.holdout_fraction.is_finite()
            || self.holdout_fraction <= 0.0
            || self.holdout_fraction >= 1.0
        {
            return Err(Error::BadParameter {
                name: "holdout_fraction",
                reason: format!("must lie in (0, 1), got {}", self.holdout_fraction),
            });
        }
        if !self.grid_dt.is_finite() || self.grid_dt <= 0.0 {
            return Err(Error::BadParameter {
                name: "grid_dt",
                reason: format!("must be finite and positive, got {}", self.grid_dt),
            });
        }
        if !self.monotone_tol.is_finite() || self.monotone_tol < 0.0 {
            return Err(Error::BadParameter {
                name: "monotone_tol",
                reason: format!("must be finite and nonnegative, got {}", self.monotone_tol),
            });
        }
        self.tight_bounds.validate()?;
        self.loose_bounds.validate()?;
        let (a, b, c) = self.stop_thresholds;
        if !(a > 0.0 && b >= a && c >= b) {
            return Err(Error::BadParameter {
                name: "stop_thresholds",
                reason: format!("need 0 < t1 <= t2 <= t3, got ({a}, {b}, {c})"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub method: String,
    pub dataset: String,
    pub trips: usize,
    pub skipped: usize,
    pub rmse_pos: MeanSd,
    pub mae_pos: MeanSd,
    pub rmse_vel: Option<MeanSd>,
    pub mae_vel: Option<MeanSd>,
    pub violation_rate: MeanSd,
    /// Share of trips whose whole reconstruction is monotone.
    pub mon_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub method: String,
    pub dataset: String,
    pub adherence_tight: MeanSd,
    pub adherence_loose: MeanSd,
    pub stop_2: Option<MeanSd>,
    pub stop_5: Option<MeanSd>,
    pub stop_10: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRow {
    pub method: String,
    pub dataset: String,
    /// Windows with backtracking reconstructions, across all trips.
    pub non_monotone_windows: usize,
    pub travel_time: MeanSd,
    pub mean_speed: MeanSd,
    pub speed_volatility: MeanSd,
    pub deceleration: MeanSd,
    pub mape_travel_time: Mape,
    pub mape_mean_speed: Mape,
    pub mape_speed_volatility: Mape,
    pub mape_deceleration: Mape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub dataset: String,
    pub comp_time_ms: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub baseline_method: String,
    pub baseline_dataset: String,
    pub fit: Vec<FitRow>,
    pub profile: Vec<ProfileRow>,
    pub intersections: Vec<IntersectionRow>,
    pub timings: Vec<TimingRow>,
}

/// Per-intersection ensemble means for the four window metrics, in signal
/// order, plus which signals had any coverage.
struct WindowAggregate {
    covered: Vec<bool>,
    travel_time: Vec<f64>,
    mean_speed: Vec<f64>,
    speed_volatility: Vec<f64>,
    deceleration: Vec<f64>,
}

struct CellOutcome {
    fit_metrics: Vec<FitMetrics>,
    violation_rates: Vec<f64>,
    monotone_trips: usize,
    tight: Vec<f64>,
    loose: Vec<f64>,
    stops: [Vec<f64>; 3],
    window_values: Vec<Vec<WindowMetrics>>,
    times_ms: Vec<f64>,
    trips: usize,
    skipped: usize,
}

fn evaluate_cell(
    trips: &[ObservationSeries],
    method: Method,
    params: &FitParams,
    cfg: &EvalConfig,
    intersections: &IntersectionSpec,
) -> CellOutcome {
    let mut out = CellOutcome {
        fit_metrics: Vec::new(),
        violation_rates: Vec::new(),
        monotone_trips: 0,
        tight: Vec::new(),
        loose: Vec::new(),
        stops: [Vec::new(), Vec::new(), Vec::new()],
        window_values: Vec::new(),
        times_ms: Vec::new(),
        trips: 0,
        skipped: 0,
    };

    for (idx, series) in trips.iter().enumerate() {
        let start = Instant::now();
        let Ok(model) = fit(series, method, params) else {
            out.skipped += 1;
            continue;
        };
        let (lo, hi) = model.domain();
        let mut sink = 0.0;
        for t in time_grid(lo, hi, 1.0) {
            sink += model.eval(t).map(|p| p.x).unwrap_or(0.0);
        }
        std::hint::black_box(sink);
        out.times_ms.push(start.elapsed().as_secs_f64() * 1e3);
        out.trips += 1;

        let trip_seed = splitmix(cfg.holdout_seed ^ splitmix(idx as u64));
        if let Ok(split) = holdout_split(series.len(), cfg.holdout_fraction, trip_seed) {
            let held: Vec<Observation> =
                split.held_indices.iter().map(|&i| series.samples()[i]).collect();
            if let Ok(fit_series) = series.subset(&split.fit_indices) {
                if let Ok(held_model) = fit(&fit_series, method, params) {
                    if let Ok(metrics) = holdout_metrics(&held_model, &held) {
                        out.fit_metrics.push(metrics);
                    }
                }
            }
        }

        if let Ok(m) = monotonicity_metrics(&model, cfg.grid_dt, cfg.monotone_tol) {
            out.violation_rates.push(m.violation_rate);
            if m.is_monotone {
                out.monotone_trips += 1;
            }
        }
        if let Ok(a) = accel_adherence(&model, &cfg.tight_bounds, cfg.grid_dt) {
            out.tight.push(a);
        }
        if let Ok(a) = accel_adherence(&model, &cfg.loose_bounds, cfg.grid_dt) {
            out.loose.push(a);
        }
        let thresholds = [cfg.stop_thresholds.0, cfg.stop_thresholds.1, cfg.stop_thresholds.2];
        for (slot, &threshold) in thresholds.iter().enumerate() {
            if let Ok(Some(pct)) = stop_consistency(&model, series, threshold) {
                out.stops[slot].push(pct);
            }
        }
        if let Ok(windows) = intersection_metrics(&model, intersections) {
            out.window_values.push(windows);
        }
    }
    out
}

fn aggregate_windows(cell: &CellOutcome, spec: &IntersectionSpec) -> (WindowAggregate, usize) {
    let n = spec.signal_positions.len();
    let mut per_signal: Vec<[Vec<f64>; 4]> = (0..n).map(|_| Default::default()).collect();
    let mut non_monotone = 0usize;
    for windows in &cell.window_values {
        for w in windows {
            let Some(slot) =
                spec.signal_positions.iter().position(|&p| p == w.position)
            else {
                continue;
            };
            per_signal[slot][0].push(w.travel_time);
            per_signal[slot][1].push(w.mean_speed);
            per_signal[slot][2].push(w.speed_volatility);
            per_signal[slot][3].push(w.deceleration);
            if w.non_monotone {
                non_monotone += 1;
            }
        }
    }
    let mut agg = WindowAggregate {
        covered: Vec::with_capacity(n),
        travel_time: Vec::with_capacity(n),
        mean_speed: Vec::with_capacity(n),
        speed_volatility: Vec::with_capacity(n),
        deceleration: Vec::with_capacity(n),
    };
    for slots in &per_signal {
        agg.covered.push(!slots[0].is_empty());
        agg.travel_time.push(mean_sd(&slots[0]).mean);
        agg.mean_speed.push(mean_sd(&slots[1]).mean);
        agg.speed_volatility.push(mean_sd(&slots[2]).mean);
        agg.deceleration.push(mean_sd(&slots[3]).mean);
    }
    (agg, non_monotone)
}

/// MAPE over signals covered by both the row and the baseline; the
/// exclusion count also absorbs zero-baseline signals.
fn window_mape(values: &WindowAggregate, baseline: &WindowAggregate) -> Result<[Mape; 4]> {
    let mut rows: [(Vec<f64>, Vec<f64>); 4] = Default::default();
    let mut uncovered = 0usize;
    for i in 0..values.covered.len() {
        if !(values.covered[i] && baseline.covered[i]) {
            uncovered += 1;
            continue;
        }
        rows[0].0.push(values.travel_time[i]);
        rows[0].1.push(baseline.travel_time[i]);
        rows[1].0.push(values.mean_speed[i]);
        rows[1].1.push(baseline.mean_speed[i]);
        rows[2].0.push(values.speed_volatility[i]);
        rows[2].1.push(baseline.speed_volatility[i]);
        rows[3].0.push(values.deceleration[i]);
        rows[3].1.push(baseline.deceleration[i]);
    }
    let mut out = [Mape { value: 0.0, excluded: 0 }; 4];
    for (slot, (v, b)) in rows.iter().enumerate() {
        let mut m = mape(v, b)?;
        m.excluded += uncovered;
        out[slot] = m;
    }
    Ok(out)
}

fn flat_window_values(cell: &CellOutcome) -> [Vec<f64>; 4] {
    let mut flat: [Vec<f64>; 4] = Default::default();
    for windows in &cell.window_values {
        for w in windows {
            flat[0].push(w.travel_time);
            flat[1].push(w.mean_speed);
            flat[2].push(w.speed_volatility);
            flat[3].push(w.deceleration);
        }
    }
    flat
}

/// Evaluates every (method, dataset) cell and assembles the three report
/// tables plus the timing table. `datasets` pairs a label with its trips.
pub fn evaluate_corpus(
    datasets: &[(&str, &[ObservationSeries])],
    methods: &[Method],
    params: &FitParams,
    cfg: &EvalConfig,
    intersections: &IntersectionSpec,
    baseline_method: Method,
    baseline_dataset: &str,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    intersections.validate()?;
    if !datasets.iter().any(|(name, _)| *name == baseline_dataset) {
        return Err(Error::BadParameter {
            name: "baseline_dataset",
            reason: format!("dataset {baseline_dataset} not among inputs"),
        });
    }

    let baseline_trips = datasets
        .iter()
        .find(|(name, _)| *name == baseline_dataset)
        .map(|(_, trips)| *trips)
        .unwrap();
    let baseline_cell =
        evaluate_cell(baseline_trips, baseline_method, params, cfg, intersections);
    let (baseline_agg, _) = aggregate_windows(&baseline_cell, intersections);

    let mut report = EvaluationReport {
        baseline_method: baseline_method.name().to_string(),
        baseline_dataset: baseline_dataset.to_string(),
        fit: Vec::new(),
        profile: Vec::new(),
        intersections: Vec::new(),
        timings: Vec::new(),
    };

    for &method in methods {
        for &(name, trips) in datasets {
            let cell = evaluate_cell(trips, method, params, cfg, intersections);
            let method_name = method.name().to_string();

            let rmse_pos: Vec<f64> = cell.fit_metrics.iter().map(|m| m.rmse_pos).collect();
            let mae_pos: Vec<f64> = cell.fit_metrics.iter().map(|m| m.mae_pos).collect();
            let rmse_vel: Vec<f64> =
                cell.fit_metrics.iter().filter_map(|m| m.rmse_vel).collect();
            let mae_vel: Vec<f64> = cell.fit_metrics.iter().filter_map(|m| m.mae_vel).collect();
            report.fit.push(FitRow {
                method: method_name.clone(),
                dataset: name.to_string(),
                trips: cell.trips,
                skipped: cell.skipped,
                rmse_pos: mean_sd(&rmse_pos),
                mae_pos: mean_sd(&mae_pos),
                rmse_vel: (!rmse_vel.is_empty()).then(|| mean_sd(&rmse_vel)),
                mae_vel: (!mae_vel.is_empty()).then(|| mean_sd(&mae_vel)),
                violation_rate: mean_sd(&cell.violation_rates),
                mon_success: if cell.violation_rates.is_empty() {
                    0.0
                } else {
                    cell.monotone_trips as f64 / cell.violation_rates.len() as f64
                },
            });

            report.profile.push(ProfileRow {
                method: method_name.clone(),
                dataset: name.to_string(),
                adherence_tight: mean_sd(&cell.tight),
                adherence_loose: mean_sd(&cell.loose),
                stop_2: (!cell.stops[0].is_empty()).then(|| mean_sd(&cell.stops[0])),
                stop_5: (!cell.stops[1].is_empty()).then(|| mean_sd(&cell.stops[1])),
                stop_10: (!cell.stops[2].is_empty()).then(|| mean_sd(&cell.stops[2])),
            });

            let (agg, non_monotone) = aggregate_windows(&cell, intersections);
            let mapes = window_mape(&agg, &baseline_agg)?;
            let flat = flat_window_values(&cell);
            report.intersections.push(IntersectionRow {
                method: method_name.clone(),
                dataset: name.to_string(),
                non_monotone_windows: non_monotone,
                travel_time: mean_sd(&flat[0]),
                mean_speed: mean_sd(&flat[1]),
                speed_volatility: mean_sd(&flat[2]),
                deceleration: mean_sd(&flat[3]),
                mape_travel_time: mapes[0],
                mape_mean_speed: mapes[1],
                mape_speed_volatility: mapes[2],
                mape_deceleration: mapes[3],
            });

            report.timings.push(TimingRow {
                method: method_name,
                dataset: name.to_string(),
                comp_time_ms: mean_sd(&cell.times_ms),
            });
        }
    }
    Ok(report)
}

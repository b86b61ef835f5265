//! Trip cleaning: completeness filtering, jump repair, endpoint trimming,
//! and density subsampling.
//!
//! The pipeline is filter -> repair -> re-filter -> trim -> length check.
//! Repair can remove points and thereby widen gaps, so completeness is
//! checked again afterwards; this makes the whole pipeline idempotent.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Observation, ObservationSeries};

/// A leading or trailing step of at most this displacement counts as
/// stationary when trimming trip endpoints.
const STATIONARY_TOL: f64 = 1.0;

/// Minimum samples a trip must retain to stay in the corpus.
const MIN_SAMPLES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Largest tolerated time gap between consecutive samples, seconds.
    pub max_time_gap: f64,
    /// Largest tolerated position gap between consecutive samples, feet.
    pub max_dist_gap: f64,
    /// Jump size that, combined with an implied speed over the cap, marks a
    /// point as an outlier, feet.
    pub max_jump: f64,
    /// Backward jumps beyond this are removed regardless of speed, feet.
    pub max_back_jump: f64,
    /// Implied-speed threshold for the jump rule, ft/s.
    pub implied_speed_cap: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            max_time_gap: 600.0,
            max_dist_gap: 5280.0,
            max_jump: 500.0,
            max_back_jump: 200.0,
            implied_speed_cap: 66.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 5] = [
            ("max_time_gap", self.max_time_gap),
            ("max_dist_gap", self.max_dist_gap),
            ("max_jump", self.max_jump),
            ("max_back_jump", self.max_back_jump),
            ("implied_speed_cap", self.implied_speed_cap),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::BadParameter {
                    name,
                    reason: format!("must be finite and positive, got {value}"),
                });
            }
        }
        if self.max_back_jump > self.max_jump {
            return Err(Error::BadParameter {
                name: "max_back_jump",
                reason: format!(
                    "backward threshold {} exceeds jump threshold {}",
                    self.max_back_jump, self.max_jump
                ),
            });
        }
        Ok(())
    }
}

/// Why a trip was dropped from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RejectReason {
    TimeGap { index: usize, gap: f64 },
    DistanceGap { index: usize, gap: f64 },
    TooShort { len: usize },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TimeGap { index, gap } => {
                write!(f, "time gap of {gap:.1} s before sample {index}")
            }
            Self::DistanceGap { index, gap } => {
                write!(f, "distance gap of {gap:.1} ft before sample {index}")
            }
            Self::TooShort { len } => write!(f, "only {len} samples after cleaning"),
        }
    }
}

/// Accepts a trip when no consecutive gap exceeds the configured limits.
pub fn filter_complete_trips(
    series: &ObservationSeries,
    cfg: &PreprocessConfig,
) -> std::result::Result<(), RejectReason> {
    let s = series.samples();
    for i in 1..s.len() {
        let dt = s[i].t - s[i - 1].t;
        if dt > cfg.max_time_gap {
            return Err(RejectReason::TimeGap { index: i, gap: dt });
        }
        let dx = (s[i].x - s[i - 1].x).abs();
        if dx > cfg.max_dist_gap {
            return Err(RejectReason::DistanceGap { index: i, gap: dx });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepairStats {
    pub removed_outliers: usize,
    pub adjusted_points: usize,
}

/// Removes jump outliers and raises the survivors to a nondecreasing
/// profile.
///
/// Three passes, each left to right against the last kept point: remove
/// points whose jump exceeds `max_jump` at an implied speed over the cap
/// (the two conditions together), remove backward jumps beyond
/// `max_back_jump` regardless of speed, then lift the remaining small
/// backward excursions to the running maximum.
pub fn repair_outliers(
    series: &ObservationSeries,
    cfg: &PreprocessConfig,
) -> Result<(ObservationSeries, RepairStats)> {
    let mut stats = RepairStats::default();

    let mut kept: Vec<Observation> = Vec::with_capacity(series.len());
    for &s in series.samples() {
        match kept.last() {
            None => kept.push(s),
            Some(last) => {
                let dx = s.x - last.x;
                let speed = dx.abs() / (s.t - last.t);
                if dx.abs() > cfg.max_jump && speed > cfg.implied_speed_cap {
                    stats.removed_outliers += 1;
                } else {
                    kept.push(s);
                }
            }
        }
    }

    let mut forward: Vec<Observation> = Vec::with_capacity(kept.len());
    for s in kept {
        match forward.last() {
            None => forward.push(s),
            Some(last) => {
                if last.x - s.x > cfg.max_back_jump {
                    stats.removed_outliers += 1;
                } else {
                    forward.push(s);
                }
            }
        }
    }

    let mut running_max = f64::NEG_INFINITY;
    for s in &mut forward {
        if s.x < running_max {
            s.x = running_max;
            stats.adjusted_points += 1;
        } else {
            running_max = s.x;
        }
    }

    if forward.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: forward.len() });
    }
    Ok((ObservationSeries::new(series.trip_id(), forward)?, stats))
}

/// Drops leading and trailing stationary runs, keeping the run point
/// nearest the moving part of the trip.
///
/// A run is consecutive steps of at most 1 ft each, so slow sub-foot creep
/// at the curb counts as stationary even if it accumulates.
pub fn trim_endpoints(series: &ObservationSeries) -> (ObservationSeries, usize, usize) {
    let s = series.samples();
    let n = s.len();

    let mut head = 0;
    while head + 1 < n && (s[head + 1].x - s[head].x).abs() <= STATIONARY_TOL {
        head += 1;
    }
    let mut tail = n - 1;
    while tail > head && (s[tail].x - s[tail - 1].x).abs() <= STATIONARY_TOL {
        tail -= 1;
    }

    if head == 0 && tail == n - 1 {
        return (series.clone(), 0, 0);
    }
    let kept: Vec<Observation> = s[head..=tail].to_vec();
    let trimmed_tail = n - 1 - tail;
    let out = ObservationSeries::new(series.trip_id(), kept)
        .expect("nonempty ordered subrange stays valid");
    (out, head, trimmed_tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedTrip {
    pub trip_id: String,
    pub reason: RejectReason,
}

/// Corpus-level accounting for one pipeline run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub trips_in: usize,
    pub trips_out: usize,
    pub removed_outliers: usize,
    pub adjusted_points: usize,
    pub trimmed_head: usize,
    pub trimmed_tail: usize,
    pub rejected_trips: Vec<RejectedTrip>,
}

/// Full cleaning pipeline for one trip.
pub fn preprocess_trip(
    series: &ObservationSeries,
    cfg: &PreprocessConfig,
) -> std::result::Result<(ObservationSeries, RepairStats, usize, usize), RejectReason> {
    filter_complete_trips(series, cfg)?;
    let (repaired, stats) = repair_outliers(series, cfg).map_err(|e| match e {
        Error::TooFewSamples { got, .. } => RejectReason::TooShort { len: got },
        _ => RejectReason::TooShort { len: 0 },
    })?;
    filter_complete_trips(&repaired, cfg)?;
    let (trimmed, head, tail) = trim_endpoints(&repaired);
    if trimmed.len() < MIN_SAMPLES {
        return Err(RejectReason::TooShort { len: trimmed.len() });
    }
    Ok((trimmed, stats, head, tail))
}

/// Cleans a corpus, dropping rejected trips and aggregating counts.
pub fn preprocess_trips(
    trips: &[ObservationSeries],
    cfg: &PreprocessConfig,
) -> Result<(Vec<ObservationSeries>, PreprocessReport)> {
    cfg.validate()?;
    let mut report = PreprocessReport { trips_in: trips.len(), ..Default::default() };
    let mut out = Vec::with_capacity(trips.len());
    for trip in trips {
        match preprocess_trip(trip, cfg) {
            Ok((cleaned, stats, head, tail)) => {
                report.removed_outliers += stats.removed_outliers;
                report.adjusted_points += stats.adjusted_points;
                report.trimmed_head += head;
                report.trimmed_tail += tail;
                out.push(cleaned);
            }
            Err(reason) => {
                report
                    .rejected_trips
                    .push(RejectedTrip { trip_id: trip.trip_id().to_string(), reason });
            }
        }
    }
    report.trips_out = out.len();
    Ok((out, report))
}

/// Number of failures before a success at probability `p`, plus one: the
/// index step of a thinning walk whose mean step is 1/p.
fn geometric_step(rng: &mut ChaCha8Rng, p: f64) -> usize {
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    1 + (u.ln() / (1.0 - p).ln()).floor() as usize
}

/// Thins a dense series so the mean retained interval hits
/// `target_mean_interval`, keeping both endpoints. Deterministic per seed.
///
/// The retained count is fixed at round(span/target) + 1, which pins the
/// mean interval exactly; a geometric-skip walk picks which interior
/// samples survive, mimicking irregular AVL cadence.
pub fn subsample(
    series: &ObservationSeries,
    target_mean_interval: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if !target_mean_interval.is_finite() || target_mean_interval <= 0.0 {
        return Err(Error::BadParameter {
            name: "target_mean_interval",
            reason: format!("must be finite and positive, got {target_mean_interval}"),
        });
    }
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let span = series.time_span();
    let native = span / (n - 1) as f64;
    if target_mean_interval < native * (1.0 - 1e-9) {
        return Err(Error::SubsampleTooDense { target: target_mean_interval, native });
    }
    if (target_mean_interval - native).abs() <= 1e-9 * native {
        return Ok(series.clone());
    }

    let m = ((span / target_mean_interval).round() as usize + 1).clamp(2, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = native / target_mean_interval;

    let mut mask = vec![false; n];
    mask[0] = true;
    mask[n - 1] = true;
    let mut count = 2;
    let mut idx = 0;
    loop {
        idx += geometric_step(&mut rng, p);
        if idx >= n - 1 {
            break;
        }
        mask[idx] = true;
        count += 1;
    }

    if n > 2 {
        while count > m {
            let i = rng.gen_range(1..n - 1);
            if mask[i] {
                mask[i] = false;
                count -= 1;
            }
        }
        while count < m {
            let i = rng.gen_range(1..n - 1);
            if !mask[i] {
                mask[i] = true;
                count += 1;
            }
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    series.subset(&keep)
}

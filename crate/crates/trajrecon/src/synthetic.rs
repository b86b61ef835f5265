//! Corridor simulator: exact piecewise-kinematic ground truth for a bus
//! running a signal-and-stop corridor, plus AVL-like noisy sampling of it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrajectoryModel;
use crate::series::{Observation, ObservationSeries};

/// True speeds below this count as standing still.
const ZERO_SPEED: f64 = 1e-12;

/// Reported speeds above this mark a stopped flag as inconsistent.
const FLAG_SPEED: f64 = 5.0;

const STREAM_TRUTH: u64 = 0;
const STREAM_SAMPLE: u64 = 1;

/// One SplitMix64 step; mixes seeds so nearby inputs land far apart.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, trip_seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(trip_seed ^ splitmix(stream))))
}

/// Synthetic corridor description. Distances in feet, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorridorSpec {
    pub route_length: f64,
    pub signal_positions: Vec<f64>,
    pub stop_positions: Vec<f64>,
    pub cruise_speed: f64,
    pub accel_max: f64,
    pub decel_max: f64,
    pub dwell_time_range: (f64, f64),
    pub signal_stop_probability: f64,
    pub noise_sigma_pos: f64,
    pub noise_sigma_vel: f64,
    pub flag_error_rate: f64,
    pub mean_sample_interval: f64,
    pub seed: u64,
}

fn evenly_spaced(count: usize, length: f64) -> Vec<f64> {
    (1..=count).map(|i| i as f64 * length / (count + 1) as f64).collect()
}

impl Default for CorridorSpec {
    fn default() -> Self {
        let route_length = 3.0 * 5280.0;
        Self {
            route_length,
            signal_positions: evenly_spaced(20, route_length),
            stop_positions: evenly_spaced(10, route_length),
            cruise_speed: 40.0,
            accel_max: 4.0,
            decel_max: 6.0,
            dwell_time_range: (10.0, 40.0),
            signal_stop_probability: 0.4,
            noise_sigma_pos: 10.0,
            noise_sigma_vel: 1.0,
            flag_error_rate: 0.2,
            mean_sample_interval: 16.49,
            seed: 0,
        }
    }
}

impl CorridorSpec {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 4] = [
            ("route_length", self.route_length),
            ("cruise_speed", self.cruise_speed),
            ("accel_max", self.accel_max),
            ("decel_max", self.decel_max),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::BadParameter {
                    name,
                    reason: format!("must be finite and positive, got {value}"),
                });
            }
        }
        let (lo, hi) = self.dwell_time_range;
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi < lo {
            return Err(Error::BadParameter {
                name: "dwell_time_range",
                reason: format!("need 0 <= lo <= hi, got ({lo}, {hi})"),
            });
        }
        for (name, value) in [
            ("signal_stop_probability", self.signal_stop_probability),
            ("flag_error_rate", self.flag_error_rate),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::BadParameter {
                    name,
                    reason: format!("must lie in [0, 1], got {value}"),
                });
            }
        }
        for (name, value) in [
            ("noise_sigma_pos", self.noise_sigma_pos),
            ("noise_sigma_vel", self.noise_sigma_vel),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::BadParameter {
                    name,
                    reason: format!("must be finite and nonnegative, got {value}"),
                });
            }
        }
        if !self.mean_sample_interval.is_finite() || self.mean_sample_interval < 1.0 {
            return Err(Error::BadParameter {
                name: "mean_sample_interval",
                reason: format!(
                    "sampling intervals have a 1 s floor, got mean {}",
                    self.mean_sample_interval
                ),
            });
        }
        for (name, list) in [
            ("signal_positions", &self.signal_positions),
            ("stop_positions", &self.stop_positions),
        ] {
            for w in list.windows(2) {
                if w[1] < w[0] {
                    return Err(Error::BadParameter {
                        name,
                        reason: "positions must be sorted".into(),
                    });
                }
            }
            if list.iter().any(|&p| !p.is_finite() || p < 0.0 || p > self.route_length) {
                return Err(Error::BadParameter {
                    name,
                    reason: "positions must lie within the route".into(),
                });
            }
        }
        Ok(())
    }
}

/// One constant-acceleration segment of the true trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicPiece {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub v0: f64,
    pub a: f64,
}

impl KinematicPiece {
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let dt = t - self.t0;
        let x = self.x0 + self.v0 * dt + 0.5 * self.a * dt * dt;
        let v = self.v0 + self.a * dt;
        (x, v, self.a)
    }
}

/// Exact simulated trajectory with its standstill intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub trip_seed: u64,
    pieces: Vec<KinematicPiece>,
    dwells: Vec<(f64, f64)>,
    signal_waits: Vec<(f64, f64)>,
}

impl GroundTruth {
    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].t0, self.pieces[self.pieces.len() - 1].t1)
    }

    pub fn duration(&self) -> f64 {
        let (lo, hi) = self.domain();
        hi - lo
    }

    pub fn pieces(&self) -> &[KinematicPiece] {
        &self.pieces
    }

    /// Bus-stop standstill intervals, as (start, end) times.
    pub fn dwell_intervals(&self) -> &[(f64, f64)] {
        &self.dwells
    }

    /// Red-signal standstill intervals, as (start, end) times.
    pub fn signal_wait_intervals(&self) -> &[(f64, f64)] {
        &self.signal_waits
    }

    /// (position, speed, acceleration) at `t`, clamped to the trip domain.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let idx = self.pieces.partition_point(|p| p.t1 < t).min(self.pieces.len() - 1);
        self.pieces[idx].eval(t)
    }
}

/// Simulates one trip: launch, trapezoidal runs between standstills, dwell,
/// repeat until the terminal stop. Stops closer than the braking envelope
/// just lower the attained peak speed; the generator never fails on
/// geometry.
pub fn generate_truth(spec: &CorridorSpec, trip_seed: u64) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, trip_seed, STREAM_TRUTH);

    // Red/green is drawn for every signal in position order, so the draw
    // sequence is independent of which signals end up red.
    let mut events: Vec<(f64, bool)> =
        self::red_signals(&mut rng, spec).into_iter().map(|p| (p, true)).collect();
    events.extend(spec.stop_positions.iter().map(|&p| (p, false)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    events.push((spec.route_length, false));
    let terminal = events.len() - 1;

    let mut pieces = Vec::new();
    let mut dwells = Vec::new();
    let mut signal_waits = Vec::new();
    let mut t = 0.0;
    let mut x = 0.0;

    for (idx, &(pos, is_signal)) in events.iter().enumerate() {
        let d = pos - x;
        if d > 1e-9 {
            let a = spec.accel_max;
            let b = spec.decel_max;
            let v_peak = (2.0 * d * a * b / (a + b)).sqrt().min(spec.cruise_speed);
            let t_acc = v_peak / a;
            let t_dec = v_peak / b;
            let d_ramp = 0.5 * v_peak * v_peak * (1.0 / a + 1.0 / b);

            pieces.push(KinematicPiece { t0: t, t1: t + t_acc, x0: x, v0: 0.0, a });
            t += t_acc;
            x += 0.5 * v_peak * v_peak / a;

            let d_cruise = d - d_ramp;
            if d_cruise > 1e-9 {
                let t_cruise = d_cruise / v_peak;
                pieces.push(KinematicPiece { t0: t, t1: t + t_cruise, x0: x, v0: v_peak, a: 0.0 });
                t += t_cruise;
                x += d_cruise;
            }

            pieces.push(KinematicPiece { t0: t, t1: t + t_dec, x0: x, v0: v_peak, a: -b });
            t += t_dec;
            x = pos;
        }
        if idx != terminal {
            let (lo, hi) = spec.dwell_time_range;
            let w = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            if w > 0.0 {
                pieces.push(KinematicPiece { t0: t, t1: t + w, x0: x, v0: 0.0, a: 0.0 });
                if is_signal {
                    signal_waits.push((t, t + w));
                } else {
                    dwells.push((t, t + w));
                }
                t += w;
            }
        }
    }

    if pieces.is_empty() {
        return Err(Error::BadParameter {
            name: "route_length",
            reason: "route produced no motion".into(),
        });
    }
    Ok(GroundTruth { trip_seed, pieces, dwells, signal_waits })
}

fn red_signals(rng: &mut ChaCha8Rng, spec: &CorridorSpec) -> Vec<f64> {
    spec.signal_positions
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(spec.signal_stop_probability))
        .collect()
}

fn truncated_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 3.0 {
            return z;
        }
    }
}

/// One inter-sample gap: 1 s floor plus an exponential tail targeting the
/// configured mean.
fn sample_gap(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let tail = mean - 1.0;
    if tail <= 0.0 {
        return 1.0;
    }
    let u: f64 = rng.gen();
    1.0 - tail * (1.0 - u).max(f64::MIN_POSITIVE).ln()
}

/// Samples the truth like an AVL feed: irregular cadence, truncated
/// Gaussian position and speed noise, and a stopped flag that is honest at
/// standstills but also raised spuriously on a configurable share of
/// moving samples.
pub fn sample_avl(truth: &GroundTruth, spec: &CorridorSpec) -> Result<ObservationSeries> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, truth.trip_seed, STREAM_SAMPLE);
    let (t_start, t_end) = truth.domain();

    let mut samples = Vec::new();
    let mut t = t_start;
    while t <= t_end {
        let (x, v, _) = truth.eval(t);
        let x_noisy = x + spec.noise_sigma_pos * truncated_normal(&mut rng);
        let v_noisy = (v + spec.noise_sigma_vel * truncated_normal(&mut rng)).max(0.0);
        samples.push(Observation {
            t,
            x: x_noisy,
            v: Some(v_noisy),
            stopped: v < ZERO_SPEED,
        });
        t += sample_gap(&mut rng, spec.mean_sample_interval);
    }

    if spec.flag_error_rate > 0.0 {
        let honest = samples.iter().filter(|s| s.stopped).count();
        let r = spec.flag_error_rate;
        let want = ((honest as f64) * r / (1.0 - r)).round() as usize;
        let mut candidates: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.stopped && s.v.unwrap_or(0.0) > FLAG_SPEED)
            .map(|(i, _)| i)
            .collect();
        let take = want.min(candidates.len());
        for slot in 0..take {
            let pick = rng.gen_range(slot..candidates.len());
            candidates.swap(slot, pick);
            samples[candidates[slot]].stopped = true;
        }
    }

    ObservationSeries::new(format!("synth-{}", truth.trip_seed), samples)
}

/// Convenience wrapper producing one trip's truth and its AVL samples.
pub fn generate_trip(
    spec: &CorridorSpec,
    trip_seed: u64,
) -> Result<(GroundTruth, ObservationSeries)> {
    let truth = generate_truth(spec, trip_seed)?;
    let samples = sample_avl(&truth, spec)?;
    Ok((truth, samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthErrors {
    pub rmse_pos: f64,
    pub rmse_vel: f64,
}

/// RMSE of a fitted model against the exact trajectory on a uniform grid
/// over the overlap of their domains.
pub fn truth_errors(
    model: &TrajectoryModel,
    truth: &GroundTruth,
    grid_dt: f64,
) -> Result<TruthErrors> {
    if !grid_dt.is_finite() || grid_dt <= 0.0 {
        return Err(Error::BadParameter {
            name: "grid_dt",
            reason: format!("must be finite and positive, got {grid_dt}"),
        });
    }
    let (mlo, mhi) = model.domain();
    let (tlo, thi) = truth.domain();
    let lo = mlo.max(tlo);
    let hi = mhi.min(thi);
    if hi <= lo {
        return Err(Error::BadParameter {
            name: "grid_dt",
            reason: "model and truth domains do not overlap".into(),
        });
    }

    let mut sum_pos = 0.0;
    let mut sum_vel = 0.0;
    let mut count = 0usize;
    let steps = ((hi - lo) / grid_dt).floor() as usize;
    for i in 0..=steps {
        let t = lo + i as f64 * grid_dt;
        let p = model.eval(t)?;
        let (x, v, _) = truth.eval(t);
        sum_pos += (p.x - x) * (p.x - x);
        sum_vel += (p.v - v) * (p.v - v);
        count += 1;
    }
    Ok(TruthErrors {
        rmse_pos: (sum_pos / count as f64).sqrt(),
        rmse_vel: (sum_vel / count as f64).sqrt(),
    })
}

//! Observed AVL samples for a single trip.
//!
//! Units are feet and seconds throughout. Velocity is optional per trip:
//! either every sample carries one or none does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One AVL fix: time, odometer-style linear position, optional speed, and
/// the door/stop flag reported by the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Seconds since an arbitrary trip epoch.
    pub t: f64,
    /// Distance along the route in feet.
    pub x: f64,
    /// Reported speed in ft/s, if the feed carries one.
    pub v: Option<f64>,
    /// True when the feed marked the vehicle as stopped.
    pub stopped: bool,
}

/// A validated, time-ordered sequence of observations for one trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    trip_id: String,
    samples: Vec<Observation>,
}

impl ObservationSeries {
    /// Validates ordering, finiteness, and the all-or-none velocity rule.
    pub fn new(trip_id: impl Into<String>, samples: Vec<Observation>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() {
                return Err(Error::NonFinite { field: "t", index: i });
            }
            if !s.x.is_finite() {
                return Err(Error::NonFinite { field: "x", index: i });
            }
            if let Some(v) = s.v {
                if !v.is_finite() {
                    return Err(Error::NonFinite { field: "v", index: i });
                }
            }
        }
        for i in 1..samples.len() {
            if samples[i].t <= samples[i - 1].t {
                return Err(Error::NonIncreasingTimes { index: i });
            }
        }
        let with_v = samples.iter().filter(|s| s.v.is_some()).count();
        if with_v != 0 && with_v != samples.len() {
            return Err(Error::PartialVelocity);
        }
        Ok(Self { trip_id: trip_id.into(), samples })
    }

    /// Convenience constructor for position-only data.
    pub fn from_txs(trip_id: impl Into<String>, ts: &[f64], xs: &[f64]) -> Result<Self> {
        assert_eq!(ts.len(), xs.len());
        let samples = ts
            .iter()
            .zip(xs)
            .map(|(&t, &x)| Observation { t, x, v: None, stopped: false })
            .collect();
        Self::new(trip_id, samples)
    }

    /// Convenience constructor for data with velocities.
    pub fn from_txvs(trip_id: impl Into<String>, ts: &[f64], xs: &[f64], vs: &[f64]) -> Result<Self> {
        assert_eq!(ts.len(), xs.len());
        assert_eq!(ts.len(), vs.len());
        let samples = ts
            .iter()
            .zip(xs)
            .zip(vs)
            .map(|((&t, &x), &v)| Observation { t, x, v: Some(v), stopped: false })
            .collect();
        Self::new(trip_id, samples)
    }

    pub fn trip_id(&self) -> &str {
        &self.trip_id
    }

    pub fn samples(&self) -> &[Observation] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    /// Velocities, present only when the whole trip carries them.
    pub fn velocities(&self) -> Option<Vec<f64>> {
        if self.has_velocity() {
            Some(self.samples.iter().map(|s| s.v.unwrap()).collect())
        } else {
            None
        }
    }

    pub fn has_velocity(&self) -> bool {
        self.samples.first().map_or(false, |s| s.v.is_some())
    }

    pub fn time_span(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples.first().unwrap().t
    }

    /// Secant slope of position over each interval, length `len() - 1`.
    pub fn secant_slopes(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| (w[1].x - w[0].x) / (w[1].t - w[0].t))
            .collect()
    }

    /// Rebuilds a series from a subset of sample indices (must be sorted).
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let samples = keep.iter().map(|&i| self.samples[i]).collect();
        Self::new(self.trip_id.clone(), samples)
    }

    /// True when positions never decrease.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].x >= w[0].x)
    }
}

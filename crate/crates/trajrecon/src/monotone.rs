//! Monotonicity machinery shared by the shape-preserving methods.
//!
//! The tangent constraint is the Fritsch-Carlson circle condition: on each
//! interval the tangent pair, measured in units of the interval secant, must
//! lie inside the radius-3 circle. Tangents are projected onto the circle
//! when they fall outside, and both tangents of a nearly flat interval are
//! zeroed. The sweep runs left to right, so a projection can feed into the
//! next interval's check.

use crate::error::{Error, Result};
use crate::hermite::{Knot, KnotSet};

/// Default flatness threshold for secants, in ft/s.
pub const FLAT_EPS: f64 = 1e-8;

/// Constrains knot tangents so the Hermite spline over them is
/// nondecreasing. Knot values must already be nondecreasing; negative
/// tangents are clamped to zero before the sweep, since no nondecreasing
/// curve can pass through a knot with a negative slope.
pub fn fritsch_carlson_constrain(knots: &KnotSet, epsilon: f64) -> Result<KnotSet> {
    let ks = knots.knots();
    for i in 1..ks.len() {
        if ks[i].y < ks[i - 1].y {
            return Err(Error::NonMonotonePositions { method: "fritsch-carlson", index: i });
        }
    }

    let mut m: Vec<f64> = ks.iter().map(|k| k.m.max(0.0)).collect();
    for k in 0..ks.len() - 1 {
        let delta = (ks[k + 1].y - ks[k].y) / (ks[k + 1].t - ks[k].t);
        if delta.abs() < epsilon {
            m[k] = 0.0;
            m[k + 1] = 0.0;
        } else {
            let alpha = m[k] / delta;
            let beta = m[k + 1] / delta;
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                m[k] = tau * alpha * delta;
                m[k + 1] = tau * beta * delta;
            }
        }
    }

    KnotSet::new(
        ks.iter()
            .zip(&m)
            .map(|(k, &m)| Knot { t: k.t, y: k.y, m })
            .collect(),
    )
}

/// Shape-preserving interpolation tangents for position-only data: endpoint
/// tangents take the adjacent secant, interior ones the mean of their two
/// secants, then the constraint sweep runs.
pub fn pchip_knots(ts: &[f64], xs: &[f64], epsilon: f64) -> Result<KnotSet> {
    let n = ts.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let deltas: Vec<f64> = (0..n - 1)
        .map(|i| (xs[i + 1] - xs[i]) / (ts[i + 1] - ts[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = deltas[0];
    m[n - 1] = deltas[n - 2];
    for i in 1..n - 1 {
        m[i] = 0.5 * (deltas[i - 1] + deltas[i]);
    }
    let init = KnotSet::from_slices(ts, xs, &m)?;
    fritsch_carlson_constrain(&init, epsilon)
}

/// Constrains observed velocities for use as interpolation tangents over
/// nondecreasing positions.
pub fn constrain_velocities(ts: &[f64], xs: &[f64], vs: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let init = KnotSet::from_slices(ts, xs, vs)?;
    let out = fritsch_carlson_constrain(&init, epsilon)?;
    Ok(out.knots().iter().map(|k| k.m).collect())
}

/// Raises each value to the running maximum of its predecessors.
pub fn monotone_correct(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        max = max.max(v);
        out.push(max);
    }
    out
}

/// Result of repairing a smoothed (position, velocity) pair for
/// monotone-consistent interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneRepair {
    /// Nondecreasing positions (running maximum of the input).
    pub ys: Vec<f64>,
    /// Velocities, replaced at corrected interior points by the central
    /// secant of the corrected positions, floored at zero.
    pub us: Vec<f64>,
    /// How many positions the running maximum raised.
    pub corrected: usize,
}

/// Repairs smoothed positions and velocities so they can feed a
/// velocity-tangent monotone interpolation. Positions are raised to the
/// running maximum first; where a position changed, the velocity no longer
/// describes the corrected curve, so interior ones are rebuilt from the
/// corrected positions' central secant (endpoints keep their input value).
pub fn monotone_repair(ts: &[f64], xs: &[f64], vs: &[f64]) -> MonotoneRepair {
    let n = ts.len();
    debug_assert!(n == xs.len() && n == vs.len());
    let ys = monotone_correct(xs);
    let mut us = vs.to_vec();
    let mut corrected = 0;
    for i in 0..n {
        if ys[i] > xs[i] {
            corrected += 1;
            if i > 0 && i + 1 < n {
                let secant = (ys[i + 1] - ys[i - 1]) / (ts[i + 1] - ts[i - 1]);
                us[i] = secant.max(0.0);
            }
        }
    }
    MonotoneRepair { ys, us, corrected }
}

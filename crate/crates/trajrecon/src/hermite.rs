//! Cubic Hermite interpolation over irregular knots.
//!
//! A knot carries a position value and a tangent (velocity). Between two
//! knots the curve is the unique cubic matching both values and both
//! tangents; the whole spline is C1 by construction.

use crate::error::{Error, Result};

/// One Hermite knot: time, position value, and tangent dx/dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub t: f64,
    pub y: f64,
    pub m: f64,
}

/// Validated knot sequence with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSet {
    knots: Vec<Knot>,
}

/// Position, velocity, and acceleration of a trajectory at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

impl KnotSet {
    pub fn new(knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: knots.len() });
        }
        for (i, k) in knots.iter().enumerate() {
            if !(k.t.is_finite() && k.y.is_finite() && k.m.is_finite()) {
                return Err(Error::NonFinite { field: "knot", index: i });
            }
        }
        for i in 1..knots.len() {
            if knots[i].t <= knots[i - 1].t {
                return Err(Error::NonIncreasingTimes { index: i });
            }
        }
        Ok(Self { knots })
    }

    pub fn from_slices(ts: &[f64], ys: &[f64], ms: &[f64]) -> Result<Self> {
        assert_eq!(ts.len(), ys.len());
        assert_eq!(ts.len(), ms.len());
        let knots = ts
            .iter()
            .zip(ys)
            .zip(ms)
            .map(|((&t, &y), &m)| Knot { t, y, m })
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].t, self.knots[self.knots.len() - 1].t)
    }

    /// Index of the interval containing `t`, clamped to the outer intervals
    /// for out-of-domain queries.
    fn interval_of(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|k| k.t <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    /// Evaluates position, velocity, and acceleration at `t`.
    ///
    /// Queries outside the knot range extrapolate the boundary cubic; domain
    /// policy (clamp or error) is enforced by the model layer, not here.
    pub fn eval(&self, t: f64) -> PointEval {
        let i = self.interval_of(t);
        let a = self.knots[i];
        let b = self.knots[i + 1];
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        hermite_point(a.y, a.m, b.y, b.m, h, s)
    }
}

/// Evaluates the Hermite cubic for one interval at normalized position `s`.
///
/// Basis: h00 = 2s^3 - 3s^2 + 1, h10 = s^3 - 2s^2 + s,
///        h01 = -2s^3 + 3s^2,    h11 = s^3 - s^2.
fn hermite_point(y0: f64, m0: f64, y1: f64, m1: f64, h: f64, s: f64) -> PointEval {
    let s2 = s * s;
    let s3 = s2 * s;

    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let x = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;

    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -6.0 * s2 + 6.0 * s;
    let d11 = 3.0 * s2 - 2.0 * s;
    let v = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;

    let g00 = 12.0 * s - 6.0;
    let g10 = 6.0 * s - 4.0;
    let g01 = -12.0 * s + 6.0;
    let g11 = 6.0 * s - 2.0;
    let a = (g00 * y0 + g01 * y1) / (h * h) + (g10 * m0 + g11 * m1) / h;

    PointEval { x, v, a }
}

/// Power-basis coefficients of one Hermite interval, in dt = t - t0:
/// x(t) = c0 + c1 dt + c2 dt^2 + c3 dt^3.
pub fn hermite_to_power(y0: f64, m0: f64, y1: f64, m1: f64, h: f64) -> [f64; 4] {
    let dx = y1 - y0;
    [
        y0,
        m0,
        3.0 * dx / (h * h) - (2.0 * m0 + m1) / h,
        -2.0 * dx / (h * h * h) + (m0 + m1) / (h * h),
    ]
}

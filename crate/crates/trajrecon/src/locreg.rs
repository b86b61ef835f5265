//! Local polynomial regression with a tricube kernel.
//!
//! Each query fits a weighted cubic over the k nearest samples in time;
//! nothing is cached between queries. The bandwidth is the distance to the
//! k-th nearest neighbor, so the farthest included sample always gets zero
//! weight. Rank-deficient local systems degrade to quadratic, then linear,
//! then a weighted mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SymMatrix;

/// Neighbor-count configuration for one smoothing channel.
///
/// `k = None` resolves to max(7, ceil(0.05 n)) at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocregConfig {
    pub k: Option<usize>,
}

impl Default for LocregConfig {
    fn default() -> Self {
        Self { k: None }
    }
}

impl LocregConfig {
    pub fn resolve_k(&self, n: usize) -> Result<usize> {
        let k = self
            .k
            .unwrap_or_else(|| 7usize.max((0.05 * n as f64).ceil() as usize));
        if k < 4 {
            return Err(Error::BadParameter {
                name: "k",
                reason: format!("need at least 4 neighbors for a local cubic, got {k}"),
            });
        }
        if k > n {
            return Err(Error::BadParameter {
                name: "k",
                reason: format!("k = {k} exceeds sample count {n}"),
            });
        }
        Ok(k)
    }
}

/// Tricube kernel w(u) = (1 - |u|^3)^3 on |u| <= 1, zero outside.
pub fn tricube(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        0.0
    } else {
        let b = 1.0 - a * a * a;
        b * b * b
    }
}

/// Value and first two derivatives of a local fit at its query time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFit {
    pub value: f64,
    pub deriv: f64,
    pub accel: f64,
    /// Polynomial degree the local system actually supported.
    pub degree: usize,
}

/// Window [lo, hi) of the k nearest samples to `t` in a sorted time array.
/// Ties expand to the left so results do not depend on search order.
fn nearest_window(ts: &[f64], t: f64, k: usize) -> (usize, usize) {
    let n = ts.len();
    let mut hi = ts.partition_point(|&x| x < t);
    let mut lo = hi;
    for _ in 0..k {
        if lo == 0 {
            hi += 1;
        } else if hi == n {
            lo -= 1;
        } else if t - ts[lo - 1] <= ts[hi] - t {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

/// Fits a weighted polynomial of degree <= 3 around `t` and reads off the
/// value and derivatives there. `ts` must be strictly increasing.
pub fn local_fit(ts: &[f64], ys: &[f64], t: f64, k: usize) -> LocalFit {
    debug_assert_eq!(ts.len(), ys.len());
    debug_assert!(k >= 1 && k <= ts.len());
    let (lo, hi) = nearest_window(ts, t, k);
    let h = (t - ts[lo]).abs().max((ts[hi - 1] - t).abs());
    if h == 0.0 {
        // Single-sample window sitting exactly on the query time.
        return LocalFit { value: ys[lo], deriv: 0.0, accel: 0.0, degree: 0 };
    }

    // Normalized offsets u in [-1, 1] keep the normal equations conditioned;
    // derivatives are rescaled by h afterwards.
    let us: Vec<f64> = ts[lo..hi].iter().map(|&ti| (ti - t) / h).collect();
    let ws: Vec<f64> = us.iter().map(|&u| tricube(u)).collect();
    let positive = ws.iter().filter(|&&w| w > 0.0).count();

    for degree in (0..=3usize).rev() {
        if positive < degree + 1 {
            continue;
        }
        let dim = degree + 1;
        let mut m = SymMatrix::zeros(dim);
        let mut b = vec![0.0; dim];
        for (idx, &u) in us.iter().enumerate() {
            let w = ws[idx];
            if w == 0.0 {
                continue;
            }
            let mut pows = [1.0; 7];
            for p in 1..=2 * degree {
                pows[p] = pows[p - 1] * u;
            }
            for r in 0..dim {
                for c in 0..=r {
                    let v = w * pows[r + c];
                    if r == c {
                        m.add(r, r, v);
                    } else {
                        m.add(r, c, v);
                    }
                }
                b[r] += w * pows[r] * ys[lo + idx];
            }
        }
        if let Ok(c) = m.cholesky_solve(&b, 1e-10) {
            let deriv = if degree >= 1 { c[1] / h } else { 0.0 };
            let accel = if degree >= 2 { 2.0 * c[2] / (h * h) } else { 0.0 };
            return LocalFit { value: c[0], deriv, accel, degree };
        }
    }

    // Every weighted point at the same offset; fall back to their mean.
    let wsum: f64 = ws.iter().sum();
    let mean = us
        .iter()
        .enumerate()
        .map(|(i, _)| ws[i] * ys[lo + i])
        .sum::<f64>()
        / wsum;
    LocalFit { value: mean, deriv: 0.0, accel: 0.0, degree: 0 }
}

/// Smooths one channel at the given evaluation times.
pub fn smooth_at(ts: &[f64], ys: &[f64], k: usize, eval_ts: &[f64]) -> Vec<f64> {
    eval_ts.iter().map(|&t| local_fit(ts, ys, t, k).value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent weighted least squares in raw (unnormalized) powers via
    // nalgebra, used to cross-check the library's normalized solve.
    fn oracle_fit(ts: &[f64], ys: &[f64], t: f64, k: usize) -> (f64, f64) {
        let (lo, hi) = nearest_window(ts, t, k);
        let h = (t - ts[lo]).abs().max((ts[hi - 1] - t).abs());
        let rows = hi - lo;
        let mut design = DMatrix::zeros(rows, 4);
        let mut rhs = DVector::zeros(rows);
        for (r, i) in (lo..hi).enumerate() {
            let u = ts[i] - t;
            let w = tricube(u / h).sqrt();
            for p in 0..4 {
                design[(r, p)] = w * u.powi(p as i32);
            }
            rhs[r] = w * ys[i];
        }
        let coeffs = (design.transpose() * &design)
            .lu()
            .solve(&(design.transpose() * rhs))
            .expect("oracle solve");
        (coeffs[0], coeffs[1])
    }

    #[test]
    fn matches_independent_wls_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 60;
        let ts: Vec<f64> = (0..n).map(|i| i as f64 * 4.0 + rng.gen::<f64>()).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| 100.0 + 8.0 * t + (0.07 * t).sin() * 40.0 + rng.gen_range(-3.0..3.0))
            .collect();
        for &t in &[5.0, 37.2, 101.9, 180.4, 221.0] {
            let fit = local_fit(&ts, &ys, t, 9);
            let (ov, od) = oracle_fit(&ts, &ys, t, 9);
            assert!((fit.value - ov).abs() < 1e-7, "value at {t}: {} vs {ov}", fit.value);
            assert!((fit.deriv - od).abs() < 1e-7, "deriv at {t}: {} vs {od}", fit.deriv);
        }
    }

    #[test]
    fn reproduces_global_cubic_with_full_window() {
        let ts: Vec<f64> = (0..12).map(|i| i as f64 * 3.0).collect();
        let cubic = |t: f64| 2.0 + 1.5 * t - 0.2 * t * t + 0.01 * t * t * t;
        let ys: Vec<f64> = ts.iter().map(|&t| cubic(t)).collect();
        for &t in &[0.0, 4.4, 17.0, 29.5, 33.0] {
            let fit = local_fit(&ts, &ys, t, ts.len());
            assert!((fit.value - cubic(t)).abs() < 1e-8, "t = {t}: {}", fit.value);
        }
    }

    #[test]
    fn smoothing_pulls_an_outlier_toward_neighbors() {
        let ts: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let mut ys: Vec<f64> = ts.iter().map(|&t| 10.0 * t).collect();
        ys[7] += 80.0;
        let smoothed = smooth_at(&ts, &ys, 9, &ts);
        assert!((smoothed[7] - 70.0).abs() < 40.0, "smoothed = {}", smoothed[7]);
        assert!(smoothed[7] < ys[7] - 20.0);
    }

    #[test]
    fn window_ties_prefer_left() {
        // ts[1] and ts[3] are equidistant from the query; the left one wins.
        let ts = [0.0, 1.0, 2.0, 3.0, 4.0];
        let (lo, hi) = nearest_window(&ts, 2.0, 2);
        assert_eq!((lo, hi), (1, 3));
    }

    #[test]
    fn degree_falls_back_when_weighted_support_is_thin() {
        // k = 4 leaves only 3 points with positive weight (the farthest is
        // at the bandwidth), so a cubic is unsupported but a quadratic fits.
        let ts = [0.0, 1.0, 2.0, 3.0, 10.0];
        let ys = [0.0, 1.0, 4.0, 9.0, 100.0];
        let fit = local_fit(&ts, &ys, 1.0, 4);
        assert!(fit.degree < 3, "degree = {}", fit.degree);
        assert!(fit.value.is_finite());
    }
}

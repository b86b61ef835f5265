//! Penalized Hermite-spline smoothing with velocity fidelity.
//!
//! The decision vector theta holds one (position, velocity) pair per sample.
//! The fit minimizes squared position residuals, gamma-weighted squared
//! velocity residuals, and an n-scaled curvature penalty; everything is
//! quadratic, so the solution is one symmetric positive definite solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::KnotSet;
use crate::model::{Method, TrajectoryModel};
use crate::monotone::{constrain_velocities, monotone_repair, FLAT_EPS};
use crate::series::ObservationSeries;
use crate::solver::SymBandMatrix;

/// Average interval speeds below this floor are clamped before entering the
/// adaptive weight denominator, keeping dwell intervals finite.
const V_FLOOR: f64 = 0.1;

const PIVOT_TOL: f64 = 1e-12;

/// Factorization route for the normal equations.
///
/// `Dense` ignores the band structure and factorizes the full matrix; it is
/// the default because its cost scales like the reference implementation
/// this crate is benchmarked against. `Banded` exploits the half-bandwidth-3
/// layout and runs in time linear in the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Dense,
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VSplineConfig {
    /// Velocity-fidelity weight, >= 0.
    pub gamma: f64,
    /// Adaptive curvature-penalty scale, > 0.
    pub eta: f64,
    /// Monotonicity-penalty strength, >= 0; used by the MP variant only.
    pub mu: f64,
    pub solver: SolverKind,
}

impl Default for VSplineConfig {
    fn default() -> Self {
        Self { gamma: 1.0, eta: 0.01, mu: 1.0, solver: SolverKind::Dense }
    }
}

impl VSplineConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::BadParameter {
                name: "gamma",
                reason: format!("velocity weight must be finite and >= 0, got {}", self.gamma),
            });
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::BadParameter {
                name: "eta",
                reason: format!("penalty scale must be finite and > 0, got {}", self.eta),
            });
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::BadParameter {
                name: "mu",
                reason: format!("monotonicity penalty must be finite and >= 0, got {}", self.mu),
            });
        }
        Ok(())
    }
}

fn require_len(series: &ObservationSeries, needed: usize) -> Result<()> {
    if series.len() < needed {
        return Err(Error::TooFewSamples { needed, got: series.len() });
    }
    Ok(())
}

fn required_velocities(series: &ObservationSeries, method: Method) -> Result<Vec<f64>> {
    series
        .velocities()
        .ok_or(Error::MissingVelocity { method: method.name() })
}

/// Per-interval curvature weights lambda_i = eta * h_i / v_avg_i^2, with the
/// average speed floored at V_FLOOR.
fn adaptive_lambdas(ts: &[f64], xs: &[f64], eta: f64) -> Vec<f64> {
    ts.windows(2)
        .zip(xs.windows(2))
        .map(|(tw, xw)| {
            let h = tw[1] - tw[0];
            let v_avg = (xw[1] - xw[0]) / h;
            let v = if v_avg.abs() < V_FLOOR { V_FLOOR } else { v_avg };
            eta * h / (v * v)
        })
        .collect()
}

/// Accumulates `scale` times the curvature penalty into `a`.
///
/// Interval i touches theta indices (2i, 2i+1, 2i+2, 2i+3); entries are the
/// integrated squared second derivative of the Hermite basis, times the
/// interval's adaptive weight.
fn add_penalty_blocks(a: &mut SymBandMatrix, ts: &[f64], xs: &[f64], eta: f64, scale: f64) {
    let lambdas = adaptive_lambdas(ts, xs, eta);
    for (i, lam) in lambdas.iter().enumerate() {
        let h = ts[i + 1] - ts[i];
        let (p0, v0, p1, v1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        let cpp = scale * lam * 12.0 / (h * h * h);
        let cpv = scale * lam * 6.0 / (h * h);
        let cvv = scale * lam * 4.0 / h;
        let cvc = scale * lam * 2.0 / h;
        a.add(p0, p0, cpp);
        a.add(p1, p1, cpp);
        a.add(p0, p1, -cpp);
        a.add(p0, v0, cpv);
        a.add(p0, v1, cpv);
        a.add(v0, p1, -cpv);
        a.add(p1, v1, -cpv);
        a.add(v0, v0, cvv);
        a.add(v1, v1, cvv);
        a.add(v0, v1, cvc);
    }
}

/// The curvature penalty operator Omega for a series, unscaled.
pub fn assemble_penalty(series: &ObservationSeries, eta: f64) -> Result<SymBandMatrix> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::BadParameter {
            name: "eta",
            reason: format!("penalty scale must be finite and > 0, got {eta}"),
        });
    }
    require_len(series, 2)?;
    let ts = series.times();
    let xs = series.positions();
    let mut omega = SymBandMatrix::zeros(2 * ts.len(), 3);
    add_penalty_blocks(&mut omega, &ts, &xs, eta, 1.0);
    Ok(omega)
}

/// Normal equations for the spline objective: data terms, n-scaled curvature
/// penalty, and (when `mu` is set) the velocity-target penalty pulling
/// interval-endpoint velocities toward the interval's position secant.
fn assemble_system(
    ts: &[f64],
    xs: &[f64],
    w: &[f64],
    gamma: f64,
    eta: f64,
    mu: Option<f64>,
) -> (SymBandMatrix, Vec<f64>) {
    let n = ts.len();
    let mut a = SymBandMatrix::zeros(2 * n, 3);
    let mut rhs = vec![0.0; 2 * n];
    add_penalty_blocks(&mut a, ts, xs, eta, n as f64);
    for i in 0..n {
        a.add(2 * i, 2 * i, 1.0);
        rhs[2 * i] += xs[i];
        a.add(2 * i + 1, 2 * i + 1, gamma);
        rhs[2 * i + 1] += gamma * w[i];
    }
    if let Some(mu) = mu {
        for i in 0..n - 1 {
            let h = ts[i + 1] - ts[i];
            let s = (xs[i + 1] - xs[i]) / h;
            let (v0, v1) = (2 * i + 1, 2 * i + 3);
            a.add(v0, v0, mu / h);
            a.add(v1, v1, mu / h);
            rhs[v0] += mu * s / h;
            rhs[v1] += mu * s / h;
        }
    }
    (a, rhs)
}

fn solve_theta(
    ts: &[f64],
    xs: &[f64],
    w: &[f64],
    cfg: &VSplineConfig,
    mono: bool,
) -> Result<Vec<f64>> {
    let mu = if mono { Some(cfg.mu) } else { None };
    let (a, rhs) = assemble_system(ts, xs, w, cfg.gamma, cfg.eta, mu);
    match cfg.solver {
        SolverKind::Dense => a.to_dense().cholesky_solve(&rhs, PIVOT_TOL),
        SolverKind::Banded => a.cholesky_solve(&rhs, PIVOT_TOL),
    }
}

fn knots_from_theta(ts: &[f64], theta: &[f64]) -> Result<KnotSet> {
    let ys: Vec<f64> = (0..ts.len()).map(|i| theta[2 * i]).collect();
    let ms: Vec<f64> = (0..ts.len()).map(|i| theta[2 * i + 1]).collect();
    KnotSet::from_slices(ts, &ys, &ms)
}

/// Penalized spline fit of positions and velocities jointly.
pub fn fit_vspline(series: &ObservationSeries, cfg: &VSplineConfig) -> Result<TrajectoryModel> {
    cfg.validate()?;
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::VSpline)?;
    let ts = series.times();
    let xs = series.positions();
    let theta = solve_theta(&ts, &xs, &vs, cfg, false)?;
    Ok(TrajectoryModel::from_knots(Method::VSpline, &knots_from_theta(&ts, &theta)?))
}

/// Spline fit with a soft monotonicity pressure: observed velocities are
/// first projected onto the monotone-compatible region, then the solve adds
/// a per-interval penalty pulling endpoint velocities toward the position
/// secant. Near-monotone, not guaranteed.
pub fn fit_vspline_mp(series: &ObservationSeries, cfg: &VSplineConfig) -> Result<TrajectoryModel> {
    cfg.validate()?;
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::VSplineMp)?;
    let ts = series.times();
    let xs = series.positions();
    let u = constrain_velocities(&ts, &xs, &vs, FLAT_EPS)?;
    let theta = solve_theta(&ts, &xs, &u, cfg, true)?;
    Ok(TrajectoryModel::from_knots(Method::VSplineMp, &knots_from_theta(&ts, &theta)?))
}

/// Spline fit followed by hard monotone enforcement: the smoothed knots go
/// through the running-maximum correction and velocity repair, then a
/// constrained Hermite interpolation. Guaranteed monotone.
pub fn fit_vspline_me(series: &ObservationSeries, cfg: &VSplineConfig) -> Result<TrajectoryModel> {
    cfg.validate()?;
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::VSplineMe)?;
    let ts = series.times();
    let xs = series.positions();
    let theta = solve_theta(&ts, &xs, &vs, cfg, false)?;
    let ys: Vec<f64> = (0..ts.len()).map(|i| theta[2 * i]).collect();
    let ms: Vec<f64> = (0..ts.len()).map(|i| theta[2 * i + 1]).collect();
    let repair = monotone_repair(&ts, &ys, &ms);
    let tangents = constrain_velocities(&ts, &repair.ys, &repair.us, FLAT_EPS)?;
    let knots = KnotSet::from_slices(&ts, &repair.ys, &tangents)?;
    Ok(TrajectoryModel::from_knots(Method::VSplineMe, &knots))
}

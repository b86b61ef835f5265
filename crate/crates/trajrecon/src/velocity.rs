//! Reconstruction methods that consume observed velocities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::KnotSet;
use crate::locreg::{smooth_at, LocregConfig};
use crate::model::{LocregState, Method, Piece, TrajectoryModel};
use crate::monotone::{constrain_velocities, monotone_repair, pchip_knots, FLAT_EPS};
use crate::series::ObservationSeries;

/// Velocity difference below which two segment lines count as parallel.
const PARALLEL_EPS: f64 = 1e-9;

/// Neighbor counts for the two smoothing channels of the bivariate
/// local-regression methods. `None` resolves like the position-only default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BiLocregConfig {
    pub k_x: Option<usize>,
    pub k_v: Option<usize>,
}

fn required_velocities(series: &ObservationSeries, method: Method) -> Result<Vec<f64>> {
    series
        .velocities()
        .ok_or(Error::MissingVelocity { method: method.name() })
}

fn require_len(series: &ObservationSeries, needed: usize) -> Result<()> {
    if series.len() < needed {
        return Err(Error::TooFewSamples { needed, got: series.len() });
    }
    Ok(())
}

/// Linear velocity-matched interpolation: each interval runs the line
/// anchored at its left sample until the switch time, then the line anchored
/// at its right sample. The switch time is the formula intersection of the
/// two lines when that lands inside the interval, otherwise the interval
/// midpoint (each query then uses its nearest endpoint's line).
pub fn fit_lvmi(series: &ObservationSeries) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::Lvmi)?;
    let s = series.samples();
    let mut pieces = Vec::with_capacity(2 * (s.len() - 1));
    for i in 0..s.len() - 1 {
        let (t0, x0, v0) = (s[i].t, s[i].x, vs[i]);
        let (t1, x1, v1) = (s[i + 1].t, s[i + 1].x, vs[i + 1]);
        let dv = v1 - v0;
        let switch = if dv.abs() < PARALLEL_EPS {
            0.5 * (t0 + t1)
        } else {
            let t_int = (x1 - x0 + v1 * t1 - v0 * t0) / dv;
            if t_int >= t0 && t_int <= t1 {
                t_int
            } else {
                0.5 * (t0 + t1)
            }
        };
        if switch > t0 {
            pieces.push(Piece {
                t0,
                t1: switch,
                coeffs: [x0, v0, 0.0, 0.0],
                velocity_jump: false,
            });
        }
        if switch < t1 {
            pieces.push(Piece {
                t0: switch,
                t1,
                coeffs: [x1 + v1 * (switch - t1), v1, 0.0, 0.0],
                velocity_jump: switch > t0,
            });
        }
    }
    Ok(TrajectoryModel::from_pieces(Method::Lvmi, pieces))
}

/// Cubic Hermite interpolation with observed velocities as tangents, taken
/// as reported: overshoots and backward motion pass straight through.
pub fn fit_vchip(series: &ObservationSeries) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::Vchip)?;
    let knots = KnotSet::from_slices(&series.times(), &series.positions(), &vs)?;
    Ok(TrajectoryModel::from_knots(Method::Vchip, &knots))
}

/// VCHIP with the tangent constraint applied to the observed velocities, so
/// the result is nondecreasing on nondecreasing positions.
pub fn fit_vchip_me(series: &ObservationSeries) -> Result<TrajectoryModel> {
    let knots = vchip_me_knots(series, Method::VchipMe)?;
    Ok(TrajectoryModel::from_knots(Method::VchipMe, &knots))
}

fn vchip_me_knots(series: &ObservationSeries, method: Method) -> Result<KnotSet> {
    require_len(series, 2)?;
    let vs = required_velocities(series, method)?;
    let ts = series.times();
    let xs = series.positions();
    let ms = constrain_velocities(&ts, &xs, &vs, FLAT_EPS)?;
    KnotSet::from_slices(&ts, &xs, &ms)
}

/// Blends observed velocities with the position-implied interpolation
/// tangents before constraining: `alpha` = 1 trusts the sensor, 0 ignores
/// it. Negative observed velocities are clamped at ingestion.
pub fn fit_pchip_vchip(series: &ObservationSeries, alpha: f64) -> Result<TrajectoryModel> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::BadParameter {
            name: "alpha",
            reason: format!("blend weight must lie in [0, 1], got {alpha}"),
        });
    }
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::PchipVchip)?;
    let ts = series.times();
    let xs = series.positions();
    let pchip = pchip_knots(&ts, &xs, FLAT_EPS)?;
    let blended: Vec<f64> = pchip
        .knots()
        .iter()
        .zip(&vs)
        .map(|(k, &v)| alpha * v.max(0.0) + (1.0 - alpha) * k.m)
        .collect();
    let ms = constrain_velocities(&ts, &xs, &blended, FLAT_EPS)?;
    let knots = KnotSet::from_slices(&ts, &xs, &ms)?;
    Ok(TrajectoryModel::from_knots(Method::PchipVchip, &knots))
}

/// Independent local-regression smooths of the position and velocity
/// channels. The two channels answer queries separately, so v-hat is not
/// the derivative of x-hat.
pub fn fit_locreg_v(series: &ObservationSeries, cfg: &BiLocregConfig) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::LocregV)?;
    let n = series.len();
    let k_x = LocregConfig { k: cfg.k_x }.resolve_k(n)?;
    let k_v = LocregConfig { k: cfg.k_v }.resolve_k(n)?;
    let ts = series.times();
    let position = LocregState { ts: ts.clone(), ys: series.positions(), k: k_x };
    let velocity = LocregState { ts, ys: vs, k: k_v };
    Ok(TrajectoryModel::from_bilocreg(Method::LocregV, position, velocity))
}

/// Bivariate smoothing followed by monotone repair: positions go through
/// the running maximum, corrected interior velocities are rebuilt from the
/// corrected secants, and the result is interpolated like VCHIP-ME.
pub fn fit_locreg_pchip_v(
    series: &ObservationSeries,
    cfg: &BiLocregConfig,
) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let vs = required_velocities(series, Method::LocregPchipV)?;
    let n = series.len();
    let k_x = LocregConfig { k: cfg.k_x }.resolve_k(n)?;
    let k_v = LocregConfig { k: cfg.k_v }.resolve_k(n)?;
    let ts = series.times();
    let sx = smooth_at(&ts, &series.positions(), k_x, &ts);
    let sv = smooth_at(&ts, &vs, k_v, &ts);
    let repair = monotone_repair(&ts, &sx, &sv);
    let ms = constrain_velocities(&ts, &repair.ys, &repair.us, FLAT_EPS)?;
    let knots = KnotSet::from_slices(&ts, &repair.ys, &ms)?;
    Ok(TrajectoryModel::from_knots(Method::LocregPchipV, &knots))
}

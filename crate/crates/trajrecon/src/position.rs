//! Reconstruction methods that use only position observations.

use crate::error::{Error, Result};
use crate::locreg::{smooth_at, LocregConfig};
use crate::model::{LocregState, Method, Piece, TrajectoryModel};
use crate::monotone::{monotone_correct, pchip_knots, FLAT_EPS};
use crate::series::ObservationSeries;

fn require_len(series: &ObservationSeries, needed: usize) -> Result<()> {
    if series.len() < needed {
        return Err(Error::TooFewSamples { needed, got: series.len() });
    }
    Ok(())
}

/// Connects consecutive samples with line segments. Velocity is the segment
/// slope and jumps at interior samples; acceleration is zero inside
/// segments.
pub fn fit_lseg(series: &ObservationSeries) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let s = series.samples();
    let pieces = s
        .windows(2)
        .enumerate()
        .map(|(i, w)| Piece {
            t0: w[0].t,
            t1: w[1].t,
            coeffs: [w[0].x, (w[1].x - w[0].x) / (w[1].t - w[0].t), 0.0, 0.0],
            velocity_jump: i > 0,
        })
        .collect();
    Ok(TrajectoryModel::from_pieces(Method::Lseg, pieces))
}

/// Shape-preserving cubic interpolation of positions. Requires
/// nondecreasing positions and stays nondecreasing everywhere.
pub fn fit_pchip(series: &ObservationSeries) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let knots = pchip_knots(&series.times(), &series.positions(), FLAT_EPS)?;
    Ok(TrajectoryModel::from_knots(Method::Pchip, &knots))
}

/// Local cubic regression re-solved at every query time. Smooths noise but
/// guarantees neither interpolation nor monotonicity.
pub fn fit_locreg(series: &ObservationSeries, cfg: &LocregConfig) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let k = cfg.resolve_k(series.len())?;
    let state = LocregState { ts: series.times(), ys: series.positions(), k };
    Ok(TrajectoryModel::from_locreg(Method::Locreg, state))
}

/// Local regression evaluated at the sample times, raised to its running
/// maximum, then interpolated with PCHIP: a smoothed but still monotone
/// reconstruction.
pub fn fit_locreg_pchip(
    series: &ObservationSeries,
    cfg: &LocregConfig,
) -> Result<TrajectoryModel> {
    require_len(series, 2)?;
    let k = cfg.resolve_k(series.len())?;
    let ts = series.times();
    let smoothed = smooth_at(&ts, &series.positions(), k, &ts);
    let corrected = monotone_correct(&smoothed);
    let knots = pchip_knots(&ts, &corrected, FLAT_EPS)?;
    Ok(TrajectoryModel::from_knots(Method::LocregPchip, &knots))
}

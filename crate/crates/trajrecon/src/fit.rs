//! One entry point dispatching a method to its fit routine with a shared
//! parameter bundle.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::locreg::LocregConfig;
use crate::model::{Method, TrajectoryModel};
use crate::position::{fit_locreg, fit_locreg_pchip, fit_lseg, fit_pchip};
use crate::series::ObservationSeries;
use crate::velocity::{
    fit_locreg_pchip_v, fit_locreg_v, fit_lvmi, fit_pchip_vchip, fit_vchip, fit_vchip_me,
    BiLocregConfig,
};
use crate::vspline::{fit_vspline, fit_vspline_me, fit_vspline_mp, SolverKind, VSplineConfig};

/// Tuning knobs for every method in one bundle; methods read only the
/// fields they use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitParams {
    /// Neighbor count for single-channel local regression; data-driven
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Position-channel neighbor count for bivariate local regression.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_x: Option<usize>,
    /// Velocity-channel neighbor count for bivariate local regression.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_v: Option<usize>,
    /// Velocity weight in the blended-tangent method.
    pub alpha: f64,
    /// Velocity data weight in the penalized spline.
    pub gamma: f64,
    /// Smoothing strength in the penalized spline.
    pub eta: f64,
    /// Secant-pull weight in the monotonicity-penalized spline.
    pub mu: f64,
    /// Linear-system backend for the penalized splines.
    pub solver: SolverKind,
}

impl Default for FitParams {
    fn default() -> Self {
        let spline = VSplineConfig::default();
        Self {
            k: None,
            k_x: None,
            k_v: None,
            alpha: 0.5,
            gamma: spline.gamma,
            eta: spline.eta,
            mu: spline.mu,
            solver: spline.solver,
        }
    }
}

impl FitParams {
    pub fn locreg(&self) -> LocregConfig {
        LocregConfig { k: self.k }
    }

    pub fn bilocreg(&self) -> BiLocregConfig {
        BiLocregConfig { k_x: self.k_x, k_v: self.k_v }
    }

    pub fn vspline(&self) -> VSplineConfig {
        VSplineConfig { gamma: self.gamma, eta: self.eta, mu: self.mu, solver: self.solver }
    }
}

pub fn fit(
    series: &ObservationSeries,
    method: Method,
    params: &FitParams,
) -> Result<TrajectoryModel> {
    match method {
        Method::Lseg => fit_lseg(series),
        Method::Pchip => fit_pchip(series),
        Method::Locreg => fit_locreg(series, &params.locreg()),
        Method::LocregPchip => fit_locreg_pchip(series, &params.locreg()),
        Method::Lvmi => fit_lvmi(series),
        Method::Vchip => fit_vchip(series),
        Method::VchipMe => fit_vchip_me(series),
        Method::PchipVchip => fit_pchip_vchip(series, params.alpha),
        Method::LocregV => fit_locreg_v(series, &params.bilocreg()),
        Method::LocregPchipV => fit_locreg_pchip_v(series, &params.bilocreg()),
        Method::VSpline => fit_vspline(series, &params.vspline()),
        Method::VSplineMp => fit_vspline_mp(series, &params.vspline()),
        Method::VSplineMe => fit_vspline_me(series, &params.vspline()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::series::Observation;

    fn monotone_series_with_velocity() -> ObservationSeries {
        let ts = [0.0, 8.0, 17.0, 25.0, 31.0, 40.0, 52.0, 60.0];
        let xs = [0.0, 120.0, 300.0, 420.0, 480.0, 480.0, 700.0, 860.0];
        let vs = [0.0, 18.0, 22.0, 12.0, 0.0, 0.0, 25.0, 15.0];
        let samples: Vec<Observation> = ts
            .iter()
            .zip(&xs)
            .zip(&vs)
            .map(|((&t, &x), &v)| Observation { t, x, v: Some(v), stopped: v == 0.0 })
            .collect();
        ObservationSeries::new("fit-test", samples).unwrap()
    }

    #[test]
    fn dispatch_reaches_every_method() {
        let series = monotone_series_with_velocity();
        let params = FitParams::default();
        for method in Method::ALL {
            let model = fit(&series, method, &params).unwrap();
            assert_eq!(model.method(), method);
            let (lo, hi) = model.domain();
            assert_eq!((lo, hi), (0.0, 60.0));
            let mid = model.eval(30.0).unwrap();
            assert!(mid.x.is_finite() && mid.v.is_finite());
        }
    }

    #[test]
    fn velocity_methods_refuse_position_only_input() {
        let series = ObservationSeries::from_txs(
            "bare",
            &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
            &[0.0, 100.0, 250.0, 300.0, 420.0, 500.0, 640.0, 700.0],
        )
        .unwrap();
        let params = FitParams::default();
        for method in Method::ALL {
            let result = fit(&series, method, &params);
            if method.needs_velocity() {
                assert!(
                    matches!(result, Err(Error::MissingVelocity { .. })),
                    "{} should demand velocities",
                    method.name()
                );
            } else {
                assert!(result.is_ok(), "{} should fit positions alone", method.name());
            }
        }
    }

    #[test]
    fn parameters_flow_through_to_methods() {
        let series = monotone_series_with_velocity();
        let blended_as_raw = fit(
            &series,
            Method::PchipVchip,
            &FitParams { alpha: 1.0, ..FitParams::default() },
        )
        .unwrap();
        let enforced = fit(&series, Method::VchipMe, &FitParams::default()).unwrap();
        for (a, b) in blended_as_raw.pieces().iter().zip(enforced.pieces()) {
            for (ca, cb) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((ca - cb).abs() <= 1e-12 * ca.abs().max(1.0));
            }
        }

        let rough = fit(
            &series,
            Method::VSpline,
            &FitParams { eta: 1e-9, ..FitParams::default() },
        )
        .unwrap();
        let smooth = fit(
            &series,
            Method::VSpline,
            &FitParams { eta: 100.0, ..FitParams::default() },
        )
        .unwrap();
        let t = 21.0;
        let interp = series.positions()[2];
        let d_rough = (rough.eval(17.0).unwrap().x - interp).abs();
        let d_smooth = (smooth.eval(17.0).unwrap().x - interp).abs();
        assert!(d_rough < d_smooth, "light smoothing should hug the data closer at t={t}");
    }
}

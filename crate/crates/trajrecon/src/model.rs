//! Fitted trajectory models and their query semantics.
//!
//! Most methods produce contiguous piecewise polynomials of degree <= 3.
//! The local-regression methods instead re-solve a weighted fit at every
//! query, so they carry their data and neighbor counts.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hermite::{hermite_to_power, KnotSet, PointEval};
use crate::locreg::local_fit;

/// The thirteen reconstruction methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Lseg,
    Pchip,
    Locreg,
    LocregPchip,
    Lvmi,
    Vchip,
    VchipMe,
    PchipVchip,
    LocregV,
    LocregPchipV,
    VSpline,
    VSplineMp,
    VSplineMe,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Lseg,
        Method::Pchip,
        Method::Locreg,
        Method::LocregPchip,
        Method::Lvmi,
        Method::Vchip,
        Method::VchipMe,
        Method::PchipVchip,
        Method::LocregV,
        Method::LocregPchipV,
        Method::VSpline,
        Method::VSplineMp,
        Method::VSplineMe,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Lseg => "LSEG",
            Method::Pchip => "PCHIP",
            Method::Locreg => "LOCREG",
            Method::LocregPchip => "LOCREG-PCHIP",
            Method::Lvmi => "LVMI",
            Method::Vchip => "VCHIP",
            Method::VchipMe => "VCHIP-ME",
            Method::PchipVchip => "PCHIP-VCHIP",
            Method::LocregV => "LOCREG-V",
            Method::LocregPchipV => "LOCREG-PCHIP-V",
            Method::VSpline => "V-SPLINE",
            Method::VSplineMp => "V-SPLINE-MP",
            Method::VSplineMe => "V-SPLINE-ME",
        }
    }

    /// Methods that consume observed velocities and fail without them.
    pub fn needs_velocity(&self) -> bool {
        matches!(
            self,
            Method::Lvmi
                | Method::Vchip
                | Method::VchipMe
                | Method::PchipVchip
                | Method::LocregV
                | Method::LocregPchipV
                | Method::VSpline
                | Method::VSplineMp
                | Method::VSplineMe
        )
    }

    /// Methods whose output is nondecreasing by construction.
    pub fn guarantees_monotone(&self) -> bool {
        matches!(
            self,
            Method::Lseg
                | Method::Pchip
                | Method::LocregPchip
                | Method::VchipMe
                | Method::PchipVchip
                | Method::LocregPchipV
                | Method::VSplineMe
        )
    }

    /// Methods where v-hat is the derivative of x-hat everywhere in the
    /// domain's interior. LSEG and LVMI break at segment switches; LOCREG-V
    /// smooths its two channels independently, so no identity links them.
    pub fn velocity_is_derivative(&self) -> bool {
        !matches!(self, Method::Lseg | Method::Lvmi | Method::LocregV)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let canon = s.trim().to_ascii_uppercase();
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == canon)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// What a query outside the fitted domain does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainPolicy {
    /// Hold the endpoint position with zero velocity and acceleration.
    #[default]
    Clamp,
    /// Refuse the query.
    Error,
}

/// One polynomial piece x(t) = c0 + c1 dt + c2 dt^2 + c3 dt^3, dt = t - t0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: [f64; 4],
    /// True when v-hat jumps at this piece's left edge (piecewise-linear
    /// methods switch lines there).
    pub velocity_jump: bool,
}

impl Piece {
    pub fn eval(&self, t: f64) -> PointEval {
        let dt = t - self.t0;
        let [c0, c1, c2, c3] = self.coeffs;
        PointEval {
            x: c0 + dt * (c1 + dt * (c2 + dt * c3)),
            v: c1 + dt * (2.0 * c2 + dt * 3.0 * c3),
            a: 2.0 * c2 + 6.0 * c3 * dt,
        }
    }
}

/// Data carried by a re-fit-at-query local regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocregState {
    pub ts: Vec<f64>,
    pub ys: Vec<f64>,
    pub k: usize,
}

impl LocregState {
    fn fit_at(&self, t: f64) -> crate::locreg::LocalFit {
        local_fit(&self.ts, &self.ys, t, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Repr {
    /// Contiguous pieces covering the domain, evaluated by binary search.
    Piecewise { pieces: Vec<Piece> },
    /// Position channel only; velocity and acceleration come from the local
    /// cubic's derivatives at the query time.
    Locreg { position: LocregState },
    /// Independent position and velocity channels. Acceleration is the
    /// derivative of the velocity channel's local fit.
    BiLocreg { position: LocregState, velocity: LocregState },
}

/// A fitted trajectory: monotone-in-time position profile plus velocity and
/// acceleration readouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModel {
    method: Method,
    domain: (f64, f64),
    policy: DomainPolicy,
    repr: Repr,
}

impl TrajectoryModel {
    pub(crate) fn from_pieces(method: Method, pieces: Vec<Piece>) -> Self {
        assert!(!pieces.is_empty());
        let domain = (pieces[0].t0, pieces[pieces.len() - 1].t1);
        Self { method, domain, policy: DomainPolicy::default(), repr: Repr::Piecewise { pieces } }
    }

    /// Builds the C1 piecewise representation of a Hermite knot set.
    pub(crate) fn from_knots(method: Method, knots: &KnotSet) -> Self {
        let ks = knots.knots();
        let pieces = ks
            .windows(2)
            .map(|w| Piece {
                t0: w[0].t,
                t1: w[1].t,
                coeffs: hermite_to_power(w[0].y, w[0].m, w[1].y, w[1].m, w[1].t - w[0].t),
                velocity_jump: false,
            })
            .collect();
        Self::from_pieces(method, pieces)
    }

    pub(crate) fn from_locreg(method: Method, position: LocregState) -> Self {
        let domain = (position.ts[0], *position.ts.last().unwrap());
        Self { method, domain, policy: DomainPolicy::default(), repr: Repr::Locreg { position } }
    }

    pub(crate) fn from_bilocreg(
        method: Method,
        position: LocregState,
        velocity: LocregState,
    ) -> Self {
        let domain = (position.ts[0], *position.ts.last().unwrap());
        Self {
            method,
            domain,
            policy: DomainPolicy::default(),
            repr: Repr::BiLocreg { position, velocity },
        }
    }

    pub fn with_policy(mut self, policy: DomainPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Piece list for piecewise representations, empty for local-regression
    /// models.
    pub fn pieces(&self) -> &[Piece] {
        match &self.repr {
            Repr::Piecewise { pieces } => pieces,
            _ => &[],
        }
    }

    /// Times where v-hat is discontinuous.
    pub fn velocity_breakpoints(&self) -> Vec<f64> {
        self.pieces()
            .iter()
            .filter(|p| p.velocity_jump)
            .map(|p| p.t0)
            .collect()
    }

    /// Position, velocity, and acceleration at `t`.
    ///
    /// Under the clamp policy, queries outside the domain hold the endpoint
    /// position with zero velocity. At a velocity breakpoint the right-hand
    /// piece answers.
    pub fn eval(&self, t: f64) -> Result<PointEval> {
        let (lo, hi) = self.domain;
        if t < lo || t > hi {
            match self.policy {
                DomainPolicy::Error => return Err(Error::OutOfDomain { t, lo, hi }),
                DomainPolicy::Clamp => {
                    let edge = if t < lo { lo } else { hi };
                    let x = self.eval_inner(edge).x;
                    return Ok(PointEval { x, v: 0.0, a: 0.0 });
                }
            }
        }
        Ok(self.eval_inner(t))
    }

    fn eval_inner(&self, t: f64) -> PointEval {
        match &self.repr {
            Repr::Piecewise { pieces } => {
                let idx = pieces
                    .partition_point(|p| p.t1 <= t)
                    .min(pieces.len() - 1);
                pieces[idx].eval(t)
            }
            Repr::Locreg { position } => {
                let f = position.fit_at(t);
                PointEval { x: f.value, v: f.deriv, a: f.accel }
            }
            Repr::BiLocreg { position, velocity } => {
                let p = position.fit_at(t);
                let v = velocity.fit_at(t);
                PointEval { x: p.value, v: v.value, a: v.deriv }
            }
        }
    }

    /// Positions at many times; convenience over repeated `eval`.
    pub fn positions_at(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| Ok(self.eval(t)?.x)).collect()
    }
}

//! Reconstruction of continuous bus trajectories from sparse AVL samples.
//!
//! An AVL feed reports a handful of (time, odometer position, speed) rows
//! per trip. This crate rebuilds a continuous position profile x-hat(t),
//! with velocity and acceleration readouts, through a family of
//! interpolation and smoothing methods, and ships the preprocessing,
//! synthetic-data, and evaluation machinery needed to compare them.
//!
//! Entry points:
//! - [`series::ObservationSeries`]: validated per-trip samples.
//! - [`fit`]: one dispatcher over every reconstruction method.
//! - [`preprocess`]: trip filtering, outlier repair, and subsampling.
//! - [`synthetic`]: corridor simulator with ground-truth trajectories.
//! - [`evaluate`]: fit/profile/intersection metric suites.

pub mod error;
pub mod evaluate;
pub mod fit;
pub mod hermite;
pub mod io;
pub mod locreg;
pub mod model;
pub mod monotone;
pub mod position;
pub mod preprocess;
pub mod series;
pub mod solver;
pub mod synthetic;
pub mod velocity;
pub mod vspline;

pub use error::{Error, Result};
pub use hermite::{Knot, KnotSet, PointEval};
pub use model::{DomainPolicy, Method, Piece, TrajectoryModel};
pub use series::{Observation, ObservationSeries};

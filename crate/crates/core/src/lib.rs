//! Time-optimal vessel routing through stationary current fields.
//!
//! The pipeline shoots fans of Zermelo trajectories toward the goal
//! ([`search`]), chains the winners into a piecewise-optimal route, and then
//! smooths it with Newton-Jacobi sweeps over the discrete Euler-Lagrange
//! equations of the travel-time functional ([`smoothing`]). Routes can be
//! planned on the plane or on the sphere.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod search;
pub mod smoothing;

pub use dynamics::{Dynamics, TrajectoryState};
pub use exec::Execution;
pub use field::{CircularField, CurrentField, FieldSample, FourVortices, GridField};
pub use geometry::{Point, Space, SphereParams};
pub use search::{hybrid_search, HsConfig, Route, ShotStatus, ShotTrajectory};

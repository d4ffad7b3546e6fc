//! Baseline routes, travel time along fixed paths, and fuel estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{CurrentField, FieldError};
use crate::geometry::{GeometryError, Point, Space};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("current at ({}, {}) is too strong to hold the path", .0.x1, .0.x2)]
    CurrentExceedsSpeed(Point),
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("a path needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselSpec {
    /// Displacement in tonnes.
    pub displacement: f64,
    /// Length in metres.
    pub length: f64,
    /// Specific fuel oil consumption, g/kWh.
    #[serde(default = "default_sfoc")]
    pub sfoc: f64,
}

fn default_sfoc() -> f64 {
    185.0
}

impl VesselSpec {
    pub fn new(displacement: f64, length: f64) -> Self {
        Self {
            displacement,
            length,
            sfoc: default_sfoc(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    /// Seconds on the sphere, model time units on the plane.
    pub travel_time: f64,
    /// Kilometres on the sphere, model length units on the plane.
    pub path_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuel_kg: Option<f64>,
    /// Some part of the path lies on land; those stretches add no time.
    pub crosses_land: bool,
}

/// Straight chord or great circle sampled at `n` points.
pub fn min_distance_route(space: Space, a: Point, b: Point, n: usize) -> Result<Vec<Point>, GeometryError> {
    space.geodesic_path(a, b, n)
}

const RELATIVE_TOLERANCE: f64 = 1e-4;
const MIN_LEVEL: u32 = 3;
const MAX_LEVEL: u32 = 16;

struct Piece {
    time: f64,
    land: bool,
}

fn piece_time<F: CurrentField + ?Sized>(
    a: Point,
    mid: Point,
    b: Point,
    speed: f64,
    field: &F,
    space: Space,
) -> Result<Piece, AnalysisError> {
    let length = space.distance(a, b) * space.distance_to_velocity_length();
    if length == 0.0 {
        return Ok(Piece { time: 0.0, land: false });
    }
    if field.is_land(mid) {
        return Ok(Piece { time: 0.0, land: true });
    }
    // a piece touching land counts half, so refinement keeps going until the
    // coastline is resolved
    let share = if field.is_land(a) || field.is_land(b) { 0.5 } else { 1.0 };
    let u = match space {
        Space::Euclidean => (b - a) * (1.0 / (b - a).norm()),
        Space::Spherical(_) => {
            let heading = space.bearing(a, b)?;
            Point::new(heading.cos(), heading.sin())
        }
    };
    let w = field.sample(mid)?.as_point();
    let along = w.dot(u);
    let cross = w - u * along;
    let slack = speed * speed - cross.dot(cross);
    if slack <= 0.0 {
        return Err(AnalysisError::CurrentExceedsSpeed(mid));
    }
    let ground = along + slack.sqrt();
    if ground <= 0.0 {
        return Err(AnalysisError::CurrentExceedsSpeed(mid));
    }
    Ok(Piece {
        time: share * length / ground,
        land: share < 1.0,
    })
}

fn time_at_level<F: CurrentField + ?Sized>(
    a: Point,
    b: Point,
    pieces: usize,
    speed: f64,
    field: &F,
    space: Space,
) -> Result<(f64, bool), AnalysisError> {
    let (mut total, mut land) = (0.0, false);
    // even indices are piece ends, odd indices their midpoints
    let nodes = space.geodesic_path(a, b, 2 * pieces + 1)?;
    for k in 0..pieces {
        let p = piece_time(nodes[2 * k], nodes[2 * k + 1], nodes[2 * k + 2], speed, field, space)?;
        total += p.time;
        land |= p.land;
    }
    Ok((total, land))
}

fn segment_time<F: CurrentField + ?Sized>(
    a: Point,
    b: Point,
    speed: f64,
    field: &F,
    space: Space,
) -> Result<(f64, bool), AnalysisError> {
    let (mut raw, mut land) = time_at_level(a, b, 1, speed, field, space)?;
    let mut extrapolated = raw;
    let mut settled = false;
    for level in 1..=MAX_LEVEL {
        let (next, next_land) = time_at_level(a, b, 1 << level, speed, field, space)?;
        // midpoint sums converge at second order
        let next_extrapolated = if next_land { next } else { (4.0 * next - raw) / 3.0 };
        let tol = RELATIVE_TOLERANCE * next.abs();
        // both the raw and the extrapolated sums must settle, twice in a row,
        // so a lucky cancellation cannot stop the refinement early
        let quiet = (next - raw).abs() <= tol && (next_extrapolated - extrapolated).abs() <= tol && land == next_land;
        raw = next;
        extrapolated = next_extrapolated;
        land = next_land;
        if quiet && settled && level >= MIN_LEVEL {
            break;
        }
        settled = quiet;
        if level == MAX_LEVEL {
            log::warn!("segment time still changing after {} bisections", MAX_LEVEL);
        }
    }
    Ok((extrapolated, land))
}

/// Time to follow `path` at constant water speed, heading re-solved on each
/// piece so the ground track stays on the path. Each segment is halved until
/// both its midpoint sum and the Richardson-extrapolated sum change by less
/// than `1e-4` relative on two successive halvings.
pub fn path_travel_time<F: CurrentField + ?Sized>(
    path: &[Point],
    speed: f64,
    field: &F,
    space: Space,
) -> Result<PathMetrics, AnalysisError> {
    if path.len() < 2 {
        return Err(AnalysisError::TooFewPoints(path.len()));
    }
    if !(speed > 0.0) {
        return Err(AnalysisError::NonPositiveSpeed(speed));
    }
    let (times, land) = segment_times(path, speed, field, space)?;
    Ok(PathMetrics {
        travel_time: times.iter().fold(0.0, |acc, t| acc + t),
        path_length: space.polyline_length(path),
        fuel_kg: None,
        crosses_land: land,
    })
}

/// Per-segment times of `path`, plus whether any segment touches land.
/// Summing them in order reproduces [`path_travel_time`] exactly.
pub fn segment_times<F: CurrentField + ?Sized>(
    path: &[Point],
    speed: f64,
    field: &F,
    space: Space,
) -> Result<(Vec<f64>, bool), AnalysisError> {
    if !(speed > 0.0) {
        return Err(AnalysisError::NonPositiveSpeed(speed));
    }
    let mut land = false;
    let mut times = Vec::with_capacity(path.len().saturating_sub(1));
    for seg in path.windows(2) {
        if space.distance(seg[0], seg[1]) == 0.0 {
            times.push(0.0);
            continue;
        }
        let (t, l) = segment_time(seg[0], seg[1], speed, field, space)?;
        times.push(t);
        land |= l;
    }
    Ok((times, land))
}

/// Heading through water that keeps the ground track on `a -> b` at `a`.
/// Falls back to the track direction where the current is unavailable or
/// too strong.
pub fn steering_heading<F: CurrentField + ?Sized>(
    a: Point,
    b: Point,
    speed: f64,
    field: &F,
    space: Space,
) -> Result<f64, GeometryError> {
    let track = space.bearing(a, b)?;
    let u = Point::new(track.cos(), track.sin());
    let w = match field.sample(a) {
        Ok(w) if !field.is_land(a) => w.as_point(),
        _ => return Ok(track),
    };
    let along = w.dot(u);
    let cross = w - u * along;
    let slack = speed * speed - cross.dot(cross);
    if slack <= 0.0 {
        return Ok(track);
    }
    let through_water = u * (along + slack.sqrt()) - w;
    Ok(through_water.x2.atan2(through_water.x1))
}

/// Path metrics with optional fuel. On the sphere time is in seconds and
/// converted to hours for fuel; plane time units are taken as hours.
pub fn route_metrics<F: CurrentField + ?Sized>(
    path: &[Point],
    speed: f64,
    field: &F,
    space: Space,
    vessel: Option<&VesselSpec>,
) -> Result<PathMetrics, AnalysisError> {
    let mut m = path_travel_time(path, speed, field, space)?;
    if let Some(vessel) = vessel {
        let hours = match space {
            Space::Spherical(_) => m.travel_time / 3600.0,
            Space::Euclidean => m.travel_time,
        };
        m.fuel_kg = Some(fuel_rate(speed, vessel)? * hours);
    }
    Ok(m)
}

/// Harvald fuel rate in kg/h at water speed `v` (m/s).
pub fn fuel_rate(v: f64, vessel: &VesselSpec) -> Result<f64, AnalysisError> {
    if !(v > 0.0) {
        return Err(AnalysisError::NonPositiveSpeed(v));
    }
    let c = 3.7 * (vessel.length.sqrt() + 75.0 / v);
    let power_kw = vessel.displacement.powf(2.0 / 3.0) * v.powi(3) / c;
    Ok(vessel.sfoc * power_kw / 1000.0)
}

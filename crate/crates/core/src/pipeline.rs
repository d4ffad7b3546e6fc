//! Search, smoothing and measurement chained into one run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{min_distance_route, route_metrics, AnalysisError, PathMetrics, VesselSpec};
use crate::field::CurrentField;
use crate::geometry::{GeometryError, Point, Space};
use crate::search::{hybrid_search, HsConfig, Route, SearchError};
use crate::smoothing::{smooth, DiscreteRoute, SmoothedRoute, SmoothingConfig, SmoothingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("search: {0}")]
    Search(#[from] SearchError),
    #[error("smoothing: {0}")]
    Smoothing(#[from] SmoothingError),
    #[error("measurement: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("baseline: {0}")]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub search: HsConfig,
    pub smoothing: SmoothingConfig,
    pub vessel: Option<VesselSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub route: Route,
    /// Search route positions with the goal appended when it was reached.
    pub search_path: Vec<Point>,
    /// Integration time at each point of `search_path`; the appended goal
    /// gets the measured time of the final hop.
    pub search_times: Vec<f64>,
    pub search_metrics: PathMetrics,
    pub smoothed: Option<SmoothedRoute>,
    pub smoothed_metrics: Option<PathMetrics>,
    /// Why the smoothed route was not kept, if it was computed but dropped.
    pub smoothing_rejected: Option<String>,
}

impl PipelineResult {
    /// Metrics of the route of record: smoothed when kept, otherwise the
    /// search route.
    pub fn final_metrics(&self) -> PathMetrics {
        match (&self.smoothed_metrics, &self.smoothing_rejected) {
            (Some(m), None) => *m,
            _ => self.search_metrics,
        }
    }

    pub fn smoothing_kept(&self) -> bool {
        self.smoothed_metrics.is_some() && self.smoothing_rejected.is_none()
    }
}

/// Straight chord or great circle between the endpoints, measured.
pub fn baseline<F: CurrentField + ?Sized>(
    start: Point,
    goal: Point,
    speed: f64,
    field: &F,
    space: Space,
    vessel: Option<&VesselSpec>,
) -> Result<PathMetrics, PipelineError> {
    let path = min_distance_route(space, start, goal, 2)?;
    Ok(route_metrics(&path, speed, field, space, vessel)?)
}

/// Runs the search, smooths the result when the goal was reached, and
/// measures both along their polylines.
pub fn run<F: CurrentField + ?Sized>(
    start: Point,
    goal: Point,
    cfg: &PipelineConfig,
    field: &F,
    space: Space,
) -> Result<PipelineResult, PipelineError> {
    let speed = cfg.search.speed;
    let vessel = cfg.vessel.as_ref();
    let route = match hybrid_search(start, goal, &cfg.search, field, space) {
        Ok(r) => r,
        Err(SearchError::RouteNotFound { partial, .. }) => *partial,
        Err(e) => return Err(e.into()),
    };
    let states = route.states();
    let mut timed: Vec<(Point, f64)> = states.iter().map(|s| (s.pos, s.t)).collect();
    if route.reached {
        let (last, t_end) = timed[timed.len() - 1];
        if space.distance(last, goal) > 0.0 {
            let hop = route_metrics(&[last, goal], speed, field, space, None)?;
            timed.push((goal, t_end + hop.travel_time));
        }
    }
    let search_path: Vec<Point> = timed.iter().map(|p| p.0).collect();
    let search_times: Vec<f64> = timed.iter().map(|p| p.1).collect();
    let search_metrics = if search_path.len() >= 2 {
        route_metrics(&search_path, speed, field, space, vessel)?
    } else {
        PathMetrics {
            travel_time: 0.0,
            path_length: 0.0,
            fuel_kg: vessel.map(|_| 0.0),
            crosses_land: false,
        }
    };
    let mut result = PipelineResult {
        route,
        search_path,
        search_times,
        search_metrics,
        smoothed: None,
        smoothed_metrics: None,
        smoothing_rejected: None,
    };
    if !result.route.reached || timed.len() < 2 || cfg.smoothing.iterations == 0 {
        return Ok(result);
    }
    let discrete = DiscreteRoute::resample(&timed, cfg.smoothing.segments, space)?;
    let smoothed = smooth(&discrete, &cfg.smoothing, speed, field)?;
    let metrics = route_metrics(&smoothed.route.points, speed, field, space, vessel)?;
    if metrics.crosses_land {
        log::warn!("smoothed route crosses land; keeping the search route");
        result.smoothing_rejected = Some("smoothed route crosses land".into());
    }
    result.smoothed = Some(smoothed);
    result.smoothed_metrics = Some(metrics);
    Ok(result)
}

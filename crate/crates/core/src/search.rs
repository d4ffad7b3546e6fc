//! Cone-shooting route search.
//!
//! Exploration shoots a fan of `N` headings centred on the bearing to the
//! goal, evolves every trajectory with RK4 and stops each one at the first
//! checkpoint where it reaches the goal, hits land, or turns too far away
//! from the goal. Refinement re-shoots a narrower fan around the winning
//! heading. The two alternate, each refinement winner's end point becoming
//! the next exploration start, until a trajectory arrives.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{steps_per_interval, Dynamics, DynamicsError, TrajectoryState};
use crate::exec::Execution;
use crate::field::CurrentField;
use crate::geometry::{wrap_angle, GeometryError, Point, Space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsConfig {
    /// Speed over water.
    pub speed: f64,
    /// Trajectories per fan.
    pub n: usize,
    /// Exploration cone amplitude (rad).
    pub gamma: f64,
    /// Allowed heading deviation from the goal bearing, full width (rad).
    pub gamma_d: f64,
    /// Refinement cone amplitude (rad).
    pub gamma_b: f64,
    /// RK4 step.
    pub dt: f64,
    /// Checkpoint interval, a whole multiple of `dt`.
    pub tau: f64,
    /// Goal radius in [`Space::distance`] units.
    pub d: f64,
    /// Maximum exploration/refinement alternations.
    pub max_outer: usize,
    /// Checkpoints a single trajectory may run before it is cut off.
    pub max_checkpoints: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for HsConfig {
    fn default() -> Self {
        Self::euclidean()
    }
}

impl HsConfig {
    /// Settings for unit-speed synthetic benchmarks.
    pub fn euclidean() -> Self {
        Self {
            speed: 1.0,
            n: 21,
            gamma: PI,
            gamma_d: PI / 2.0,
            gamma_b: PI / 5.0,
            dt: 0.01,
            tau: 0.1,
            d: 0.1,
            max_outer: 200,
            max_checkpoints: 10_000,
            execution: Execution::default(),
        }
    }

    /// Settings for ocean routing: seconds, metres per second, kilometres.
    pub fn spherical(speed: f64) -> Self {
        Self {
            speed,
            dt: 600.0,
            tau: 7200.0,
            d: 10.0,
            ..Self::euclidean()
        }
    }

    /// Checks the invariants; returns advisory warnings for settings that
    /// are legal but unusual.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return fail(format!("speed must be positive, got {}", self.speed));
        }
        if self.n < 2 {
            return fail(format!("fan size must be at least 2, got {}", self.n));
        }
        if !(self.gamma_b > 0.0 && self.gamma_b <= self.gamma && self.gamma <= TAU + 1e-12) {
            return fail(format!(
                "cone amplitudes must satisfy 0 < gamma_b <= gamma <= 2 pi (gamma_b = {}, gamma = {})",
                self.gamma_b, self.gamma
            ));
        }
        if !(self.gamma_d > 0.0 && self.gamma_d <= self.gamma) {
            return fail(format!(
                "deviation threshold must satisfy 0 < gamma_d <= gamma (gamma_d = {}, gamma = {})",
                self.gamma_d, self.gamma
            ));
        }
        if !(self.dt > 0.0 && self.tau >= self.dt) {
            return fail(format!("need 0 < dt <= tau (dt = {}, tau = {})", self.dt, self.tau));
        }
        let ratio = self.tau / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return fail(format!("tau = {} is not a whole multiple of dt = {}", self.tau, self.dt));
        }
        if !(self.d > 0.0) {
            return fail(format!("goal radius must be positive, got {}", self.d));
        }
        if self.max_outer == 0 || self.max_checkpoints == 0 {
            return fail("iteration guards must be positive".into());
        }
        let mut warnings = Vec::new();
        let spacing = self.gamma / (self.n - 1) as f64;
        if self.gamma_b > 2.0 * spacing + 1e-12 {
            warnings.push(format!(
                "refinement cone {:.4} rad is wider than two exploration spacings ({:.4} rad)",
                self.gamma_b,
                2.0 * spacing
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid search configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotStatus {
    Active,
    ReachedGoal,
    Deviated,
    HitLand,
}

/// One trajectory of a fan. `states[0]` is the launch state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTrajectory {
    pub states: Vec<TrajectoryState>,
    pub status: ShotStatus,
    pub shoot_index: usize,
    /// Checkpoint counter value when the trajectory stopped.
    pub stop_iteration: usize,
}

impl ShotTrajectory {
    pub fn launch(&self) -> &TrajectoryState {
        &self.states[0]
    }

    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory has a launch state")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub legs: Vec<ShotTrajectory>,
    pub total_time: f64,
    pub reached: bool,
}

impl Route {
    /// All states in order; each junction appears once, carrying the heading
    /// of the leg that ends there.
    pub fn states(&self) -> Vec<TrajectoryState> {
        let mut out: Vec<TrajectoryState> = Vec::new();
        for (k, leg) in self.legs.iter().enumerate() {
            let skip = usize::from(k > 0);
            out.extend(leg.states.iter().skip(skip).copied());
        }
        out
    }

    /// Index into [`Route::states`] where each leg starts.
    pub fn leg_boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.legs.len());
        let mut at = 0;
        for leg in &self.legs {
            out.push(at);
            at += leg.states.len() - 1;
        }
        out
    }

    pub fn positions(&self) -> Vec<Point> {
        self.states().into_iter().map(|s| s.pos).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("start point ({}, {}) is on land", .0.x1, .0.x2)]
    StartOnLand(Point),
    #[error("every trajectory of the fan hit land immediately")]
    AllTrajectoriesDead,
    #[error("no route reached the goal within {outer} alternations")]
    RouteNotFound { outer: usize, partial: Box<Route> },
}

/// `n` headings spread evenly over `[center - amplitude/2, center + amplitude/2]`.
/// A full-circle cone is spread over `2 pi / n` so no heading is repeated.
pub fn shoot_fan(center: f64, amplitude: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a fan needs at least two headings");
    if amplitude >= TAU - 1e-12 {
        let step = TAU / n as f64;
        let mid = ((n - 1) / 2) as f64;
        return (0..n).map(|k| wrap_angle(center + (k as f64 - mid) * step)).collect();
    }
    let step = amplitude / (n - 1) as f64;
    (0..n)
        .map(|k| wrap_angle(center - 0.5 * amplitude + k as f64 * step))
        .collect()
}

/// Outcome of applying the stopping rules after a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub status: ShotStatus,
    /// Number of states to keep.
    pub keep: usize,
}

/// Applies the stopping rules to `states`, where `states[new_from..]` were
/// produced since the previous checkpoint. Arrival and landfall are looked
/// for at every new state, so a fast vessel cannot step over the goal
/// between checkpoints; an arrival counts unless land came first. Heading
/// deviation is judged at the checkpoint state.
pub fn stop_check<F: CurrentField + ?Sized>(
    states: &[TrajectoryState],
    new_from: usize,
    goal: Point,
    cfg: &HsConfig,
    field: &F,
    space: &Space,
) -> StopDecision {
    let len = states.len();
    let first_land = (new_from..len).find(|&i| field.is_land(states[i].pos));
    let arrival = (new_from..len)
        .take_while(|&i| first_land.is_none_or(|l| i < l))
        .find(|&i| space.distance(states[i].pos, goal) <= cfg.d);
    if let Some(i) = arrival {
        return StopDecision {
            status: ShotStatus::ReachedGoal,
            keep: i + 1,
        };
    }
    if let Some(first_land) = first_land {
        return StopDecision {
            status: ShotStatus::HitLand,
            keep: first_land,
        };
    }
    let last = states[len - 1];
    let deviated = match space.bearing(last.pos, goal) {
        Ok(to_goal) => wrap_angle(last.alpha - to_goal).abs() > 0.5 * cfg.gamma_d,
        Err(_) => false,
    };
    StopDecision {
        status: if deviated { ShotStatus::Deviated } else { ShotStatus::Active },
        keep: len,
    }
}

/// A fan launch point: position, clock and checkpoint counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Launch {
    pub pos: Point,
    pub t: f64,
    pub iteration: usize,
}

/// Routing problem: field, space and search settings.
pub struct Searcher<'a, F: ?Sized> {
    pub field: &'a F,
    pub space: Space,
    pub cfg: HsConfig,
}

impl<'a, F: CurrentField + ?Sized> Searcher<'a, F> {
    pub fn new(field: &'a F, space: Space, cfg: HsConfig) -> Self {
        Self { field, space, cfg }
    }

    fn dynamics(&self) -> Dynamics<'a, F> {
        Dynamics::new(self.space, self.cfg.speed, self.field)
    }

    /// Evolves one trajectory from `launch` with initial `heading` until a
    /// stopping rule fires.
    pub fn evolve(&self, launch: Launch, heading: f64, shoot_index: usize, goal: Point) -> ShotTrajectory {
        let dynamics = self.dynamics();
        let steps = steps_per_interval(self.cfg.tau, self.cfg.dt);
        let mut states = vec![TrajectoryState::new(launch.pos, heading, launch.t)];
        let mut iteration = launch.iteration;
        for _ in 0..self.cfg.max_checkpoints {
            let new_from = states.len();
            let mut failed: Option<DynamicsError> = None;
            for _ in 0..steps {
                let cur = states[states.len() - 1];
                match dynamics.step(&cur, self.cfg.dt) {
                    Ok(next) => states.push(next),
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            iteration += 1;
            if let Some(e) = failed {
                // the step left the usable domain; treat like a landfall there
                log::debug!("trajectory {shoot_index} stopped by {e}");
                let keep = (new_from..states.len())
                    .find(|&i| self.field.is_land(states[i].pos))
                    .unwrap_or(states.len());
                states.truncate(keep.max(1));
                return ShotTrajectory {
                    states,
                    status: ShotStatus::HitLand,
                    shoot_index,
                    stop_iteration: iteration,
                };
            }
            let decision = stop_check(&states, new_from, goal, &self.cfg, self.field, &self.space);
            if decision.status != ShotStatus::Active {
                states.truncate(decision.keep.max(1));
                return ShotTrajectory {
                    states,
                    status: decision.status,
                    shoot_index,
                    stop_iteration: iteration,
                };
            }
        }
        log::warn!(
            "trajectory {shoot_index} still active after {} checkpoints; stopping it",
            self.cfg.max_checkpoints
        );
        ShotTrajectory {
            states,
            status: ShotStatus::Deviated,
            shoot_index,
            stop_iteration: iteration,
        }
    }

    /// Shoots a full fan and evolves every member. Members are independent,
    /// so they run concurrently under [`Execution::Parallel`].
    pub fn shoot(&self, launch: Launch, center: f64, amplitude: f64, goal: Point) -> Vec<ShotTrajectory> {
        let headings = shoot_fan(center, amplitude, self.cfg.n);
        let indexed: Vec<(usize, f64)> = headings.into_iter().enumerate().collect();
        self.cfg
            .execution
            .map(&indexed, |&(k, h)| self.evolve(launch, h, k, goal))
    }

    /// Orders candidates: arrivals first by arrival time, then the rest by
    /// final distance to goal; ties go to the lower shoot index.
    pub fn compare(&self, a: &ShotTrajectory, b: &ShotTrajectory, goal: Point) -> Ordering {
        let reached = |s: &ShotTrajectory| s.status == ShotStatus::ReachedGoal;
        match (reached(a), reached(b)) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (true, true) => a.last().t.total_cmp(&b.last().t),
            (false, false) => {
                let da = self.space.distance(a.last().pos, goal);
                let db = self.space.distance(b.last().pos, goal);
                da.total_cmp(&db)
            }
        }
    }

    /// Best trajectory of a fan and the checkpoint counter when the fan ended.
    pub fn select(&self, fan: Vec<ShotTrajectory>, goal: Point) -> Result<(ShotTrajectory, usize), SearchError> {
        if fan.iter().all(|s| s.status == ShotStatus::HitLand && s.states.len() <= 1) {
            return Err(SearchError::AllTrajectoriesDead);
        }
        let end_iter = fan.iter().map(|s| s.stop_iteration).max().unwrap_or(0);
        let winner = fan
            .into_iter()
            .filter(|s| !(s.status == ShotStatus::HitLand && s.states.len() <= 1))
            .min_by(|a, b| self.compare(a, b, goal).then(a.shoot_index.cmp(&b.shoot_index)))
            .expect("at least one live trajectory");
        Ok((winner, end_iter))
    }

    /// Exploration: a fan of amplitude `amplitude` centred on `center`.
    pub fn explore(&self, launch: Launch, goal: Point, center: f64, amplitude: f64) -> Result<(ShotTrajectory, usize), SearchError> {
        if self.field.is_land(launch.pos) {
            return Err(SearchError::StartOnLand(launch.pos));
        }
        let fan = self.shoot(launch, center, amplitude, goal);
        self.select(fan, goal)
    }

    /// Refinement: a narrow fan around the winner's launch heading, shot
    /// from the winner's launch point. The previous winner is kept unless a
    /// refined trajectory is strictly better.
    pub fn refine(&self, winner: ShotTrajectory, start_iter: usize, goal: Point) -> Result<(ShotTrajectory, usize), SearchError> {
        let l = *winner.launch();
        let launch = Launch {
            pos: l.pos,
            t: l.t,
            iteration: start_iter,
        };
        let fan = self.shoot(launch, l.alpha, self.cfg.gamma_b, goal);
        let (best, end_iter) = self.select(fan, goal)?;
        if self.compare(&winner, &best, goal) == Ordering::Less {
            Ok((winner, end_iter))
        } else {
            Ok((best, end_iter))
        }
    }

    /// Alternates exploration and refinement until a trajectory arrives.
    pub fn hybrid_search(&self, start: Point, goal: Point) -> Result<Route, SearchError> {
        self.cfg.validate()?;
        if self.field.is_land(start) {
            return Err(SearchError::StartOnLand(start));
        }
        let mut legs: Vec<ShotTrajectory> = Vec::new();
        let mut launch = Launch {
            pos: start,
            t: 0.0,
            iteration: 0,
        };
        let finish = |legs: Vec<ShotTrajectory>, reached: bool| {
            let total_time = legs.last().map_or(0.0, |l| l.last().t);
            Route {
                legs,
                total_time,
                reached,
            }
        };
        if self.space.distance(start, goal) <= self.cfg.d {
            let stay = ShotTrajectory {
                states: vec![TrajectoryState::new(start, 0.0, 0.0)],
                status: ShotStatus::ReachedGoal,
                shoot_index: 0,
                stop_iteration: 0,
            };
            return Ok(finish(vec![stay], true));
        }
        for outer in 0..self.cfg.max_outer {
            let center = self.space.bearing(launch.pos, goal)?;
            let (explored, _) = self.explore(launch, goal, center, self.cfg.gamma)?;
            let winner = if explored.status == ShotStatus::ReachedGoal {
                explored
            } else {
                self.refine(explored, launch.iteration, goal)?.0
            };
            log::debug!(
                "leg {outer}: {:?} after {} states, {:.6} from goal",
                winner.status,
                winner.states.len(),
                self.space.distance(winner.last().pos, goal)
            );
            let reached = winner.status == ShotStatus::ReachedGoal;
            let end = *winner.last();
            launch = Launch {
                pos: end.pos,
                t: end.t,
                iteration: winner.stop_iteration,
            };
            legs.push(winner);
            if reached {
                return Ok(finish(legs, true));
            }
        }
        Err(SearchError::RouteNotFound {
            outer: self.cfg.max_outer,
            partial: Box::new(finish(legs, false)),
        })
    }
}

/// Convenience wrapper around [`Searcher::hybrid_search`].
pub fn hybrid_search<F: CurrentField + ?Sized>(
    start: Point,
    goal: Point,
    cfg: &HsConfig,
    field: &F,
    space: Space,
) -> Result<Route, SearchError> {
    Searcher::new(field, space, *cfg).hybrid_search(start, goal)
}

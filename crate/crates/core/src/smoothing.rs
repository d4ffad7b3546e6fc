//! Discrete-variational smoothing of piecewise routes.
//!
//! The travel-time functional has the unconstrained Lagrangian
//! `L(q, qdot) = dt/ds`, the positive root of
//! `|qdot - w(q) tdot|^2 = V^2 tdot^2`. Its square is regular, so the
//! discrete Lagrangian is the trapezoidal rule applied to `L^2`:
//!
//! ```text
//! Ld(q0, q1; h) = h/2 * ( L^2(q0, (q1-q0)/h) + L^2(q1, (q1-q0)/h) )
//! ```
//!
//! Each Newton-Jacobi sweep freezes the neighbours of every interior point
//! and takes one Newton step on `D2 Ld(q[k-1], q) + D1 Ld(q, q[k+1]) = 0`,
//! all points updated from the same snapshot.
//!
//! On the sphere the points stay in longitude/latitude and each evaluation of
//! `L` converts the coordinate velocity to kilometres per hour with the
//! `cos(latitude)` of the point it is evaluated at.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::field::{CurrentField, FieldError, FieldSample};
use crate::geometry::{normalize_longitude, Point, Space, SphereParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error("current at ({}, {}) is too close to the vessel speed", .0.x1, .0.x2)]
    CurrentExceedsSpeed(Point),
    #[error("singular Newton system at interior point {0}")]
    SingularHessian(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("a discrete route needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("sweep {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<SmoothingError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingConfig {
    /// Newton-Jacobi sweeps.
    pub iterations: usize,
    /// Relative finite-difference step for derivatives of `Ld`.
    pub fd_step: f64,
    /// Minimum allowed `V^2 - |w|^2`, as a fraction of `V^2`.
    pub singular_margin: f64,
    /// Segments after resampling (`M`; the route gets `M + 1` points).
    pub segments: usize,
    /// Shorten a sweep whose full step would raise the discrete action.
    pub safeguard: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            fd_step: 1e-6,
            singular_margin: 1e-4,
            segments: 200,
            safeguard: true,
            execution: Execution::default(),
        }
    }
}

impl SmoothingConfig {
    pub fn spherical() -> Self {
        Self {
            iterations: 2_000,
            ..Self::default()
        }
    }
}

/// Equally timed points with fixed endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRoute {
    pub points: Vec<Point>,
    /// Time per segment.
    pub h: f64,
    pub space: Space,
}

impl DiscreteRoute {
    pub fn new(points: Vec<Point>, h: f64, space: Space) -> Result<Self, SmoothingError> {
        if points.len() < 3 {
            return Err(SmoothingError::TooFewPoints(points.len()));
        }
        if !(h > 0.0) {
            return Err(SmoothingError::BadTimeStep(h));
        }
        Ok(Self { points, h, space })
    }

    /// Resamples a timed polyline at `segments + 1` uniform times by linear
    /// interpolation. Input times must be nondecreasing.
    pub fn resample(timed: &[(Point, f64)], segments: usize, space: Space) -> Result<Self, SmoothingError> {
        if timed.len() < 2 || segments < 2 {
            return Err(SmoothingError::TooFewPoints(timed.len().min(segments + 1)));
        }
        let (t0, t1) = (timed[0].1, timed[timed.len() - 1].1);
        let h = (t1 - t0) / segments as f64;
        if !(h > 0.0) {
            return Err(SmoothingError::BadTimeStep(h));
        }
        let unwrap = |p: Point, reference: Point| match space {
            Space::Spherical(sp) => Point::new(reference.x1 + normalize_longitude(p.x1 - reference.x1, sp.kappa), p.x2),
            Space::Euclidean => p,
        };
        let mut points = Vec::with_capacity(segments + 1);
        points.push(timed[0].0);
        let mut j = 0;
        for i in 1..segments {
            let t = t0 + h * i as f64;
            while j + 2 < timed.len() && timed[j + 1].1 < t {
                j += 1;
            }
            let (a, ta) = timed[j];
            let (b, tb) = timed[j + 1];
            let b = unwrap(b, a);
            let f = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 1.0 };
            points.push(space.normalize(a + (b - a) * f));
        }
        points.push(timed[timed.len() - 1].0);
        Self::new(points, h, space)
    }
}

/// Time rate `dt/ds` of moving with ground velocity `qdot` through current
/// `w` at water speed `V`: the positive root of
/// `(V^2 - W^2) tdot^2 + 2 (qdot . w) tdot - |qdot|^2 = 0`.
pub fn lagrangian_hat(qdot: Point, w: FieldSample, speed: f64, margin: f64) -> Option<f64> {
    let v2 = speed * speed;
    let gap = v2 - (w.w1 * w.w1 + w.w2 * w.w2);
    if gap < margin * v2 {
        return None;
    }
    let along = qdot.x1 * w.w1 + qdot.x2 * w.w2;
    let x2 = qdot.dot(qdot);
    Some((-along + (along * along + x2 * gap).sqrt()) / gap)
}

/// Newton-Jacobi smoother. On the sphere, `speed` is in km/h and route
/// time steps are in hours.
pub struct Smoother<'a, F: ?Sized> {
    pub field: &'a F,
    pub speed: f64,
    pub cfg: SmoothingConfig,
    pub sphere: Option<SphereParams>,
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTrace {
    /// Discrete action before any sweep, then after each sweep.
    pub action: Vec<f64>,
    pub residual_before: f64,
    pub residual_after: f64,
    pub sweeps: usize,
}

impl<'a, F: CurrentField + ?Sized> Smoother<'a, F> {
    pub fn new(field: &'a F, speed: f64, cfg: SmoothingConfig) -> Self {
        Self {
            field,
            speed,
            cfg,
            sphere: None,
        }
    }

    /// Smoother for longitude/latitude routes; `speed_ms` is in m/s.
    pub fn on_sphere(field: &'a F, speed_ms: f64, cfg: SmoothingConfig, sp: SphereParams) -> Self {
        Self {
            field,
            speed: speed_ms * KMH_PER_MS,
            cfg,
            sphere: Some(sp),
        }
    }

    fn l_hat(&self, q: Point, qdot: Point) -> Result<f64, SmoothingError> {
        let (v, w) = match &self.sphere {
            None => (qdot, self.field.sample(q)?),
            Some(sp) => {
                let w = self.field.sample(Point::new(normalize_longitude(q.x1, sp.kappa), q.x2))?;
                let k = sp.k_km();
                (
                    Point::new(qdot.x1 * k * (q.x2 * sp.kappa).cos(), qdot.x2 * k),
                    FieldSample::new(w.w1 * KMH_PER_MS, w.w2 * KMH_PER_MS),
                )
            }
        };
        lagrangian_hat(v, w, self.speed, self.cfg.singular_margin).ok_or(SmoothingError::CurrentExceedsSpeed(q))
    }

    pub fn discrete_lagrangian(&self, q0: Point, q1: Point, h: f64) -> Result<f64, SmoothingError> {
        let qdot = (q1 - q0) * (1.0 / h);
        let a = self.l_hat(q0, qdot)?;
        let b = self.l_hat(q1, qdot)?;
        Ok(0.5 * h * (a * a + b * b))
    }

    pub fn action(&self, route: &DiscreteRoute) -> Result<f64, SmoothingError> {
        route
            .points
            .windows(2)
            .map(|w| self.discrete_lagrangian(w[0], w[1], route.h))
            .sum()
    }

    fn local(&self, prev: Point, q: Point, next: Point, h: f64) -> Result<f64, SmoothingError> {
        Ok(self.discrete_lagrangian(prev, q, h)? + self.discrete_lagrangian(q, next, h)?)
    }

    fn step_size(&self, q: Point) -> f64 {
        self.cfg.fd_step * q.norm().max(1.0)
    }

    fn gradient(&self, prev: Point, q: Point, next: Point, h: f64, s: f64) -> Result<[f64; 2], SmoothingError> {
        let e1 = Point::new(s, 0.0);
        let e2 = Point::new(0.0, s);
        let g1 = (self.local(prev, q + e1, next, h)? - self.local(prev, q - e1, next, h)?) / (2.0 * s);
        let g2 = (self.local(prev, q + e2, next, h)? - self.local(prev, q - e2, next, h)?) / (2.0 * s);
        Ok([g1, g2])
    }

    /// `D2 Ld(q[k-1], q[k]) + D1 Ld(q[k], q[k+1])` by central differences.
    pub fn del_residual(&self, route: &DiscreteRoute, k: usize) -> Result<[f64; 2], SmoothingError> {
        let p = &route.points;
        assert!(k >= 1 && k + 1 < p.len(), "residual is defined on interior points only");
        self.gradient(p[k - 1], p[k], p[k + 1], route.h, self.step_size(p[k]))
    }

    /// Largest residual norm over the interior points.
    pub fn max_residual(&self, route: &DiscreteRoute) -> Result<f64, SmoothingError> {
        let n = route.points.len();
        let norms = self
            .cfg
            .execution
            .map_range(n - 2, |i| self.del_residual(route, i + 1).map(|r| r[0].hypot(r[1])));
        norms.into_iter().try_fold(0.0f64, |m, r| Ok(m.max(r?)))
    }

    /// One Newton step for interior point `k` with its neighbours frozen.
    fn newton_update(&self, route: &DiscreteRoute, k: usize) -> Result<Point, SmoothingError> {
        let p = &route.points;
        let (prev, q, next, h) = (p[k - 1], p[k], p[k + 1], route.h);
        let s = self.step_size(q);
        let e1 = Point::new(s, 0.0);
        let e2 = Point::new(0.0, s);
        // nested central differences: the Hessian is the central difference
        // of the central-difference gradient
        let g = self.gradient(prev, q, next, h, s)?;
        let gp1 = self.gradient(prev, q + e1, next, h, s)?;
        let gm1 = self.gradient(prev, q - e1, next, h, s)?;
        let gp2 = self.gradient(prev, q + e2, next, h, s)?;
        let gm2 = self.gradient(prev, q - e2, next, h, s)?;
        let h11 = (gp1[0] - gm1[0]) / (2.0 * s);
        let h21 = (gp1[1] - gm1[1]) / (2.0 * s);
        let h12 = (gp2[0] - gm2[0]) / (2.0 * s);
        let h22 = (gp2[1] - gm2[1]) / (2.0 * s);
        let off = 0.5 * (h12 + h21);
        let det = h11 * h22 - off * off;
        if !(det.abs() >= 1e-12) {
            return Err(SmoothingError::SingularHessian(k));
        }
        let dx = (-g[0] * h22 + g[1] * off) / det;
        let dy = (-g[1] * h11 + g[0] * off) / det;
        Ok(Point::new(q.x1 + dx, q.x2 + dy))
    }

    /// One Jacobi sweep: every interior point updated from the same snapshot.
    pub fn newton_jacobi_sweep(&self, route: &DiscreteRoute) -> Result<DiscreteRoute, SmoothingError> {
        let n = route.points.len();
        let updates = self.cfg.execution.map_range(n - 2, |i| self.newton_update(route, i + 1));
        let mut points = Vec::with_capacity(n);
        points.push(route.points[0]);
        for u in updates {
            points.push(u?);
        }
        points.push(route.points[n - 1]);
        Ok(DiscreteRoute {
            points,
            h: route.h,
            space: route.space,
        })
    }

    /// Takes the full sweep if it does not raise the action, otherwise the
    /// longest of `1/2, 1/4, ...` of it that does. Returns the number of
    /// halvings used.
    fn accept(&self, current: &DiscreteRoute, full: DiscreteRoute, last: f64) -> Option<(DiscreteRoute, f64, u32)> {
        if let Ok(a) = self.action(&full) {
            if a <= last {
                return Some((full, a, 0));
            }
        }
        let mut lambda = 1.0;
        for halvings in 1..=MAX_HALVINGS {
            lambda *= 0.5;
            let points = current
                .points
                .iter()
                .zip(&full.points)
                .map(|(&q, &p)| q + (p - q) * lambda)
                .collect();
            let candidate = DiscreteRoute { points, ..full.clone() };
            if let Ok(a) = self.action(&candidate) {
                if a <= last {
                    return Some((candidate, a, halvings));
                }
            }
        }
        None
    }

    /// Runs up to `cfg.iterations` sweeps, stopping early once no point moves
    /// more than `1e-12`.
    pub fn smooth(&self, route: &DiscreteRoute) -> Result<(DiscreteRoute, SmoothingTrace), SmoothingError> {
        let at = |iteration: usize| move |e: SmoothingError| SmoothingError::AtIteration {
            iteration,
            source: Box::new(e),
        };
        let mut current = route.clone();
        let mut action = vec![self.action(&current).map_err(at(0))?];
        let residual_before = self.max_residual(&current).map_err(at(0))?;
        let mut sweeps = 0;
        let mut shortened = 0;
        for it in 0..self.cfg.iterations {
            let last = action[action.len() - 1];
            let full = self.newton_jacobi_sweep(&current).map_err(at(it))?;
            let (next, next_action) = if self.cfg.safeguard {
                match self.accept(&current, full, last) {
                    Some((next, a, halvings)) => {
                        shortened += usize::from(halvings > 0);
                        (next, a)
                    }
                    None => {
                        log::debug!("sweep {it}: no shortened step lowers the action; stopping");
                        break;
                    }
                }
            } else {
                let a = self.action(&full).map_err(at(it))?;
                (full, a)
            };
            let moved = current
                .points
                .iter()
                .zip(&next.points)
                .map(|(a, b)| (*b - *a).norm())
                .fold(0.0f64, f64::max);
            current = next;
            sweeps += 1;
            action.push(next_action);
            if moved < 1e-12 {
                break;
            }
        }
        if shortened > 0 {
            log::debug!("{shortened} of {sweeps} sweeps were shortened");
        }
        let residual_after = self.max_residual(&current).map_err(at(sweeps))?;
        Ok((
            current,
            SmoothingTrace {
                action,
                residual_before,
                residual_after,
                sweeps,
            },
        ))
    }
}

const MAX_HALVINGS: u32 = 30;

/// Seconds per hour; sphere routes are smoothed in km, km/h and hours.
const HOUR: f64 = 3600.0;
const KMH_PER_MS: f64 = 3.6;

/// Result of smoothing a route in its own space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedRoute {
    pub route: DiscreteRoute,
    pub trace: SmoothingTrace,
}

/// Smooths `route` in whichever space it lives in; on the sphere the
/// sweeps run in km and hours.
pub fn smooth<F: CurrentField + ?Sized>(
    route: &DiscreteRoute,
    cfg: &SmoothingConfig,
    speed: f64,
    field: &F,
) -> Result<SmoothedRoute, SmoothingError> {
    match route.space {
        Space::Euclidean => {
            let (out, trace) = Smoother::new(field, speed, *cfg).smooth(route)?;
            Ok(SmoothedRoute { route: out, trace })
        }
        Space::Spherical(sp) => {
            // unwrap longitudes so no segment jumps across the date line
            let mut points = Vec::with_capacity(route.points.len());
            points.push(route.points[0]);
            for &p in &route.points[1..] {
                let prev: Point = points[points.len() - 1];
                points.push(Point::new(prev.x1 + normalize_longitude(p.x1 - prev.x1, sp.kappa), p.x2));
            }
            let local = DiscreteRoute {
                points,
                h: route.h / HOUR,
                space: route.space,
            };
            let (out, trace) = Smoother::on_sphere(field, speed, *cfg, sp).smooth(&local)?;
            let n = out.points.len();
            let points = out
                .points
                .iter()
                .enumerate()
                .map(|(i, &p)| match i {
                    0 => route.points[0],
                    i if i == n - 1 => route.points[n - 1],
                    _ => route.space.normalize(p),
                })
                .collect();
            Ok(SmoothedRoute {
                route: DiscreteRoute {
                    points,
                    h: route.h,
                    space: route.space,
                },
                trace,
            })
        }
    }
}

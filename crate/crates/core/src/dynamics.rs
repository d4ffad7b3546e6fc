//! Zermelo dynamics on the plane and the sphere, and the fixed-step RK4
//! integrator that evolves `(x1, x2, alpha)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{CurrentField, FieldError, FieldJacobian, FieldSample};
use crate::geometry::{wrap_angle, Point, Space, SphereParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("latitude {0} is too close to a pole")]
    PoleSingularity(f64),
    #[error("integration step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<DynamicsError>,
    },
}

impl DynamicsError {
    /// The underlying error, with step wrappers removed.
    pub fn root(&self) -> &DynamicsError {
        match self {
            DynamicsError::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Position, heading and elapsed time of a vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub pos: Point,
    /// Heading over water in radians, counterclockwise from east.
    pub alpha: f64,
    pub t: f64,
}

impl TrajectoryState {
    pub fn new(pos: Point, alpha: f64, t: f64) -> Self {
        Self {
            pos,
            alpha: wrap_angle(alpha),
            t,
        }
    }
}

/// Time derivatives of `(x1, x2, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivative {
    pub dx1: f64,
    pub dx2: f64,
    pub dalpha: f64,
}

/// Plane dynamics: ground velocity is `V (cos a, sin a) + w` and the heading
/// follows the Zermelo equation.
pub fn rhs_plane(alpha: f64, speed: f64, w: FieldSample, j: FieldJacobian) -> Derivative {
    let (s, c) = alpha.sin_cos();
    Derivative {
        dx1: speed * c + w.w1,
        dx2: speed * s + w.w2,
        dalpha: s * s * j.w21 + s * c * (j.w11 - j.w22) - c * c * j.w12,
    }
}

/// Sphere dynamics with `x1` longitude and `x2` latitude in units of
/// `kappa` radians. `w` is in m/s on the local east-north frame and `j` is
/// per angular unit; the returned position rates are angular units per
/// second and the heading rate is radians per second.
pub fn rhs_sphere(
    pos: Point,
    alpha: f64,
    speed: f64,
    w: FieldSample,
    j: FieldJacobian,
    sp: &SphereParams,
) -> Result<Derivative, DynamicsError> {
    let lat = pos.x2 * sp.kappa;
    let cos_lat = lat.cos();
    if cos_lat < 1e-6 {
        return Err(DynamicsError::PoleSingularity(pos.x2));
    }
    let sec_lat = 1.0 / cos_lat;
    let k = sp.k_m();
    let (s, c) = alpha.sin_cos();
    // [c s] . [[sec w11, w12], [sec w21, w22]] . [s, -c]^T
    let bracket = c * (sec_lat * j.w11 * s - j.w12 * c) + s * (sec_lat * j.w21 * s - j.w22 * c);
    let curvature = c * lat.tan() * (speed + w.w1 * c + w.w2 * s);
    Ok(Derivative {
        dx1: (speed * c + w.w1) / (k * cos_lat),
        dx2: (speed * s + w.w2) / k,
        dalpha: bracket / k - sp.kappa * curvature / k,
    })
}

/// A vessel with constant speed over water moving through `field`.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics<'a, F: ?Sized> {
    pub space: Space,
    pub speed: f64,
    pub field: &'a F,
}

impl<'a, F: CurrentField + ?Sized> Dynamics<'a, F> {
    pub fn new(space: Space, speed: f64, field: &'a F) -> Self {
        Self { space, speed, field }
    }

    pub fn rhs(&self, pos: Point, alpha: f64) -> Result<Derivative, DynamicsError> {
        let pos = self.space.normalize(pos);
        let w = self.field.sample(pos)?;
        let j = self.field.jacobian(pos)?;
        match &self.space {
            Space::Euclidean => Ok(rhs_plane(alpha, self.speed, w, j)),
            Space::Spherical(sp) => rhs_sphere(pos, alpha, self.speed, w, j, sp),
        }
    }

    pub fn step(&self, s: &TrajectoryState, dt: f64) -> Result<TrajectoryState, DynamicsError> {
        let next = rk4_step(s, dt, |p, a| self.rhs(p, a))?;
        Ok(TrajectoryState {
            pos: self.space.normalize(next.pos),
            ..next
        })
    }

    pub fn integrate_leg(&self, s0: &TrajectoryState, tau: f64, dt: f64) -> Result<Vec<TrajectoryState>, DynamicsError> {
        integrate_leg(s0, tau, dt, |s| self.step(s, dt))
    }
}

/// One classical fourth-order Runge-Kutta step of size `dt`.
pub fn rk4_step<R>(s: &TrajectoryState, dt: f64, rhs: R) -> Result<TrajectoryState, DynamicsError>
where
    R: Fn(Point, f64) -> Result<Derivative, DynamicsError>,
{
    let (p, a) = (s.pos, s.alpha);
    let k1 = rhs(p, a)?;
    let half = 0.5 * dt;
    let k2 = rhs(Point::new(p.x1 + half * k1.dx1, p.x2 + half * k1.dx2), a + half * k1.dalpha)?;
    let k3 = rhs(Point::new(p.x1 + half * k2.dx1, p.x2 + half * k2.dx2), a + half * k2.dalpha)?;
    let k4 = rhs(Point::new(p.x1 + dt * k3.dx1, p.x2 + dt * k3.dx2), a + dt * k3.dalpha)?;
    let sixth = dt / 6.0;
    Ok(TrajectoryState {
        pos: Point::new(
            p.x1 + sixth * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1),
            p.x2 + sixth * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2),
        ),
        alpha: wrap_angle(a + sixth * (k1.dalpha + 2.0 * k2.dalpha + 2.0 * k3.dalpha + k4.dalpha)),
        t: s.t + dt,
    })
}

/// Number of `dt` steps in a checkpoint interval `tau`.
pub fn steps_per_interval(tau: f64, dt: f64) -> usize {
    (tau / dt).round().max(1.0) as usize
}

/// Advances `s0` through `round(tau / dt)` steps, returning every new state.
pub fn integrate_leg<S>(s0: &TrajectoryState, tau: f64, dt: f64, step: S) -> Result<Vec<TrajectoryState>, DynamicsError>
where
    S: Fn(&TrajectoryState) -> Result<TrajectoryState, DynamicsError>,
{
    let n = steps_per_interval(tau, dt);
    let mut out = Vec::with_capacity(n);
    let mut cur = *s0;
    for i in 0..n {
        cur = step(&cur).map_err(|e| DynamicsError::Step {
            step: i,
            source: Box::new(e),
        })?;
        out.push(cur);
    }
    Ok(out)
}

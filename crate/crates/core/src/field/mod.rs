//! Stationary current fields.
//!
//! A field answers three questions at a point: the current vector, its
//! Jacobian in coordinate units of the space, and whether the point is land.
//! Land is reported through [`CurrentField::is_land`] only; samples never
//! carry sentinel values.

mod analytic;
mod grid;

pub use analytic::{AffineField, CircularField, FourVortices};
pub use grid::{GridField, GridFieldError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldSample {
    /// East component.
    pub w1: f64,
    /// North component.
    pub w2: f64,
}

impl FieldSample {
    pub const ZERO: FieldSample = FieldSample { w1: 0.0, w2: 0.0 };

    pub const fn new(w1: f64, w2: f64) -> Self {
        Self { w1, w2 }
    }

    pub fn magnitude(&self) -> f64 {
        self.w1.hypot(self.w2)
    }

    pub fn as_point(&self) -> Point {
        Point::new(self.w1, self.w2)
    }
}

/// Partial derivatives `wij = d w_i / d x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldJacobian {
    pub w11: f64,
    pub w12: f64,
    pub w21: f64,
    pub w22: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FieldError {
    #[error("point ({}, {}) is outside the field domain", .0.x1, .0.x2)]
    OutOfDomain(Point),
    #[error("every corner of the cell around ({}, {}) is land", .0.x1, .0.x2)]
    AllLandCell(Point),
}

/// A stationary current field.
pub trait CurrentField: Sync {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError>;

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError>;

    fn is_land(&self, _p: Point) -> bool {
        false
    }
}

impl<F: CurrentField + ?Sized> CurrentField for &F {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        (**self).sample(p)
    }

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError> {
        (**self).jacobian(p)
    }

    fn is_land(&self, p: Point) -> bool {
        (**self).is_land(p)
    }
}

impl<F: CurrentField + ?Sized> CurrentField for Box<F> {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        (**self).sample(p)
    }

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError> {
        (**self).jacobian(p)
    }

    fn is_land(&self, p: Point) -> bool {
        (**self).is_land(p)
    }
}

/// Central finite-difference Jacobian of any field, `step` in coordinate units.
pub fn finite_difference_jacobian<F: CurrentField + ?Sized>(
    field: &F,
    p: Point,
    step: f64,
) -> Result<FieldJacobian, FieldError> {
    let e1 = Point::new(step, 0.0);
    let e2 = Point::new(0.0, step);
    let (a, b) = (field.sample(p + e1)?, field.sample(p - e1)?);
    let (c, d) = (field.sample(p + e2)?, field.sample(p - e2)?);
    let two_h = 2.0 * step;
    Ok(FieldJacobian {
        w11: (a.w1 - b.w1) / two_h,
        w21: (a.w2 - b.w2) / two_h,
        w12: (c.w1 - d.w1) / two_h,
        w22: (c.w2 - d.w2) / two_h,
    })
}

use serde::{Deserialize, Serialize};

use super::{CurrentField, FieldError, FieldJacobian, FieldSample};
use crate::geometry::Point;

/// Clockwise rotation about `center`, speed growing linearly with radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularField {
    pub center: Point,
    pub scale: f64,
}

impl Default for CircularField {
    fn default() -> Self {
        Self {
            center: Point::new(-3.0, -1.0),
            scale: 0.05,
        }
    }
}

impl CurrentField for CircularField {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        let s = self.scale;
        Ok(FieldSample::new(
            s * (p.x2 - self.center.x2),
            -s * (p.x1 - self.center.x1),
        ))
    }

    fn jacobian(&self, _p: Point) -> Result<FieldJacobian, FieldError> {
        Ok(FieldJacobian {
            w11: 0.0,
            w12: self.scale,
            w21: -self.scale,
            w22: 0.0,
        })
    }
}

/// Sum of four rational vortices:
/// `W = s * (-R(2,2) - R(4,4) - R(2,5) + R(5,1))` with
/// `R(a,b) = [-(x2-b), x1-a] / (3((x1-a)^2 + (x2-b)^2) + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVortices {
    pub scale: f64,
}

impl Default for FourVortices {
    fn default() -> Self {
        Self { scale: 1.7 }
    }
}

const VORTICES: [(f64, f64, f64); 4] = [
    (2.0, 2.0, -1.0),
    (4.0, 4.0, -1.0),
    (2.0, 5.0, -1.0),
    (5.0, 1.0, 1.0),
];

impl CurrentField for FourVortices {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        let (mut w1, mut w2) = (0.0, 0.0);
        for (a, b, sign) in VORTICES {
            let (dx, dy) = (p.x1 - a, p.x2 - b);
            let den = 3.0 * (dx * dx + dy * dy) + 1.0;
            w1 += sign * -dy / den;
            w2 += sign * dx / den;
        }
        Ok(FieldSample::new(self.scale * w1, self.scale * w2))
    }

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError> {
        let mut j = FieldJacobian::default();
        for (a, b, sign) in VORTICES {
            let (dx, dy) = (p.x1 - a, p.x2 - b);
            let den = 3.0 * (dx * dx + dy * dy) + 1.0;
            let den2 = den * den;
            j.w11 += sign * 6.0 * dx * dy / den2;
            j.w12 += sign * (-1.0 / den + 6.0 * dy * dy / den2);
            j.w21 += sign * (1.0 / den - 6.0 * dx * dx / den2);
            j.w22 += sign * -6.0 * dx * dy / den2;
        }
        let s = self.scale;
        Ok(FieldJacobian {
            w11: s * j.w11,
            w12: s * j.w12,
            w21: s * j.w21,
            w22: s * j.w22,
        })
    }
}

/// `w(p) = offset + gradient * (p - origin)`; covers uniform and shear currents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub origin: Point,
    pub offset: FieldSample,
    pub gradient: FieldJacobian,
}

impl AffineField {
    pub fn uniform(w1: f64, w2: f64) -> Self {
        Self {
            origin: Point::default(),
            offset: FieldSample::new(w1, w2),
            gradient: FieldJacobian::default(),
        }
    }

    /// `w = (k * x2, 0)`.
    pub fn shear(k: f64) -> Self {
        Self {
            origin: Point::default(),
            offset: FieldSample::ZERO,
            gradient: FieldJacobian {
                w12: k,
                ..FieldJacobian::default()
            },
        }
    }
}

impl CurrentField for AffineField {
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        let d = p - self.origin;
        let g = &self.gradient;
        Ok(FieldSample::new(
            self.offset.w1 + g.w11 * d.x1 + g.w12 * d.x2,
            self.offset.w2 + g.w21 * d.x1 + g.w22 * d.x2,
        ))
    }

    fn jacobian(&self, _p: Point) -> Result<FieldJacobian, FieldError> {
        Ok(self.gradient)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::finite_difference_jacobian;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn circular_values() {
        let f = CircularField::default();
        assert_eq!(f.sample(Point::new(-3.0, -1.0)).unwrap(), FieldSample::ZERO);
        let w = f.sample(Point::new(-3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(w.w1, 0.05);
        assert_abs_diff_eq!(w.w2, 0.0);
        let w = f.sample(Point::new(3.0, 2.0)).unwrap();
        assert_abs_diff_eq!(w.w1, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w2, -0.3, epsilon = 1e-15);
        let j = f.jacobian(Point::new(10.0, -7.0)).unwrap();
        assert_eq!((j.w11, j.w12, j.w21, j.w22), (0.0, 0.05, -0.05, 0.0));
        assert!(!f.is_land(Point::new(1e6, 0.0)));
    }

    #[test]
    fn four_vortices_at_origin() {
        // hand evaluation of the four terms at (0, 0):
        // R(2,2) = (2, -2)/25, R(4,4) = (4, -4)/97, R(2,5) = (5, -2)/88, R(5,1) = (1, -5)/79
        let x = -2.0 / 25.0 - 4.0 / 97.0 - 5.0 / 88.0 + 1.0 / 79.0;
        let y = 2.0 / 25.0 + 4.0 / 97.0 + 2.0 / 88.0 - 5.0 / 79.0;
        let w = FourVortices::default().sample(Point::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(w.w1, 1.7 * x, epsilon = 1e-14);
        assert_abs_diff_eq!(w.w2, 1.7 * y, epsilon = 1e-14);
        assert_abs_diff_eq!(w.w1, -0.281, epsilon = 5e-4);
        assert_abs_diff_eq!(w.w2, 0.137, epsilon = 5e-4);
    }

    #[test]
    fn four_vortices_center_term_vanishes() {
        let (dx, dy) = (0.0f64, 0.0f64);
        let den = 3.0 * (dx * dx + dy * dy) + 1.0;
        assert_eq!((-dy / den, dx / den), (0.0, 0.0));
        // remaining three vortices alone at (2,2)
        let f = FourVortices::default();
        let w = f.sample(Point::new(2.0, 2.0)).unwrap();
        let mut expect = (0.0, 0.0);
        for (a, b, sign) in VORTICES.iter().skip(1) {
            let (dx, dy) = (2.0 - a, 2.0 - b);
            let den = 3.0 * (dx * dx + dy * dy) + 1.0;
            expect.0 += sign * -dy / den * 1.7;
            expect.1 += sign * dx / den * 1.7;
        }
        assert_abs_diff_eq!(w.w1, expect.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w2, expect.1, epsilon = 1e-15);
    }

    #[test]
    fn four_vortices_peak_speed_just_below_one() {
        let f = FourVortices::default();
        let mut max = 0.0f64;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let p = Point::new(-2.0 + 0.01 * i as f64, -4.0 + 0.01 * j as f64);
                max = max.max(f.sample(p).unwrap().magnitude());
            }
        }
        assert!(max < 1.0 && max > 0.9, "max |W| = {max}");
    }

    #[test]
    fn four_vortices_jacobian_at_origin() {
        let f = FourVortices::default();
        let p = Point::new(0.0, 0.0);
        let a = f.jacobian(p).unwrap();
        let n = finite_difference_jacobian(&f, p, 1e-5).unwrap();
        for (x, y) in [(a.w11, n.w11), (a.w12, n.w12), (a.w21, n.w21), (a.w22, n.w22)] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-6);
        }
    }

    #[test]
    fn shear_field() {
        let f = AffineField::shear(0.3);
        let w = f.sample(Point::new(4.0, 2.0)).unwrap();
        assert_abs_diff_eq!(w.w1, 0.6, epsilon = 1e-15);
        assert_eq!(w.w2, 0.0);
        assert_eq!(AffineField::uniform(1.0, 2.0).jacobian(Point::default()).unwrap(), FieldJacobian::default());
    }

    proptest! {
        #[test]
        fn circular_is_tangential(x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let f = CircularField::default();
            let p = Point::new(x, y);
            let w = f.sample(p).unwrap();
            let r = p - f.center;
            prop_assert!((w.as_point().dot(r)).abs() < 1e-12);
            prop_assert!((w.magnitude() - 0.05 * r.norm()).abs() < 1e-12);
        }

        #[test]
        fn four_vortices_jacobian_matches_fd(x in -2.0..8.0f64, y in -4.0..6.0f64) {
            let f = FourVortices::default();
            let p = Point::new(x, y);
            let a = f.jacobian(p).unwrap();
            let n = finite_difference_jacobian(&f, p, 1e-5).unwrap();
            prop_assert!((a.w11 - n.w11).abs() < 1e-6);
            prop_assert!((a.w12 - n.w12).abs() < 1e-6);
            prop_assert!((a.w21 - n.w21).abs() < 1e-6);
            prop_assert!((a.w22 - n.w22).abs() < 1e-6);
        }
    }
}

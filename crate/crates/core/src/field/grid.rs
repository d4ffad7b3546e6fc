use thiserror::Error;

use super::{CurrentField, FieldError, FieldJacobian, FieldSample};
use crate::geometry::{Point, Space};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridFieldError {
    #[error("{axis} axis is not strictly increasing at index {index}")]
    NonMonotonicAxis { axis: &'static str, index: usize },
    #[error("{axis} axis needs at least 2 nodes, got {len}")]
    AxisTooShort { axis: &'static str, len: usize },
    #[error("{what} has {got} values, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite {what} value at node ({i1}, {i2})")]
    NonFinite { what: &'static str, i1: usize, i2: usize },
}

/// Currents sampled on a rectilinear grid, arrays stored row-major as
/// `[x2][x1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    space: Space,
    x1_axis: Vec<f64>,
    x2_axis: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    land: Vec<bool>,
}

fn check_axis(axis: &[f64], name: &'static str) -> Result<(), GridFieldError> {
    if axis.len() < 2 {
        return Err(GridFieldError::AxisTooShort {
            axis: name,
            len: axis.len(),
        });
    }
    for (i, w) in axis.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(GridFieldError::NonMonotonicAxis {
                axis: name,
                index: i + 1,
            });
        }
    }
    Ok(())
}

/// Index of the cell `[axis[i], axis[i+1]]` holding `x`, with the fraction
/// across it. `None` outside the axis range.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (axis[0], axis[axis.len() - 1]);
    if !(x >= first && x <= last) {
        return None;
    }
    let upper = axis.partition_point(|&a| a <= x);
    let i = upper.saturating_sub(1).min(axis.len() - 2);
    let frac = (x - axis[i]) / (axis[i + 1] - axis[i]);
    Some((i, frac))
}

fn nearest(axis: &[f64], x: f64) -> Option<usize> {
    let (i, frac) = locate(axis, x)?;
    Some(if frac > 0.5 { i + 1 } else { i })
}

impl GridField {
    /// Builds a grid; `land[k]` true marks node `k` as land, whose `u`/`v`
    /// values are then ignored.
    pub fn new(
        space: Space,
        x1_axis: Vec<f64>,
        x2_axis: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
        land: Vec<bool>,
    ) -> Result<Self, GridFieldError> {
        check_axis(&x1_axis, "x1")?;
        check_axis(&x2_axis, "x2")?;
        let expected = x1_axis.len() * x2_axis.len();
        for (what, got) in [("u", u.len()), ("v", v.len()), ("land mask", land.len())] {
            if got != expected {
                return Err(GridFieldError::ShapeMismatch { what, got, expected });
            }
        }
        let n1 = x1_axis.len();
        for k in 0..expected {
            if land[k] {
                continue;
            }
            for (what, val) in [("u", u[k]), ("v", v[k])] {
                if !val.is_finite() {
                    return Err(GridFieldError::NonFinite {
                        what,
                        i1: k % n1,
                        i2: k / n1,
                    });
                }
            }
        }
        Ok(Self {
            space,
            x1_axis,
            x2_axis,
            u,
            v,
            land,
        })
    }

    /// Samples `f` at every node; `None` marks land.
    pub fn from_fn<F>(space: Space, x1_axis: Vec<f64>, x2_axis: Vec<f64>, f: F) -> Result<Self, GridFieldError>
    where
        F: Fn(Point) -> Option<FieldSample>,
    {
        let n = x1_axis.len() * x2_axis.len();
        let (mut u, mut v, mut land) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &x2 in &x2_axis {
            for &x1 in &x1_axis {
                match f(Point::new(x1, x2)) {
                    Some(w) => {
                        u.push(w.w1);
                        v.push(w.w2);
                        land.push(false);
                    }
                    None => {
                        u.push(0.0);
                        v.push(0.0);
                        land.push(true);
                    }
                }
            }
        }
        Self::new(space, x1_axis, x2_axis, u, v, land)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn x1_axis(&self) -> &[f64] {
        &self.x1_axis
    }

    pub fn x2_axis(&self) -> &[f64] {
        &self.x2_axis
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x2_axis.len(), self.x1_axis.len())
    }

    /// Node value, `None` on land.
    pub fn node(&self, i1: usize, i2: usize) -> Option<FieldSample> {
        let k = i2 * self.x1_axis.len() + i1;
        (!self.land[k]).then(|| FieldSample::new(self.u[k], self.v[k]))
    }

    pub fn is_land_node(&self, i1: usize, i2: usize) -> bool {
        self.land[i2 * self.x1_axis.len() + i1]
    }

    pub fn contains(&self, p: Point) -> bool {
        locate(&self.x1_axis, p.x1).is_some() && locate(&self.x2_axis, p.x2).is_some()
    }

    fn cell_spacing(axis: &[f64], x: f64) -> f64 {
        match locate(axis, x) {
            Some((i, _)) => axis[i + 1] - axis[i],
            None => axis[1] - axis[0],
        }
    }

    /// Jacobian by differences one cell wide; the flag is true when the
    /// stencil had to fall back to a one-sided difference.
    pub fn jacobian_estimate(&self, p: Point) -> Result<(FieldJacobian, bool), FieldError> {
        let h1 = Self::cell_spacing(&self.x1_axis, p.x1);
        let h2 = Self::cell_spacing(&self.x2_axis, p.x2);
        let (d1, one_sided_1) = self.directional(p, Point::new(h1, 0.0))?;
        let (d2, one_sided_2) = self.directional(p, Point::new(0.0, h2))?;
        Ok((
            FieldJacobian {
                w11: d1.w1,
                w21: d1.w2,
                w12: d2.w1,
                w22: d2.w2,
            },
            one_sided_1 || one_sided_2,
        ))
    }

    fn directional(&self, p: Point, step: Point) -> Result<(FieldSample, bool), FieldError> {
        let h = step.norm();
        let fwd = self.sample(p + step);
        let bwd = self.sample(p - step);
        match (fwd, bwd) {
            (Ok(a), Ok(b)) => Ok((FieldSample::new((a.w1 - b.w1) / (2.0 * h), (a.w2 - b.w2) / (2.0 * h)), false)),
            (Ok(a), Err(_)) => {
                let c = self.sample(p)?;
                Ok((FieldSample::new((a.w1 - c.w1) / h, (a.w2 - c.w2) / h), true))
            }
            (Err(_), Ok(b)) => {
                let c = self.sample(p)?;
                Ok((FieldSample::new((c.w1 - b.w1) / h, (c.w2 - b.w2) / h), true))
            }
            (Err(e), Err(_)) => Err(e),
        }
    }
}

impl CurrentField for GridField {
    /// Bilinear interpolation with weights renormalized over water corners.
    fn sample(&self, p: Point) -> Result<FieldSample, FieldError> {
        let (i, fx) = locate(&self.x1_axis, p.x1).ok_or(FieldError::OutOfDomain(p))?;
        let (j, fy) = locate(&self.x2_axis, p.x2).ok_or(FieldError::OutOfDomain(p))?;
        let corners = [
            (i, j, (1.0 - fx) * (1.0 - fy)),
            (i + 1, j, fx * (1.0 - fy)),
            (i, j + 1, (1.0 - fx) * fy),
            (i + 1, j + 1, fx * fy),
        ];
        let (mut wsum, mut u, mut v) = (0.0, 0.0, 0.0);
        let mut any_water = false;
        for (ci, cj, w) in corners {
            if let Some(s) = self.node(ci, cj) {
                any_water = true;
                wsum += w;
                u += w * s.w1;
                v += w * s.w2;
            }
        }
        if !any_water {
            return Err(FieldError::AllLandCell(p));
        }
        if wsum <= 0.0 {
            // point sits on a land node; zero-weight water corners carry no information
            return Err(FieldError::AllLandCell(p));
        }
        Ok(FieldSample::new(u / wsum, v / wsum))
    }

    fn jacobian(&self, p: Point) -> Result<FieldJacobian, FieldError> {
        let (jac, one_sided) = self.jacobian_estimate(p)?;
        if one_sided {
            log::debug!("one-sided grid Jacobian at ({}, {})", p.x1, p.x2);
        }
        Ok(jac)
    }

    fn is_land(&self, p: Point) -> bool {
        match (nearest(&self.x1_axis, p.x1), nearest(&self.x2_axis, p.x2)) {
            (Some(i1), Some(i2)) => self.is_land_node(i1, i2),
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_cell(u: [f64; 4], land: [bool; 4]) -> GridField {
        // nodes ordered (0,0), (1,0), (0,1), (1,1)
        GridField::new(
            Space::Euclidean,
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            u.to_vec(),
            vec![0.0; 4],
            land.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn node_and_center_values() {
        let g = unit_cell([0.0, 2.0, 0.0, 2.0], [false; 4]);
        assert_eq!(g.sample(Point::new(1.0, 0.0)).unwrap().w1, 2.0);
        assert_eq!(g.sample(Point::new(0.5, 0.5)).unwrap().w1, 1.0);
    }

    #[test]
    fn land_corner_renormalizes() {
        let g = unit_cell([0.0, 2.0, 7.0, 2.0], [false, false, true, false]);
        assert_abs_diff_eq!(g.sample(Point::new(0.5, 0.5)).unwrap().w1, 4.0 / 3.0, epsilon = 1e-15);
        let all_land = unit_cell([0.0; 4], [true; 4]);
        assert!(matches!(all_land.sample(Point::new(0.5, 0.5)), Err(FieldError::AllLandCell(_))));
    }

    #[test]
    fn out_of_domain() {
        let g = unit_cell([0.0; 4], [false; 4]);
        assert!(matches!(g.sample(Point::new(1.5, 0.5)), Err(FieldError::OutOfDomain(_))));
        assert!(matches!(g.sample(Point::new(f64::NAN, 0.5)), Err(FieldError::OutOfDomain(_))));
        assert!(g.is_land(Point::new(-0.1, 0.5)));
    }

    #[test]
    fn validation_errors() {
        let bad = GridField::new(Space::Euclidean, vec![0.0, 1.0, 1.0], vec![0.0, 1.0], vec![0.0; 6], vec![0.0; 6], vec![false; 6]);
        assert_eq!(bad, Err(GridFieldError::NonMonotonicAxis { axis: "x1", index: 2 }));
        let bad = GridField::new(Space::Euclidean, vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 3], vec![0.0; 4], vec![false; 4]);
        assert!(matches!(bad, Err(GridFieldError::ShapeMismatch { what: "u", .. })));
    }

    #[test]
    fn uniform_grid_has_zero_jacobian() {
        let axis: Vec<f64> = (0..6).map(f64::from).collect();
        let g = GridField::from_fn(Space::Euclidean, axis.clone(), axis, |_| Some(FieldSample::new(0.4, -0.2))).unwrap();
        let (j, one_sided) = g.jacobian_estimate(Point::new(2.3, 2.7)).unwrap();
        assert!(!one_sided);
        assert_eq!(j, FieldJacobian::default());
        let (_, one_sided) = g.jacobian_estimate(Point::new(0.2, 2.7)).unwrap();
        assert!(one_sided);
    }

    #[test]
    fn masked_block_is_land() {
        let axis: Vec<f64> = (0..10).map(f64::from).collect();
        let g = GridField::from_fn(Space::Euclidean, axis.clone(), axis, |p| {
            let inside = (3.0..=5.0).contains(&p.x1) && (3.0..=5.0).contains(&p.x2);
            (!inside).then_some(FieldSample::new(1.0, 0.0))
        })
        .unwrap();
        assert!(g.is_land(Point::new(4.2, 3.9)));
        assert!(g.is_land(Point::new(5.4, 4.0)));
        assert!(!g.is_land(Point::new(5.6, 4.0)));
        assert!(!g.is_land(Point::new(1.0, 1.0)));
    }

    proptest! {
        #[test]
        fn affine_fields_are_reproduced_exactly(
            a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
            d in -2.0..2.0f64, e in -2.0..2.0f64, f in -2.0..2.0f64,
            x in 0.0..4.0f64, y in -1.0..3.0f64,
        ) {
            let x1: Vec<f64> = vec![0.0, 0.5, 1.7, 2.0, 3.1, 4.0];
            let x2: Vec<f64> = vec![-1.0, 0.0, 0.25, 2.0, 3.0];
            let w = |p: Point| FieldSample::new(a + b * p.x1 + c * p.x2, d + e * p.x1 + f * p.x2);
            let g = GridField::from_fn(Space::Euclidean, x1, x2, |p| Some(w(p))).unwrap();
            let got = g.sample(Point::new(x, y)).unwrap();
            let want = w(Point::new(x, y));
            prop_assert!((got.w1 - want.w1).abs() < 1e-12);
            prop_assert!((got.w2 - want.w2).abs() < 1e-12);
        }
    }
}

//! Navigation spaces: the Euclidean plane and the sphere.
//!
//! Points on the sphere are `(longitude, latitude)` in angular units of
//! `kappa` radians (degrees by default). Headings and bearings are always
//! radians, measured counterclockwise from the east (`x1`) axis.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for spherical routing, in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6367.449;

/// Radians per degree.
pub const DEGREES: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("bearing is undefined between coincident points")]
    CoincidentPoints,
    #[error("great circle between antipodal points is not unique")]
    AntipodalPoints,
    #[error("geodesic sampling needs at least two points, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x1 * rhs, self.x2 * rhs)
    }
}

/// Sphere radius and angular unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    /// Radius in kilometres.
    pub radius_km: f64,
    /// Radians per angular coordinate unit.
    pub kappa: f64,
}

impl Default for SphereParams {
    fn default() -> Self {
        Self {
            radius_km: EARTH_RADIUS_KM,
            kappa: DEGREES,
        }
    }
}

impl SphereParams {
    pub fn with_radius_km(radius_km: f64) -> Self {
        Self {
            radius_km,
            ..Self::default()
        }
    }

    /// Kilometres per angular unit (`K = kappa * R`).
    pub fn k_km(&self) -> f64 {
        self.kappa * self.radius_km
    }

    /// Metres per angular unit, the scale used by the dynamics when speeds are in m/s.
    pub fn k_m(&self) -> f64 {
        self.k_km() * 1000.0
    }

    fn unit_vector(&self, p: Point) -> [f64; 3] {
        let (lon, lat) = (p.x1 * self.kappa, p.x2 * self.kappa);
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    fn point_from_unit(&self, v: [f64; 3]) -> Point {
        let lat = v[2].clamp(-1.0, 1.0).asin();
        let lon = v[1].atan2(v[0]);
        Point::new(normalize_longitude(lon / self.kappa, self.kappa), lat / self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Space {
    #[default]
    Euclidean,
    Spherical(SphereParams),
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    // rem_euclid maps -pi to pi already; keep the half-open interval exact
    if a <= -PI {
        a += TAU;
    }
    a
}

/// Wraps a longitude into `(-180, 180]` in units of `kappa` radians.
pub fn normalize_longitude(lon: f64, kappa: f64) -> f64 {
    wrap_angle(lon * kappa) / kappa
}

impl Space {
    pub fn sphere(&self) -> Option<&SphereParams> {
        match self {
            Space::Euclidean => None,
            Space::Spherical(sp) => Some(sp),
        }
    }

    /// Distance between two points: plain norm on the plane, great-circle
    /// kilometres on the sphere.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        match self {
            Space::Euclidean => (b - a).norm(),
            Space::Spherical(sp) => {
                let k = sp.kappa;
                let (lat1, lat2) = (a.x2 * k, b.x2 * k);
                let dlat = lat2 - lat1;
                let dlon = (b.x1 - a.x1) * k;
                let h = (dlat * 0.5).sin().powi(2)
                    + lat1.cos() * lat2.cos() * (dlon * 0.5).sin().powi(2);
                2.0 * sp.radius_km * h.sqrt().atan2((1.0 - h).max(0.0).sqrt())
            }
        }
    }

    /// Scale converting [`Space::distance`] units into the length unit of
    /// field velocities (metres on the sphere).
    pub fn distance_to_velocity_length(&self) -> f64 {
        match self {
            Space::Euclidean => 1.0,
            Space::Spherical(_) => 1000.0,
        }
    }

    /// Initial heading from `a` toward `b`, east-referenced and counterclockwise.
    pub fn bearing(&self, a: Point, b: Point) -> Result<f64, GeometryError> {
        if a == b {
            return Err(GeometryError::CoincidentPoints);
        }
        match self {
            Space::Euclidean => Ok((b.x2 - a.x2).atan2(b.x1 - a.x1)),
            Space::Spherical(sp) => {
                let k = sp.kappa;
                let (lon_i, lat_i) = (a.x1 * k, a.x2 * k);
                let (lon_j, lat_j) = (b.x1 * k, b.x2 * k);
                let (ci, si) = (lon_i.cos() * lat_i.cos(), lon_i.sin() * lat_i.cos());
                let (cj, sj) = (lon_j.cos() * lat_j.cos(), lon_j.sin() * lat_j.cos());
                let num = -cj * si + ci * sj;
                let den = -(ci * cj + si * sj) * lat_i.sin() + (ci * ci + si * si) * lat_j.sin();
                if num == 0.0 && den == 0.0 {
                    // same meridian at a pole, or coincident after normalization
                    return Err(GeometryError::CoincidentPoints);
                }
                let from_north = num.atan2(den);
                Ok(wrap_angle(PI / 2.0 - from_north))
            }
        }
    }

    /// `n` points along the shortest path from `a` to `b`, endpoints exact.
    pub fn geodesic_path(&self, a: Point, b: Point, n: usize) -> Result<Vec<Point>, GeometryError> {
        if n < 2 {
            return Err(GeometryError::TooFewPoints(n));
        }
        let last = (n - 1) as f64;
        match self {
            Space::Euclidean => Ok((0..n)
                .map(|i| match i {
                    0 => a,
                    i if i == n - 1 => b,
                    i => a + (b - a) * (i as f64 / last),
                })
                .collect()),
            Space::Spherical(sp) => {
                let u = sp.unit_vector(a);
                let v = sp.unit_vector(b);
                let cos_omega = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0);
                if cos_omega < -1.0 + 1e-12 {
                    return Err(GeometryError::AntipodalPoints);
                }
                let omega = cos_omega.acos();
                let sin_omega = omega.sin();
                Ok((0..n)
                    .map(|i| {
                        if i == 0 {
                            return a;
                        }
                        if i == n - 1 {
                            return b;
                        }
                        let f = i as f64 / last;
                        let (wa, wb) = if sin_omega < 1e-15 {
                            (1.0 - f, f)
                        } else {
                            (((1.0 - f) * omega).sin() / sin_omega, (f * omega).sin() / sin_omega)
                        };
                        sp.point_from_unit([
                            wa * u[0] + wb * v[0],
                            wa * u[1] + wb * v[1],
                            wa * u[2] + wb * v[2],
                        ])
                    })
                    .collect())
            }
        }
    }

    /// Total length of a polyline in [`Space::distance`] units.
    pub fn polyline_length(&self, points: &[Point]) -> f64 {
        points.windows(2).map(|w| self.distance(w[0], w[1])).sum()
    }

    /// Puts a point into canonical form (longitude wrapped on the sphere).
    pub fn normalize(&self, p: Point) -> Point {
        match self {
            Space::Euclidean => p,
            Space::Spherical(sp) => Point::new(normalize_longitude(p.x1, sp.kappa), p.x2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sphere() -> Space {
        Space::Spherical(SphereParams::default())
    }

    #[test]
    fn euclidean_distance_and_identity() {
        let s = Space::Euclidean;
        assert_eq!(s.distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(s.distance(Point::new(1.5, -2.0), Point::new(1.5, -2.0)), 0.0);
        assert_eq!(sphere().distance(Point::new(12.0, 40.0), Point::new(12.0, 40.0)), 0.0);
    }

    #[test]
    fn one_degree_of_equator() {
        let d = sphere().distance(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert_abs_diff_eq!(d, 111.13, epsilon = 0.02);
    }

    #[test]
    fn euclidean_bearings() {
        let s = Space::Euclidean;
        let o = Point::new(0.0, 0.0);
        assert_abs_diff_eq!(s.bearing(o, Point::new(1.0, 1.0)).unwrap(), PI / 4.0);
        assert_abs_diff_eq!(s.bearing(o, Point::new(-1.0, 0.0)).unwrap(), PI);
        assert_eq!(s.bearing(o, o), Err(GeometryError::CoincidentPoints));
    }

    /// Heading oracle: step a tiny distance along the slerp path and read the
    /// displacement in the local east-north frame.
    fn numeric_sphere_bearing(a: Point, b: Point) -> f64 {
        let sp = SphereParams::default();
        let path = sphere().geodesic_path(a, b, 2_000_001).unwrap();
        let p1 = path[1];
        let de = (p1.x1 - a.x1) * (a.x2 * sp.kappa).cos();
        let dn = p1.x2 - a.x2;
        dn.atan2(de)
    }

    #[test]
    fn spherical_bearings_match_numeric_frame() {
        let s = sphere();
        let due_east = s.bearing(Point::new(0.0, 0.0), Point::new(10.0, 0.0)).unwrap();
        assert_abs_diff_eq!(due_east, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            due_east,
            numeric_sphere_bearing(Point::new(0.0, 0.0), Point::new(10.0, 0.0)),
            epsilon = 1e-6
        );
        let north = s.bearing(Point::new(5.0, 10.0), Point::new(5.0, 20.0)).unwrap();
        assert_abs_diff_eq!(north, PI / 2.0, epsilon = 1e-12);
        for (a, b) in [
            (Point::new(-79.7, 32.7), Point::new(-29.5, 38.5)),
            (Point::new(42.39, -1.66), Point::new(98.14, 10.21)),
            (Point::new(-80.0, 9.7), Point::new(-94.7, 29.0)),
            (Point::new(170.0, -20.0), Point::new(-170.0, -25.0)),
        ] {
            let got = s.bearing(a, b).unwrap();
            let want = numeric_sphere_bearing(a, b);
            assert_abs_diff_eq!(wrap_angle(got - want), 0.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn geodesic_paths() {
        let e = Space::Euclidean;
        let p = e.geodesic_path(Point::new(0.0, 0.0), Point::new(10.0, 0.0), 3).unwrap();
        assert_eq!(p, vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(10.0, 0.0)]);

        let s = sphere();
        let p = s.geodesic_path(Point::new(0.0, 0.0), Point::new(90.0, 0.0), 3).unwrap();
        assert_abs_diff_eq!(p[1].x1, 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1].x2, 0.0, epsilon = 1e-12);

        let (a, b) = (Point::new(-79.7, 32.7), Point::new(-29.5, 38.5));
        let path = s.geodesic_path(a, b, 500).unwrap();
        assert_eq!(path[0], a);
        assert_eq!(path[499], b);
        let rel = (s.polyline_length(&path) - s.distance(a, b)).abs() / s.distance(a, b);
        assert!(rel < 1e-4, "relative error {rel}");

        assert_eq!(
            s.geodesic_path(Point::new(0.0, 0.0), Point::new(180.0, 0.0), 5),
            Err(GeometryError::AntipodalPoints)
        );
        assert_eq!(e.geodesic_path(a, b, 1), Err(GeometryError::TooFewPoints(1)));
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_eq!(normalize_longitude(-180.0, DEGREES), 180.0);
        assert_abs_diff_eq!(normalize_longitude(190.0, DEGREES), -170.0, epsilon = 1e-12);
    }

    fn euclid_pt() -> impl Strategy<Value = Point> {
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| Point::new(a, b))
    }

    fn sphere_pt() -> impl Strategy<Value = Point> {
        (-179.0..179.0f64, -80.0..80.0f64).prop_map(|(a, b)| Point::new(a, b))
    }

    proptest! {
        #[test]
        fn reverse_bearing_differs_by_pi(a in euclid_pt(), b in euclid_pt()) {
            prop_assume!(a != b);
            let s = Space::Euclidean;
            let d = wrap_angle(s.bearing(a, b).unwrap() - s.bearing(b, a).unwrap() - PI);
            prop_assert!(d.abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality_plane(a in euclid_pt(), b in euclid_pt(), c in euclid_pt()) {
            let s = Space::Euclidean;
            prop_assert!(s.distance(a, c) <= s.distance(a, b) + s.distance(b, c) + 1e-9);
            prop_assert_eq!(s.distance(a, b), s.distance(b, a));
        }

        #[test]
        fn triangle_inequality_sphere(a in sphere_pt(), b in sphere_pt(), c in sphere_pt()) {
            let s = sphere();
            prop_assert!(s.distance(a, c) <= s.distance(a, b) + s.distance(b, c) + 1e-9);
            prop_assert!((s.distance(a, b) - s.distance(b, a)).abs() < 1e-9);
        }

        #[test]
        fn short_range_sphere_bearing_is_locally_euclidean(
            lon in -179.0..179.0f64,
            lat in -70.0..70.0f64,
            dx in -0.07..0.07f64,
            dy in -0.07..0.07f64,
        ) {
            prop_assume!(dx.abs() + dy.abs() > 1e-3);
            let a = Point::new(lon, lat);
            let b = Point::new(a.x1 + dx, a.x2 + dy);
            let local = dy.atan2(dx * ((a.x2 + 0.5 * dy) * DEGREES).cos());
            let got = sphere().bearing(a, b).unwrap();
            prop_assert!(wrap_angle(got - local).abs() < 1e-3);
        }
    }
}

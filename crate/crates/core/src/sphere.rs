//! Unit-sphere geometry: geographic/Cartesian conversion, great-circle
//! distance, Euler rotations, slerp, spherical polygon area and trajectory
//! hit testing.
//!
//! Axis convention: (lon 0, lat 0) is +x, (lon 90, lat 0) is +y and the
//! north pole is +z.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Deref, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps a longitude in degrees into `[-180, 180)`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let wrapped = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// A geographic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    /// Builds a point with longitude wrapped into `[-180, 180)` and latitude
    /// clamped to `[-90, 90]`.
    pub fn new(lon: f64, lat: f64) -> Self {
        Self {
            lon: normalize_degrees(lon),
            lat: lat.clamp(-90.0, 90.0),
        }
    }

    pub fn to_vec(self) -> UnitVec3 {
        geo_to_vec(self)
    }
}

/// Plain 3-vector used for intermediate ambient-space arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in this direction, or `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<UnitVec3> {
        let n = self.norm();
        if n < 1e-300 || !n.is_finite() {
            None
        } else {
            Some(UnitVec3(self * (1.0 / n)))
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVec3(Vec3);

impl TryFrom<[f64; 3]> for UnitVec3 {
    type Error = String;

    fn try_from(a: [f64; 3]) -> std::result::Result<Self, String> {
        Vec3::from(a)
            .normalized()
            .ok_or_else(|| format!("{a:?} cannot be normalized"))
    }
}

impl From<UnitVec3> for [f64; 3] {
    fn from(v: UnitVec3) -> Self {
        v.0.into()
    }
}

impl Deref for UnitVec3 {
    type Target = Vec3;
    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;
    fn neg(self) -> UnitVec3 {
        UnitVec3(-self.0)
    }
}

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec3 = UnitVec3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec3 = UnitVec3(Vec3::new(0.0, 0.0, 1.0));

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn to_geo(self) -> GeoPoint {
        vec_to_geo(self)
    }

    /// Unit tangent at `self` pointing along the great circle towards `to`.
    /// `None` when the two points coincide or are antipodal.
    pub fn tangent_towards(self, to: UnitVec3) -> Option<UnitVec3> {
        (to.0 - self.0 * self.dot(*to)).normalized()
    }

    /// Local (east, north) tangent frame. At the poles east is taken as +y
    /// so that the frame stays deterministic.
    pub fn local_frame(self) -> (UnitVec3, UnitVec3) {
        let east = Vec3::new(-self.y, self.x, 0.0)
            .normalized()
            .unwrap_or(UnitVec3::Y);
        let north = self
            .cross(*east)
            .normalized()
            .expect("orthonormal frame");
        (east, north)
    }

    /// Point reached by travelling `distance` radians from `self` with the
    /// given initial bearing (degrees clockwise from north).
    pub fn destination(self, bearing_deg: f64, distance: f64) -> UnitVec3 {
        let (east, north) = self.local_frame();
        let b = bearing_deg.to_radians();
        let dir = north.0 * b.cos() + east.0 * b.sin();
        (self.0 * distance.cos() + dir * distance.sin())
            .normalized()
            .expect("destination on sphere")
    }
}

pub fn geo_to_vec(p: GeoPoint) -> UnitVec3 {
    let (lon, lat) = (p.lon.to_radians(), p.lat.to_radians());
    UnitVec3(Vec3::new(
        lat.cos() * lon.cos(),
        lat.cos() * lon.sin(),
        lat.sin(),
    ))
}

/// Inverse of [`geo_to_vec`]. Longitude is 0 at the poles.
pub fn vec_to_geo(v: UnitVec3) -> GeoPoint {
    let lat = v.z.clamp(-1.0, 1.0).asin().to_degrees();
    let lon = if v.x.hypot(v.y) < 1e-15 {
        0.0
    } else {
        v.y.atan2(v.x).to_degrees()
    };
    GeoPoint::new(lon, lat)
}

/// Arc length in radians, in `[0, pi]`.
pub fn great_circle_distance(a: UnitVec3, b: UnitVec3) -> f64 {
    // atan2 form stays accurate for nearly coincident and nearly antipodal pairs
    a.cross(*b).norm().atan2(a.dot(*b))
}

/// Spherical linear interpolation along the minor arc.
pub fn geodesic_interpolate(a: UnitVec3, b: UnitVec3, t: f64) -> Result<UnitVec3> {
    let cos = a.dot(*b);
    if cos <= -1.0 + 1e-12 {
        return Err(Error::AntipodalPair);
    }
    let omega = cos.clamp(-1.0, 1.0).acos();
    if omega < 1e-12 {
        return Ok(a);
    }
    let s = omega.sin();
    let wa = ((1.0 - t) * omega).sin() / s;
    let wb = (t * omega).sin() / s;
    Ok((a.vec() * wa + b.vec() * wb)
        .normalized()
        .expect("slerp of non-antipodal points"))
}

/// Normalized vector sum; `None` when the points cancel out.
pub fn centroid(points: &[UnitVec3]) -> Option<UnitVec3> {
    points
        .iter()
        .fold(Vec3::default(), |acc, p| acc + p.vec())
        .normalized()
}

/// Three-axis rotation in degrees, applied to geographic data before it is
/// projected.
///
/// The rotation first shifts longitudes by `lambda` (about the polar axis),
/// then tilts by `phi` about the y axis and finally rolls by `gamma` about the
/// x axis, which is the ordering used by interactive globe viewers. With
/// this convention `(90, 0, 0)` moves `(0, 0)` to `(90, 0)`, and the view
/// centre of a rotated projection is the point `(-lambda, -phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotationTriple {
    pub lambda: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl RotationTriple {
    pub const IDENTITY: RotationTriple = RotationTriple {
        lambda: 0.0,
        phi: 0.0,
        gamma: 0.0,
    };

    /// Each angle wrapped into `[-180, 180)`.
    pub fn new(lambda: f64, phi: f64, gamma: f64) -> Self {
        Self {
            lambda: normalize_degrees(lambda),
            phi: normalize_degrees(phi),
            gamma: normalize_degrees(gamma),
        }
    }

    pub fn to_rotation(self) -> Rotation {
        Rotation::from_triple(self)
    }
}

/// Rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rotation about +z by `deg`; increases longitude by `deg`.
    pub fn about_z(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Pitch: `x' = x cos - z sin`, `z' = x sin + z cos`.
    pub fn about_y(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    }

    /// Roll: `y' = y cos - z sin`, `z' = y sin + z cos`.
    pub fn about_x(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn from_triple(r: RotationTriple) -> Self {
        Rotation::about_x(r.gamma)
            .then_after(Rotation::about_y(r.phi))
            .then_after(Rotation::about_z(r.lambda))
    }

    /// Recovers the Euler triple. In gimbal lock (`|phi| = 90`) gamma is
    /// reported as 0 and the whole yaw is folded into lambda.
    pub fn to_triple(&self) -> RotationTriple {
        let m = &self.0;
        let sin_phi = (-m[0][2]).clamp(-1.0, 1.0);
        let phi = sin_phi.asin();
        let cos_phi = phi.cos();
        let (lambda, gamma) = if cos_phi > 1e-9 {
            ((-m[0][1]).atan2(m[0][0]), (-m[1][2]).atan2(m[2][2]))
        } else {
            (m[1][0].atan2(m[1][1]), 0.0)
        };
        RotationTriple::new(lambda.to_degrees(), phi.to_degrees(), gamma.to_degrees())
    }

    /// Matrix product `self * inner`: applies `inner` first, then `self`.
    pub fn then_after(&self, inner: Rotation) -> Rotation {
        let (a, b) = (&self.0, &inner.0);
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Rotation(out)
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Rotates a unit vector. Renormalizes to absorb rounding drift.
    pub fn apply(&self, v: UnitVec3) -> UnitVec3 {
        self.apply_vec(v.vec())
            .normalized()
            .expect("rotation preserves length")
    }
}

pub fn apply_rotation(r: RotationTriple, v: UnitVec3) -> UnitVec3 {
    Rotation::from_triple(r).apply(v)
}

/// Area in steradians of the smaller region bounded by the closed polygon
/// with great-circle edges through `vertices`, from the spherical excess.
pub fn spherical_polygon_area(vertices: &[GeoPoint]) -> Result<f64> {
    let pts: Vec<UnitVec3> = vertices.iter().map(|p| p.to_vec()).collect();
    spherical_polygon_area_vec(&pts)
}

pub fn spherical_polygon_area_vec(pts: &[UnitVec3]) -> Result<f64> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon(format!("{n} vertices, need at least 3")));
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let d = great_circle_distance(pts[i], pts[j]);
        if d < 1e-12 {
            return Err(Error::DegeneratePolygon(format!("vertices {i} and {j} coincide")));
        }
        if d > PI - 1e-12 {
            return Err(Error::DegeneratePolygon(format!("vertices {i} and {j} are antipodal")));
        }
    }
    // Gauss-Bonnet: the region on the left of the traversal has area
    // 2pi minus the total geodesic turning, i.e. sum(interior) - (n - 2)pi.
    let mut turning = 0.0;
    for k in 0..n {
        let prev = pts[(k + n - 1) % n];
        let cur = pts[k];
        let next = pts[(k + 1) % n];
        let back = cur.tangent_towards(prev).expect("checked non-degenerate");
        let fwd = cur.tangent_towards(next).expect("checked non-degenerate");
        let incoming = -back.vec();
        let sin = incoming.cross(fwd.vec()).dot(cur.vec());
        let cos = incoming.dot(fwd.vec());
        turning += sin.atan2(cos);
    }
    let left = (TAU - turning).rem_euclid(2.0 * TAU);
    Ok(left.min(2.0 * TAU - left))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitResult {
    Hit,
    Miss,
}

/// Signed angular distance (radians) from `b` to the great circle through
/// `a` heading towards `arrow_head`. Positive on the left of travel.
pub fn cross_track_distance(a: UnitVec3, arrow_head: UnitVec3, b: UnitVec3) -> Result<f64> {
    let normal = track_normal(a, arrow_head)?;
    Ok(normal.dot(*b).clamp(-1.0, 1.0).asin())
}

/// Angle (radians, in `(-pi, pi]`) from `a` to the foot of `b` on the
/// track, measured in the direction of travel.
pub fn along_track_angle(a: UnitVec3, arrow_head: UnitVec3, b: UnitVec3) -> Result<f64> {
    let normal = track_normal(a, arrow_head)?;
    let forward = normal.cross(a.vec());
    Ok(forward.dot(*b).atan2(a.dot(*b)))
}

fn track_normal(a: UnitVec3, arrow_head: UnitVec3) -> Result<UnitVec3> {
    let cos = a.dot(*arrow_head);
    if cos <= -1.0 + 1e-12 {
        return Err(Error::AntipodalPair);
    }
    a.cross(*arrow_head).normalized().ok_or_else(|| {
        Error::InvalidArgument("trajectory start and arrow head coincide".into())
    })
}

/// Angular distance from `b` to the forward half great circle leaving `a`
/// through `arrow_head`.
pub fn distance_to_forward_track(a: UnitVec3, arrow_head: UnitVec3, b: UnitVec3) -> Result<f64> {
    let along = along_track_angle(a, arrow_head, b)?;
    if (0.0..=PI).contains(&along) {
        Ok(cross_track_distance(a, arrow_head, b)?.abs())
    } else {
        Ok(great_circle_distance(a, b).min(great_circle_distance(-a, b)))
    }
}

/// Hit iff the trajectory leaving `a` towards `arrow_head`, continued forward
/// for half a great circle, passes within `epsilon` radians of `b`.
pub fn trajectory_hit_test(
    a: GeoPoint,
    arrow_head: GeoPoint,
    b: GeoPoint,
    epsilon: f64,
) -> Result<HitResult> {
    let d = distance_to_forward_track(a.to_vec(), arrow_head.to_vec(), b.to_vec())?;
    Ok(if d <= epsilon {
        HitResult::Hit
    } else {
        HitResult::Miss
    })
}

/// Default hit tolerance for trajectory trials.
pub const DEFAULT_HIT_EPSILON: f64 = PI / 180.0;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn axis_conventions() {
        let v = geo_to_vec(GeoPoint::new(0.0, 0.0));
        assert!(close(v.x, 1.0, 1e-15) && close(v.y, 0.0, 1e-15) && close(v.z, 0.0, 1e-15));
        let n = geo_to_vec(GeoPoint::new(0.0, 90.0));
        assert!(close(n.z, 1.0, 1e-15));
        assert_eq!(vec_to_geo(UnitVec3::X), GeoPoint::new(0.0, 0.0));
        assert_eq!(vec_to_geo(-UnitVec3::Z), GeoPoint { lon: 0.0, lat: -90.0 });
    }

    #[test]
    fn geo_round_trip() {
        let p = GeoPoint::new(123.4, -56.7);
        let q = vec_to_geo(geo_to_vec(p));
        assert!(close(p.lon, q.lon, 1e-9) && close(p.lat, q.lat, 1e-9));
    }

    #[test]
    fn normalization() {
        assert_eq!(GeoPoint::new(180.0, 0.0).lon, -180.0);
        assert_eq!(GeoPoint::new(540.0, 100.0), GeoPoint { lon: -180.0, lat: 90.0 });
        assert!(close(normalize_degrees(-190.0), 170.0, 1e-12));
        assert!(normalize_degrees(-1e-18) < 180.0);
    }

    #[test]
    fn distances() {
        let a = GeoPoint::new(0.0, 0.0).to_vec();
        let b = GeoPoint::new(90.0, 0.0).to_vec();
        assert_eq!(great_circle_distance(a, a), 0.0);
        assert!(close(great_circle_distance(a, -a), PI, 1e-15));
        assert!(close(great_circle_distance(a, b), FRAC_PI_2, 1e-15));
    }

    #[test]
    fn near_coincident_distance_is_not_nan() {
        let a = UnitVec3::X;
        let b = Vec3::new(1.0, 1e-16, 0.0).normalized().unwrap();
        let d = great_circle_distance(a, b);
        assert!(d.is_finite() && d >= 0.0);
        let d2 = great_circle_distance(a, -b);
        assert!(d2.is_finite() && close(d2, PI, 1e-7));
    }

    #[test]
    fn yaw_moves_longitude_east() {
        // regression fixture for the sign convention
        let r = RotationTriple::new(90.0, 0.0, 0.0);
        let p = apply_rotation(r, GeoPoint::new(0.0, 0.0).to_vec()).to_geo();
        assert!(close(p.lon, 90.0, 1e-12) && close(p.lat, 0.0, 1e-12));
        // pitch brings the view centre (-lambda, -phi) to the origin
        let r = RotationTriple::new(-30.0, -40.0, 25.0);
        let c = apply_rotation(r, GeoPoint::new(30.0, 40.0).to_vec());
        assert!(close(c.x, 1.0, 1e-12));
    }

    #[test]
    fn triple_matrix_round_trip() {
        for &(l, p, g) in &[(10.0, 20.0, 30.0), (-170.0, -89.0, 45.0), (0.0, 0.0, -179.0)] {
            let t = RotationTriple::new(l, p, g);
            let back = t.to_rotation().to_triple();
            assert!(close(t.lambda, back.lambda, 1e-9), "{t:?} {back:?}");
            assert!(close(t.phi, back.phi, 1e-9));
            assert!(close(t.gamma, back.gamma, 1e-9));
        }
        // gimbal lock still reproduces the same matrix
        let t = RotationTriple::new(40.0, 90.0, 30.0);
        let back = t.to_rotation().to_triple().to_rotation();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(back.0[i][j], t.to_rotation().0[i][j], 1e-9));
            }
        }
    }

    #[test]
    fn slerp_basics() {
        let a = GeoPoint::new(0.0, 0.0).to_vec();
        let b = GeoPoint::new(90.0, 0.0).to_vec();
        assert_eq!(geodesic_interpolate(a, b, 0.0).unwrap(), a);
        let m = geodesic_interpolate(a, b, 0.5).unwrap().to_geo();
        assert!(close(m.lon, 45.0, 1e-12) && close(m.lat, 0.0, 1e-12));
        let e = geodesic_interpolate(a, b, 1.0).unwrap();
        assert!(great_circle_distance(e, b) < 1e-12);
        assert!(matches!(geodesic_interpolate(a, -a, 0.5), Err(Error::AntipodalPair)));
    }

    #[test]
    fn octant_and_hemisphere_area() {
        let tri = [
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(90.0, 0.0),
            GeoPoint::new(0.0, 90.0),
        ];
        assert!(close(spherical_polygon_area(&tri).unwrap(), FRAC_PI_2, 1e-12));
        let equator: Vec<_> = (0..4).map(|k| GeoPoint::new(90.0 * k as f64, 0.0)).collect();
        assert!(close(spherical_polygon_area(&equator).unwrap(), TAU, 1e-12));
        let mut rev = tri.to_vec();
        rev.reverse();
        assert!(close(spherical_polygon_area(&rev).unwrap(), FRAC_PI_2, 1e-12));
    }

    #[test]
    fn degenerate_polygons() {
        let p = GeoPoint::new(10.0, 10.0);
        assert!(matches!(
            spherical_polygon_area(&[p, p, GeoPoint::new(20.0, 0.0)]),
            Err(Error::DegeneratePolygon(_))
        ));
        assert!(matches!(spherical_polygon_area(&[p]), Err(Error::DegeneratePolygon(_))));
    }

    #[test]
    fn trajectory_cases() {
        let a = GeoPoint::new(0.0, 0.0);
        let head = GeoPoint::new(10.0, 0.0);
        let eps = DEFAULT_HIT_EPSILON;
        assert_eq!(trajectory_hit_test(a, head, GeoPoint::new(5.0, 0.0), eps).unwrap(), HitResult::Hit);
        assert_eq!(trajectory_hit_test(a, head, GeoPoint::new(120.0, 0.5), eps).unwrap(), HitResult::Hit);
        // behind the start
        assert_eq!(trajectory_hit_test(a, head, GeoPoint::new(-60.0, 0.0), eps).unwrap(), HitResult::Miss);
        // 40 degrees off track
        let b = GeoPoint::new(70.0, 0.0).to_vec().destination(0.0, 40f64.to_radians());
        assert_eq!(trajectory_hit_test(a, head, b.to_geo(), eps).unwrap(), HitResult::Miss);
        let xt = cross_track_distance(a.to_vec(), head.to_vec(), b).unwrap();
        assert!(close(xt.to_degrees(), 40.0, 1e-9));
        assert!(trajectory_hit_test(a, a, head, eps).is_err());
    }

    #[test]
    fn destination_distance_and_bearing() {
        let a = GeoPoint::new(20.0, 35.0).to_vec();
        let b = a.destination(75.0, 0.7);
        assert!(close(great_circle_distance(a, b), 0.7, 1e-12));
        let north = a.destination(0.0, 0.1).to_geo();
        assert!(close(north.lon, 20.0, 1e-9) && north.lat > 35.0);
    }
}

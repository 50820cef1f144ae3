//! The five world projections used for the stimuli, letterboxed into a pixel
//! canvas, plus projection of great-circle arcs with wrap-around splitting.
//!
//! Screen coordinates have their origin at the top-left corner with y
//! pointing down. Each projection is first evaluated in its native unit
//! (radians on the unit sphere) and then uniformly scaled and centred so the
//! native outline fits the canvas.
//!
//! The two interrupted projections show the rotated globe as two discs side
//! by side: the left disc is the western hemisphere (rotated longitude in
//! `[-180, 0)`) centred on longitude -90, the right disc the eastern one
//! centred on +90.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{great_circle_distance, GeoPoint, Rotation, RotationTriple, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionKind {
    Equirectangular,
    EqualEarth,
    Hammer,
    MollweideHemisphere,
    OrthographicHemisphere,
}

impl ProjectionKind {
    pub const ALL: [ProjectionKind; 5] = [
        ProjectionKind::Equirectangular,
        ProjectionKind::EqualEarth,
        ProjectionKind::Hammer,
        ProjectionKind::MollweideHemisphere,
        ProjectionKind::OrthographicHemisphere,
    ];

    pub fn is_hemispheric(self) -> bool {
        matches!(
            self,
            ProjectionKind::MollweideHemisphere | ProjectionKind::OrthographicHemisphere
        )
    }

    pub fn is_equal_area(self) -> bool {
        matches!(
            self,
            ProjectionKind::EqualEarth | ProjectionKind::Hammer | ProjectionKind::MollweideHemisphere
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ProjectionKind::Equirectangular => "equirectangular",
            ProjectionKind::EqualEarth => "equal-earth",
            ProjectionKind::Hammer => "hammer",
            ProjectionKind::MollweideHemisphere => "mollweide-hemisphere",
            ProjectionKind::OrthographicHemisphere => "orthographic-hemisphere",
        }
    }
}

impl std::str::FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "equirectangular" | "equirect" => ProjectionKind::Equirectangular,
            "equal-earth" | "equalearth" => ProjectionKind::EqualEarth,
            "hammer" => ProjectionKind::Hammer,
            "mollweide-hemisphere" | "mollweide" => ProjectionKind::MollweideHemisphere,
            "orthographic-hemisphere" | "orthographic" => ProjectionKind::OrthographicHemisphere,
            other => return Err(Error::InvalidArgument(format!("unknown projection '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    West,
    East,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Face>,
}

impl ScreenPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, face: None }
    }

    pub fn distance(&self, o: &ScreenPoint) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectionSpec {
    pub kind: ProjectionKind,
    pub canvas_width: f64,
    pub canvas_height: f64,
    #[serde(default)]
    pub rotation: RotationTriple,
}

impl ProjectionSpec {
    pub fn new(kind: ProjectionKind, canvas_width: f64, canvas_height: f64) -> Self {
        Self {
            kind,
            canvas_width,
            canvas_height,
            rotation: RotationTriple::IDENTITY,
        }
    }

    pub fn with_rotation(mut self, rotation: RotationTriple) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn projector(&self) -> Result<Projector> {
        Projector::new(self)
    }
}

/// Polylines in screen space for one great-circle arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPath {
    pub segments: Vec<Vec<ScreenPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<[usize; 2]>,
}

/// Fraction of the canvas width left between the two hemisphere discs.
pub const HEMISPHERE_GUTTER: f64 = 0.04;
/// Largest angular step between geodesic samples, degrees.
pub const GEODESIC_MAX_STEP_DEG: f64 = 2.0;
/// Chord deviation (px) above which a geodesic span is subdivided.
pub const GEODESIC_FLATNESS_PX: f64 = 0.25;
const MAX_SUBDIVISION_DEPTH: u32 = 10;
const BOUNDARY_BISECTIONS: u32 = 48;
const DOMAIN_EPS: f64 = 1e-9;

// Equal Earth polynomial coefficients.
const EE_A1: f64 = 1.340264;
const EE_A2: f64 = -0.081106;
const EE_A3: f64 = 0.000893;
const EE_A4: f64 = 0.003796;
const EE_M: f64 = 0.866_025_403_784_438_6; // sqrt(3) / 2

fn equal_earth_y(theta: f64) -> f64 {
    let t2 = theta * theta;
    let t6 = t2 * t2 * t2;
    theta * (EE_A1 + EE_A2 * t2 + t6 * (EE_A3 + EE_A4 * t2))
}

fn equal_earth_dy(theta: f64) -> f64 {
    let t2 = theta * theta;
    let t6 = t2 * t2 * t2;
    EE_A1 + 3.0 * EE_A2 * t2 + t6 * (7.0 * EE_A3 + 9.0 * EE_A4 * t2)
}

/// Native Equal Earth forward map.
pub fn equal_earth_forward(lon: f64, lat: f64) -> (f64, f64) {
    let theta = (EE_M * lat.sin()).asin();
    (
        lon * theta.cos() / (EE_M * equal_earth_dy(theta)),
        equal_earth_y(theta),
    )
}

/// Native Equal Earth inverse by Newton iteration on the parametric
/// latitude; `None` outside the outline.
pub fn equal_earth_inverse(x: f64, y: f64) -> Option<(f64, f64)> {
    let y_max = equal_earth_y(FRAC_PI_3);
    if y.abs() > y_max * (1.0 + DOMAIN_EPS) {
        return None;
    }
    let y = y.clamp(-y_max, y_max);
    let mut theta = y / EE_A1;
    for _ in 0..25 {
        let delta = (equal_earth_y(theta) - y) / equal_earth_dy(theta);
        theta -= delta;
        if delta.abs() < 1e-10 {
            break;
        }
    }
    // one more step past the 1e-10 criterion puts theta at machine precision
    theta -= (equal_earth_y(theta) - y) / equal_earth_dy(theta);
    let theta = theta.clamp(-FRAC_PI_3, FRAC_PI_3);
    let lon = EE_M * x * equal_earth_dy(theta) / theta.cos();
    if lon.abs() > PI * (1.0 + DOMAIN_EPS) {
        return None;
    }
    let lat = (theta.sin() / EE_M).clamp(-1.0, 1.0).asin();
    Some((lon.clamp(-PI, PI), lat))
}

/// Solves `2t + sin 2t = pi sin(lat)` for the Mollweide auxiliary angle.
fn mollweide_theta(lat: f64) -> f64 {
    if lat.abs() >= FRAC_PI_2 - 1e-12 {
        return FRAC_PI_2.copysign(lat);
    }
    let k = PI * lat.sin();
    // f(u) = u + sin u - k is increasing on [-pi, pi]; bracketed Newton.
    let (mut lo, mut hi) = (-PI, PI);
    let mut u = 2.0 * lat;
    for _ in 0..100 {
        let f = u + u.sin() - k;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let df = 1.0 + u.cos();
        let mut next = if df > 1e-300 { u - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() < 1e-15 {
            u = next;
            break;
        }
        u = next;
    }
    0.5 * u
}

/// Native Mollweide forward map (full-world form; a hemisphere is a disc of
/// radius sqrt 2).
pub fn mollweide_forward(lon: f64, lat: f64) -> (f64, f64) {
    let theta = mollweide_theta(lat);
    (2.0 * SQRT_2 / PI * lon * theta.cos(), SQRT_2 * theta.sin())
}

pub fn hammer_forward(lon: f64, lat: f64) -> (f64, f64) {
    let cos_lat = lat.cos();
    let d = (1.0 + cos_lat * (lon / 2.0).cos()).sqrt();
    (
        2.0 * SQRT_2 * cos_lat * (lon / 2.0).sin() / d,
        SQRT_2 * lat.sin() / d,
    )
}

pub fn hammer_inverse(x: f64, y: f64) -> Option<(f64, f64)> {
    let e = (x / (2.0 * SQRT_2)).powi(2) + (y / SQRT_2).powi(2);
    if e > 1.0 + DOMAIN_EPS {
        return None;
    }
    let z = (1.0 - (x / 4.0).powi(2) - (y / 2.0).powi(2)).max(0.0).sqrt();
    let lon = 2.0 * (z * x).atan2(2.0 * (2.0 * z * z - 1.0));
    let lat = (z * y).clamp(-1.0, 1.0).asin();
    Some((lon, lat))
}

/// A [`ProjectionSpec`] with its rotation matrix and canvas fit precomputed.
#[derive(Debug, Clone)]
pub struct Projector {
    spec: ProjectionSpec,
    rotation: Rotation,
    inverse_rotation: Rotation,
    /// px per native unit
    scale: f64,
    /// screen-space centre of the whole map (continuous kinds)
    center: (f64, f64),
    /// screen-space centres of the west and east discs (hemispheric kinds)
    disc_centers: [(f64, f64); 2],
}

impl Projector {
    pub fn new(spec: &ProjectionSpec) -> Result<Self> {
        let (w, h) = (spec.canvas_width, spec.canvas_height);
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("canvas {w}x{h} must be positive")));
        }
        let rotation = spec.rotation.to_rotation();
        let center = (w / 2.0, h / 2.0);
        let (scale, disc_centers) = if spec.kind.is_hemispheric() {
            let gutter = HEMISPHERE_GUTTER * w;
            let radius_px = ((w - gutter) / 4.0).min(h / 2.0);
            let offset = gutter / 2.0 + radius_px;
            (
                radius_px / Self::disc_radius(spec.kind),
                [(w / 2.0 - offset, h / 2.0), (w / 2.0 + offset, h / 2.0)],
            )
        } else {
            let (hw, hh) = Self::native_half_extent(spec.kind);
            ((w / (2.0 * hw)).min(h / (2.0 * hh)), [center; 2])
        };
        Ok(Self {
            spec: *spec,
            inverse_rotation: rotation.transpose(),
            rotation,
            scale,
            center,
            disc_centers,
        })
    }

    pub fn spec(&self) -> &ProjectionSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProjectionKind {
        self.spec.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn disc_radius(kind: ProjectionKind) -> f64 {
        match kind {
            ProjectionKind::MollweideHemisphere => SQRT_2,
            _ => 1.0,
        }
    }

    fn native_half_extent(kind: ProjectionKind) -> (f64, f64) {
        match kind {
            ProjectionKind::Equirectangular => (PI, FRAC_PI_2),
            ProjectionKind::EqualEarth => (PI / (EE_M * EE_A1), equal_earth_y(FRAC_PI_3)),
            ProjectionKind::Hammer => (2.0 * SQRT_2, SQRT_2),
            ProjectionKind::MollweideHemisphere => (SQRT_2, SQRT_2),
            ProjectionKind::OrthographicHemisphere => (1.0, 1.0),
        }
    }

    /// Screen-space radius of each hemisphere disc.
    pub fn disc_radius_px(&self) -> f64 {
        Self::disc_radius(self.spec.kind) * self.scale
    }

    pub fn disc_center(&self, face: Face) -> (f64, f64) {
        match face {
            Face::West => self.disc_centers[0],
            Face::East => self.disc_centers[1],
        }
    }

    /// Which disc shows the (unrotated) point, for hemispheric kinds.
    pub fn face_of(&self, v: UnitVec3) -> Face {
        face_of_rotated(self.rotation.apply_vec(v.vec()))
    }

    pub fn rotate(&self, v: UnitVec3) -> UnitVec3 {
        self.rotation.apply(v)
    }

    pub fn project_geo(&self, p: GeoPoint) -> ScreenPoint {
        self.project(p.to_vec())
    }

    pub fn project(&self, v: UnitVec3) -> ScreenPoint {
        self.project_rotated(self.rotation.apply_vec(v.vec()))
    }

    fn project_rotated(&self, r: Vec3) -> ScreenPoint {
        if self.spec.kind.is_hemispheric() {
            let face = face_of_rotated(r);
            // bring the disc centre (lon -90 or +90) to lon 0
            let local = match face {
                Face::West => Vec3::new(-r.y, r.x, r.z),
                Face::East => Vec3::new(r.y, -r.x, r.z),
            };
            let (xn, yn) = match self.spec.kind {
                ProjectionKind::OrthographicHemisphere => (local.y, local.z),
                _ => {
                    let lon = local.y.atan2(local.x).clamp(-FRAC_PI_2, FRAC_PI_2);
                    let lat = local.z.clamp(-1.0, 1.0).asin();
                    mollweide_forward(lon, lat)
                }
            };
            let (cx, cy) = self.disc_center(face);
            ScreenPoint {
                x: cx + self.scale * xn,
                y: cy - self.scale * yn,
                face: Some(face),
            }
        } else {
            let lon = rotated_lon(r);
            let lat = r.z.clamp(-1.0, 1.0).asin();
            let (xn, yn) = match self.spec.kind {
                ProjectionKind::Equirectangular => (lon, lat),
                ProjectionKind::EqualEarth => equal_earth_forward(lon, lat),
                _ => hammer_forward(lon, lat),
            };
            ScreenPoint::new(self.center.0 + self.scale * xn, self.center.1 - self.scale * yn)
        }
    }

    /// Geographic point shown at `s`. For hemispheric kinds the disc is taken
    /// from `s.face` when present, otherwise from which half of the canvas
    /// `s` lies in.
    pub fn invert(&self, s: ScreenPoint) -> Result<GeoPoint> {
        self.invert_vec(s).map(UnitVec3::to_geo)
    }

    pub fn invert_vec(&self, s: ScreenPoint) -> Result<UnitVec3> {
        let outside = || Error::OutsideDomain { x: s.x, y: s.y };
        let rotated = if self.spec.kind.is_hemispheric() {
            let face = s.face.unwrap_or(if s.x < self.spec.canvas_width / 2.0 {
                Face::West
            } else {
                Face::East
            });
            let (cx, cy) = self.disc_center(face);
            let (xn, yn) = ((s.x - cx) / self.scale, (cy - s.y) / self.scale);
            let local = match self.spec.kind {
                ProjectionKind::OrthographicHemisphere => {
                    let rho2 = xn * xn + yn * yn;
                    if rho2 > 1.0 + DOMAIN_EPS {
                        return Err(outside());
                    }
                    Vec3::new((1.0 - rho2).max(0.0).sqrt(), xn, yn)
                }
                _ => {
                    if xn * xn + yn * yn > 2.0 * (1.0 + DOMAIN_EPS) {
                        return Err(outside());
                    }
                    let theta = (yn / SQRT_2).clamp(-1.0, 1.0).asin();
                    let lat = ((2.0 * theta + (2.0 * theta).sin()) / PI).clamp(-1.0, 1.0).asin();
                    let lon = if theta.cos() < 1e-15 {
                        0.0
                    } else {
                        (PI * xn / (2.0 * SQRT_2 * theta.cos())).clamp(-FRAC_PI_2, FRAC_PI_2)
                    };
                    Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
                }
            };
            match face {
                Face::West => Vec3::new(local.y, -local.x, local.z),
                Face::East => Vec3::new(-local.y, local.x, local.z),
            }
        } else {
            let xn = (s.x - self.center.0) / self.scale;
            let yn = (self.center.1 - s.y) / self.scale;
            let (lon, lat) = match self.spec.kind {
                ProjectionKind::Equirectangular => {
                    if xn.abs() > PI * (1.0 + DOMAIN_EPS) || yn.abs() > FRAC_PI_2 * (1.0 + DOMAIN_EPS)
                    {
                        return Err(outside());
                    }
                    (xn, yn.clamp(-FRAC_PI_2, FRAC_PI_2))
                }
                ProjectionKind::EqualEarth => equal_earth_inverse(xn, yn).ok_or_else(outside)?,
                _ => hammer_inverse(xn, yn).ok_or_else(outside)?,
            };
            Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
        };
        let v = self
            .inverse_rotation
            .apply_vec(rotated)
            .normalized()
            .ok_or_else(outside)?;
        Ok(v)
    }

    /// Whether a screen position lies inside the projected outline.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.invert_vec(ScreenPoint::new(x, y)).is_ok()
    }

    /// Closed outline polylines in screen space (one for continuous kinds,
    /// one circle per disc for hemispheric ones).
    pub fn outline(&self) -> Vec<Vec<(f64, f64)>> {
        const STEPS: usize = 180;
        if self.spec.kind.is_hemispheric() {
            let r = self.disc_radius_px();
            [Face::West, Face::East]
                .iter()
                .map(|&f| {
                    let (cx, cy) = self.disc_center(f);
                    (0..=STEPS)
                        .map(|k| {
                            let a = 2.0 * PI * k as f64 / STEPS as f64;
                            (cx + r * a.cos(), cy + r * a.sin())
                        })
                        .collect()
                })
                .collect()
        } else {
            let native = |lon: f64, lat: f64| match self.spec.kind {
                ProjectionKind::Equirectangular => (lon, lat),
                ProjectionKind::EqualEarth => equal_earth_forward(lon, lat),
                _ => hammer_forward(lon, lat),
            };
            let lat_at = |k: usize| -FRAC_PI_2 + PI * k as f64 / STEPS as f64;
            let mut ring: Vec<(f64, f64)> = (0..=STEPS).map(|k| native(PI, lat_at(k))).collect();
            ring.extend((0..=STEPS).rev().map(|k| native(-PI, lat_at(k))));
            ring.push(ring[0]);
            vec![ring
                .into_iter()
                .map(|(x, y)| (self.center.0 + self.scale * x, self.center.1 - self.scale * y))
                .collect()]
        }
    }

    /// True when the step from `p` to `q` crosses a projection boundary:
    /// the face changes or the screen jump exceeds half the canvas width.
    pub fn is_break(&self, p: &ScreenPoint, q: &ScreenPoint) -> bool {
        let (dx, dy) = (q.x - p.x, q.y - p.y);
        let half = self.spec.canvas_width / 2.0;
        p.face != q.face || dx * dx + dy * dy > half * half
    }

    /// True when the short arc from `a` to `b` (unrotated) passes through the
    /// antimeridian cut of a continuous projection. Near the poles the cut
    /// can be crossed with only a small screen jump, which `is_break` misses.
    pub fn crosses_cut(&self, a: UnitVec3, b: UnitVec3) -> bool {
        if self.spec.kind.is_hemispheric() {
            return false;
        }
        self.crosses_cut_rotated(self.rotation.apply_vec(a.vec()), self.rotation.apply_vec(b.vec()))
    }

    fn crosses_cut_rotated(&self, ra: Vec3, rb: Vec3) -> bool {
        if self.spec.kind.is_hemispheric() {
            return false;
        }
        // same side rule as the screen mapping: lon = -180 belongs to the west
        if is_west(ra) == is_west(rb) || ra.y == rb.y {
            return false;
        }
        let x = ra.x + (rb.x - ra.x) * ra.y / (ra.y - rb.y);
        x < 0.0
    }

    pub fn project_geodesic(&self, a: UnitVec3, b: UnitVec3) -> Result<ProjectedPath> {
        self.project_geodesic_with_step(a, b, GEODESIC_MAX_STEP_DEG)
    }

    /// Samples the minor arc from `a` to `b` (at most `max_step_deg` apart,
    /// refined until each span is within the flatness threshold), projects
    /// it, and splits the polyline wherever it crosses a boundary. Split
    /// points are located by bisection so each piece runs up to the edge.
    pub fn project_geodesic_with_step(
        &self,
        a: UnitVec3,
        b: UnitVec3,
        max_step_deg: f64,
    ) -> Result<ProjectedPath> {
        if a.dot(*b) <= -1.0 + 1e-12 {
            return Err(Error::AntipodalPair);
        }
        let omega = great_circle_distance(a, b);
        let mut sampler = ArcSampler {
            proj: self,
            a: a.vec(),
            b: b.vec(),
            omega,
            sin_omega: omega.sin(),
            segments: Vec::new(),
            current: Vec::new(),
        };
        let steps = ((omega.to_degrees() / max_step_deg).ceil() as usize).max(1);
        let mut s0 = sampler.sample(0.0);
        sampler.current.push(s0.p);
        for k in 1..=steps {
            let s1 = sampler.sample(k as f64 / steps as f64);
            sampler.span(s0, s1, 0, None);
            s0 = s1;
        }
        sampler.finish_segment();
        if sampler.segments.is_empty() {
            // a zero-length arc still yields a drawable degenerate segment
            sampler.segments.push(vec![s0.p, s0.p]);
        }
        Ok(ProjectedPath {
            segments: sampler.segments,
            source: None,
        })
    }
}

fn rotated_lon(r: Vec3) -> f64 {
    if r.x * r.x + r.y * r.y < 1e-30 {
        return 0.0;
    }
    let lon = r.y.atan2(r.x);
    // atan2 rounds tiny positive y to +pi; only the west side maps to -pi
    if lon >= PI && is_west(r) {
        -PI
    } else {
        lon
    }
}

/// Side of the antimeridian cut: the sign of `rotated_lon(r)`, without the
/// trigonometry.
fn is_west(r: Vec3) -> bool {
    if r.x * r.x + r.y * r.y < 1e-30 {
        return false;
    }
    r.y < 0.0 || (r.y == 0.0 && r.x < 0.0)
}

pub(crate) fn face_of_rotated(r: Vec3) -> Face {
    if is_west(r) {
        Face::West
    } else {
        Face::East
    }
}

/// A point of the arc at parameter `t`, on the sphere and on screen.
#[derive(Clone, Copy)]
struct Sample {
    t: f64,
    /// Rotated position.
    r: Vec3,
    p: ScreenPoint,
}

struct ArcSampler<'a> {
    proj: &'a Projector,
    a: Vec3,
    b: Vec3,
    omega: f64,
    sin_omega: f64,
    segments: Vec<Vec<ScreenPoint>>,
    current: Vec<ScreenPoint>,
}

impl ArcSampler<'_> {
    fn sample(&self, t: f64) -> Sample {
        let v = if self.omega < 1e-12 {
            self.a
        } else {
            let wa = ((1.0 - t) * self.omega).sin() / self.sin_omega;
            let wb = (t * self.omega).sin() / self.sin_omega;
            self.a * wa + self.b * wb
        };
        let v = v.normalized().expect("non-antipodal slerp");
        let r = self.proj.rotation.apply_vec(v.vec());
        Sample { t, r, p: self.proj.project_rotated(r) }
    }

    fn breaks(&self, s0: &Sample, s1: &Sample) -> bool {
        self.proj.is_break(&s0.p, &s1.p) || self.proj.crosses_cut_rotated(s0.r, s1.r)
    }

    fn finish_segment(&mut self) {
        let seg = std::mem::take(&mut self.current);
        if seg.len() >= 2 {
            self.segments.push(seg);
        }
    }

    /// Emits the span from `s0` (already emitted) to `s1`. `mid`, when
    /// known, is the sample halfway between them.
    fn span(&mut self, s0: Sample, s1: Sample, depth: u32, mid: Option<Sample>) {
        if self.breaks(&s0, &s1) {
            if depth > 2 * MAX_SUBDIVISION_DEPTH + BOUNDARY_BISECTIONS {
                self.finish_segment();
                self.current.push(s1.p);
                return;
            }
            let (mut lo, mut hi) = (s0, s1);
            for _ in 0..BOUNDARY_BISECTIONS {
                let m = self.sample(0.5 * (lo.t + hi.t));
                if self.breaks(&lo, &m) {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            if lo.t > s0.t {
                self.span(s0, lo, depth + 1, None);
            }
            self.finish_segment();
            self.current.push(hi.p);
            if hi.t < s1.t {
                self.span(hi, s1, depth + 1, None);
            }
            return;
        }
        if depth < MAX_SUBDIVISION_DEPTH {
            let m = mid.unwrap_or_else(|| self.sample(0.5 * (s0.t + s1.t)));
            if self.breaks(&s0, &m) || self.breaks(&m, &s1) || chord_deviation(&s0.p, &s1.p, &m.p) > GEODESIC_FLATNESS_PX {
                self.span(s0, m, depth + 1, None);
                self.span(m, s1, depth + 1, None);
                return;
            }
        }
        self.current.push(s1.p);
    }
}

/// Distance from `m` to the segment `p`-`q`.
fn chord_deviation(p: &ScreenPoint, q: &ScreenPoint, m: &ScreenPoint) -> f64 {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    let len2 = dx * dx + dy * dy;
    if len2 < 1e-18 {
        return m.distance(p);
    }
    let t = (((m.x - p.x) * dx + (m.y - p.y) * dy) / len2).clamp(0.0, 1.0);
    (m.x - (p.x + t * dx)).hypot(m.y - (p.y + t * dy))
}

pub fn project(spec: &ProjectionSpec, p: GeoPoint) -> Result<ScreenPoint> {
    Ok(spec.projector()?.project_geo(p))
}

pub fn invert(spec: &ProjectionSpec, s: ScreenPoint) -> Result<GeoPoint> {
    spec.projector()?.invert(s)
}

pub fn project_geodesic(spec: &ProjectionSpec, a: GeoPoint, b: GeoPoint) -> Result<ProjectedPath> {
    spec.projector()?.project_geodesic(a.to_vec(), b.to_vec())
}

/// Rotation for the second hemisphere disc: the first disc's view turned
/// half way round the rotated polar axis, so the two share "up" and show
/// complementary hemispheres.
pub fn paired_hemisphere_rotation(primary: RotationTriple) -> RotationTriple {
    paired_rotation_matrix(&primary.to_rotation()).to_triple()
}

pub fn paired_rotation_matrix(primary: &Rotation) -> Rotation {
    Rotation::about_z(180.0).then_after(*primary)
}

/// The drag that, applied to the paired disc, mirrors a drag `d` applied
/// (in view space) to the primary disc.
pub fn paired_drag(d: &Rotation) -> Rotation {
    let half_turn = Rotation::about_z(180.0);
    half_turn.then_after(*d).then_after(half_turn.transpose())
}

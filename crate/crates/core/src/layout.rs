//! Stress layout on the plane, the unit sphere and the flat torus, by
//! stochastic pairwise gradient descent.
//!
//! Stress is `sum_{i<j} w_ij (delta_ij - d_ij)^2` with `w_ij = delta_ij^-2`.
//! The realized distance `d_ij` is Euclidean on the plane, arc length on the
//! sphere, and on the torus the distance to whichever of the nine translated
//! copies of `x_j` gives the smallest term.
//!
//! Ideal distances are hop counts. On the sphere they are scaled by
//! `pi / diameter` so the longest target spans half a great circle; on the
//! torus (fundamental domain `[0, 1)^2`) by `1 / (2 diameter)` so the longest
//! target equals the half-domain wrap distance.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sphere::{great_circle_distance, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Plane,
    Sphere,
    Torus,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Plane, Geometry::Sphere, Geometry::Torus];

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Plane => "plane",
            Geometry::Sphere => "sphere",
            Geometry::Torus => "torus",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(Geometry::Plane),
            "sphere" => Ok(Geometry::Sphere),
            "torus" => Ok(Geometry::Torus),
            other => Err(Error::InvalidArgument(format!(
                "unknown geometry '{other}' (expected plane, sphere or torus)"
            ))),
        }
    }
}

/// Target distances and weights for every node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealDistances {
    n: usize,
    delta: Vec<f64>,
    weight: Vec<f64>,
}

impl IdealDistances {
    /// From a symmetric row-major `n x n` target matrix with a zero diagonal
    /// and positive off-diagonal entries.
    pub fn from_matrix(n: usize, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {n}x{n} matrix",
                delta.len()
            )));
        }
        let mut weight = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = delta[i * n + j];
                if i == j {
                    continue;
                }
                if !(d > 0.0) || (d - delta[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "delta[{i}][{j}] = {d} must be positive and symmetric"
                    )));
                }
                weight[i * n + j] = 1.0 / (d * d);
            }
        }
        Ok(Self { n, delta, weight })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.n + j]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weight[i * self.n + j]
    }

    fn weight_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.weight(i, j);
                lo = lo.min(w);
                hi = hi.max(w);
            }
        }
        (lo, hi)
    }
}

pub fn ideal_distances(g: &Graph, geometry: Geometry) -> Result<IdealDistances> {
    let hops = g.all_pairs_hops()?;
    let diameter = hops.iter().copied().max().unwrap_or(0).max(1) as f64;
    let scale = match geometry {
        Geometry::Plane => 1.0,
        Geometry::Sphere => PI / diameter,
        Geometry::Torus => 1.0 / (2.0 * diameter),
    };
    IdealDistances::from_matrix(
        g.node_count(),
        hops.into_iter().map(|h| h as f64 * scale).collect(),
    )
}

/// Node positions in one of the three geometries.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Plane(Vec<[f64; 2]>),
    Sphere(Vec<UnitVec3>),
    /// Coordinates in the fundamental domain `[0, 1)^2`.
    Torus(Vec<[f64; 2]>),
}

impl Layout {
    pub fn geometry(&self) -> Geometry {
        match self {
            Layout::Plane(_) => Geometry::Plane,
            Layout::Sphere(_) => Geometry::Sphere,
            Layout::Torus(_) => Geometry::Torus,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Layout::Plane(p) | Layout::Torus(p) => p.len(),
            Layout::Sphere(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sphere_positions(&self) -> Option<&[UnitVec3]> {
        match self {
            Layout::Sphere(p) => Some(p),
            _ => None,
        }
    }

    pub fn torus_positions(&self) -> Option<&[[f64; 2]]> {
        match self {
            Layout::Torus(p) => Some(p),
            _ => None,
        }
    }

    /// Flat coordinate rows for serialization.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        match self {
            Layout::Plane(p) | Layout::Torus(p) => p.iter().map(|c| c.to_vec()).collect(),
            Layout::Sphere(p) => p.iter().map(|v| vec![v.x, v.y, v.z]).collect(),
        }
    }

    pub fn from_coordinates(geometry: Geometry, rows: &[Vec<f64>]) -> Result<Self> {
        let bad = |i: usize| Error::InvalidArgument(format!("position {i} has the wrong arity"));
        let pair = |i: usize, r: &Vec<f64>| -> Result<[f64; 2]> {
            match r.as_slice() {
                [x, y] => Ok([*x, *y]),
                _ => Err(bad(i)),
            }
        };
        Ok(match geometry {
            Geometry::Plane => Layout::Plane(
                rows.iter().enumerate().map(|(i, r)| pair(i, r)).collect::<Result<_>>()?,
            ),
            Geometry::Torus => Layout::Torus(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| pair(i, r).map(|[x, y]| [wrap_unit(x), wrap_unit(y)]))
                    .collect::<Result<_>>()?,
            ),
            Geometry::Sphere => Layout::Sphere(
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| match r.as_slice() {
                        [x, y, z] => Vec3::new(*x, *y, *z).normalized().ok_or_else(|| bad(i)),
                        _ => Err(bad(i)),
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// Wraps into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Iteration count and step-size annealing for [`sgd_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SgdSchedule {
    pub iterations: usize,
    pub eta_max: f64,
    pub eta_min: f64,
    pub seed: u64,
}

pub const DEFAULT_ITERATIONS: usize = 60;
pub const DEFAULT_ETA_EPSILON: f64 = 0.01;

impl SgdSchedule {
    /// Default annealing for a target matrix: every pair starts fully
    /// corrected (`eta_max = 1 / w_min`, so `mu = 1` even for the heaviest
    /// weight) and ends at `eta_min = 0.01 / w_max`.
    pub fn for_ideal(ideal: &IdealDistances, iterations: usize, seed: u64) -> Self {
        let (w_min, w_max) = ideal.weight_range();
        if !w_min.is_finite() || w_max <= 0.0 {
            return Self {
                iterations,
                eta_max: 1.0,
                eta_min: DEFAULT_ETA_EPSILON,
                seed,
            };
        }
        Self {
            iterations,
            eta_max: 1.0 / w_min,
            eta_min: DEFAULT_ETA_EPSILON / w_max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if !(self.eta_min > 0.0 && self.eta_max >= self.eta_min) {
            return Err(Error::InvalidArgument(format!(
                "need eta_max >= eta_min > 0, got {} and {}",
                self.eta_max, self.eta_min
            )));
        }
        Ok(())
    }

    /// Step size at iteration `t` (geometric decay from `eta_max` to `eta_min`).
    pub fn eta(&self, t: usize) -> f64 {
        if self.iterations <= 1 {
            return self.eta_max;
        }
        let frac = t as f64 / (self.iterations - 1) as f64;
        self.eta_max * (self.eta_min / self.eta_max).powf(frac)
    }
}

/// Uniform random start: unit square, uniform sphere (normalized Gaussian
/// triples) or uniform torus domain.
pub fn random_layout(node_count: usize, geometry: Geometry, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match geometry {
        Geometry::Plane => Layout::Plane((0..node_count).map(|_| [rng.random(), rng.random()]).collect()),
        Geometry::Torus => Layout::Torus(
            (0..node_count)
                .map(|_| [wrap_unit(rng.random()), wrap_unit(rng.random())])
                .collect(),
        ),
        Geometry::Sphere => Layout::Sphere(
            (0..node_count)
                .map(|_| loop {
                    let v = Vec3::new(
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    );
                    if v.norm() > 1e-6 {
                        break v.normalized().expect("non-zero");
                    }
                })
                .collect(),
        ),
    }
}

/// The nine torus adjacencies, in evaluation order.
pub const TORUS_OFFSETS: [[f64; 2]; 9] = [
    [-1.0, -1.0],
    [-1.0, 0.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [0.0, 0.0],
    [0.0, 1.0],
    [1.0, -1.0],
    [1.0, 0.0],
    [1.0, 1.0],
];

/// Chosen adjacency for one torus pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusTerm {
    /// `(delta - d)^2` for the chosen copy (unweighted).
    pub squared_error: f64,
    pub offset: [f64; 2],
    pub distance: f64,
}

/// Picks the copy `x_j + offset` whose squared error is smallest (first in
/// [`TORUS_OFFSETS`] order on ties).
pub fn torus_pair_term(xi: [f64; 2], xj: [f64; 2], delta: f64) -> TorusTerm {
    let mut best = TorusTerm {
        squared_error: f64::INFINITY,
        offset: [0.0, 0.0],
        distance: 0.0,
    };
    for off in TORUS_OFFSETS {
        let d = (xi[0] - xj[0] - off[0]).hypot(xi[1] - xj[1] - off[1]);
        let e = (delta - d) * (delta - d);
        if e < best.squared_error {
            best = TorusTerm {
                squared_error: e,
                offset: off,
                distance: d,
            };
        }
    }
    best
}

pub fn stress(layout: &Layout, ideal: &IdealDistances) -> f64 {
    assert_eq!(layout.len(), ideal.len(), "layout and ideal distances disagree on size");
    let n = layout.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = ideal.delta(i, j);
            let w = ideal.weight(i, j);
            let sq = match layout {
                Layout::Plane(p) => {
                    let d = (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
                    (delta - d) * (delta - d)
                }
                Layout::Sphere(p) => {
                    let d = great_circle_distance(p[i], p[j]);
                    (delta - d) * (delta - d)
                }
                Layout::Torus(p) => torus_pair_term(p[i], p[j], delta).squared_error,
            };
            total += w * sq;
        }
    }
    total
}

/// Gradient of `w (delta - |xi - xj|)^2` with respect to `xi`.
pub fn plane_pair_gradient(xi: [f64; 2], xj: [f64; 2], delta: f64, w: f64) -> [f64; 2] {
    let (dx, dy) = (xi[0] - xj[0], xi[1] - xj[1]);
    let d = dx.hypot(dy);
    if d < 1e-300 {
        return [0.0, 0.0];
    }
    let k = 2.0 * w * (d - delta) / d;
    [k * dx, k * dy]
}

/// Riemannian gradient at `xi` (a tangent vector) of
/// `w (delta - arccos(xi . xj))^2`.
pub fn sphere_pair_gradient(xi: UnitVec3, xj: UnitVec3, delta: f64, w: f64) -> Vec3 {
    let d = great_circle_distance(xi, xj);
    match xi.tangent_towards(xj) {
        // d grows fastest when moving directly away from xj
        Some(t) => t.vec() * (-2.0 * w * (d - delta)),
        None => Vec3::default(),
    }
}

/// Gradient with respect to `xi` of the torus pair term, using the
/// adjacency that currently minimizes it.
pub fn torus_pair_gradient(xi: [f64; 2], xj: [f64; 2], delta: f64, w: f64) -> [f64; 2] {
    let term = torus_pair_term(xi, xj, delta);
    plane_pair_gradient(
        xi,
        [xj[0] + term.offset[0], xj[1] + term.offset[1]],
        delta,
        w,
    )
}

/// Deterministic pseudo-random angle for a coincident pair.
fn pair_angle(i: usize, j: usize) -> f64 {
    // splitmix64 finalizer
    let mut z = (i as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(j as u64)
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI
}

const COINCIDENT: f64 = 1e-9;

/// Moves a planar pair so that its separation approaches `delta` by a
/// fraction `mu` of the residual. `offset` is the torus copy applied to `xj`.
fn planar_step(xi: &mut [f64; 2], xj: &mut [f64; 2], offset: [f64; 2], delta: f64, mu: f64, i: usize, j: usize) {
    let (mut dx, mut dy) = (xi[0] - xj[0] - offset[0], xi[1] - xj[1] - offset[1]);
    let mut d = dx.hypot(dy);
    if d < COINCIDENT {
        let a = pair_angle(i, j);
        (dx, dy, d) = (a.cos(), a.sin(), 0.0);
        let r = mu * (d - delta) / 2.0;
        xi[0] -= r * dx;
        xi[1] -= r * dy;
        xj[0] += r * dx;
        xj[1] += r * dy;
        return;
    }
    let r = mu * (d - delta) / (2.0 * d);
    xi[0] -= r * dx;
    xi[1] -= r * dy;
    xj[0] += r * dx;
    xj[1] += r * dy;
}

fn sphere_step(xi: UnitVec3, xj: UnitVec3, delta: f64, mu: f64, i: usize, j: usize) -> (UnitVec3, UnitVec3) {
    let d = great_circle_distance(xi, xj);
    let s = mu * (d - delta) / 2.0;
    let tangent = |from: UnitVec3, to: UnitVec3, flip: bool| -> Vec3 {
        match from.tangent_towards(to) {
            Some(t) if (COINCIDENT..=PI - COINCIDENT).contains(&d) => t.vec(),
            _ => {
                let (east, north) = from.local_frame();
                let a = pair_angle(i, j);
                let t = east.vec() * a.cos() + north.vec() * a.sin();
                if flip {
                    -t
                } else {
                    t
                }
            }
        }
    };
    // positive s pulls the pair together along the connecting arc
    let ti = tangent(xi, xj, false);
    let tj = tangent(xj, xi, true);
    let ni = (xi.vec() + ti * s).normalized().unwrap_or(xi);
    let nj = (xj.vec() + tj * s).normalized().unwrap_or(xj);
    (ni, nj)
}

/// Result of one layout run.
#[derive(Debug, Clone)]
pub struct LayoutRun {
    pub layout: Layout,
    pub initial_stress: f64,
    pub final_stress: f64,
}

/// Runs SGD from the seeded random start.
pub fn sgd_layout(g: &Graph, geometry: Geometry, schedule: &SgdSchedule) -> Result<Layout> {
    Ok(run_sgd(g, geometry, schedule)?.layout)
}

pub fn run_sgd(g: &Graph, geometry: Geometry, schedule: &SgdSchedule) -> Result<LayoutRun> {
    schedule.validate()?;
    let ideal = ideal_distances(g, geometry)?;
    let start = random_layout(g.node_count(), geometry, schedule.seed);
    Ok(refine(start, &ideal, schedule))
}

/// Runs SGD from `start`. Each iteration visits every pair once in a
/// freshly shuffled order. The result is never worse than `start`.
pub fn refine(start: Layout, ideal: &IdealDistances, schedule: &SgdSchedule) -> LayoutRun {
    let n = start.len();
    let initial_stress = stress(&start, ideal);
    let mut layout = start.clone();
    let mut pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|i| ((i + 1)..n as u32).map(move |j| (i, j)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(1);

    for t in 0..schedule.iterations {
        let eta = schedule.eta(t);
        pairs.shuffle(&mut rng);
        for &(i, j) in &pairs {
            let (i, j) = (i as usize, j as usize);
            let delta = ideal.delta(i, j);
            let mu = (ideal.weight(i, j) * eta).min(1.0);
            match &mut layout {
                Layout::Plane(p) => {
                    let (a, b) = two_mut(p, i, j);
                    planar_step(a, b, [0.0, 0.0], delta, mu, i, j);
                }
                Layout::Torus(p) => {
                    let offset = torus_pair_term(p[i], p[j], delta).offset;
                    let (a, b) = two_mut(p, i, j);
                    planar_step(a, b, offset, delta, mu, i, j);
                    for c in a.iter_mut().chain(b.iter_mut()) {
                        *c = wrap_unit(*c);
                    }
                }
                Layout::Sphere(p) => {
                    let (ni, nj) = sphere_step(p[i], p[j], delta, mu, i, j);
                    p[i] = ni;
                    p[j] = nj;
                }
            }
        }
    }

    let final_stress = stress(&layout, ideal);
    if final_stress <= initial_stress {
        LayoutRun {
            layout,
            initial_stress,
            final_stress,
        }
    } else {
        LayoutRun {
            layout: start,
            initial_stress,
            final_stress: initial_stress,
        }
    }
}

fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

/// On-disk layout format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutDocument {
    pub geometry: Geometry,
    pub positions: Vec<Vec<f64>>,
    #[serde(default)]
    pub graph_ref: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub schedule: Option<SgdSchedule>,
    #[serde(default)]
    pub final_stress: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pan: Option<crate::autopan::PanResult>,
}

impl LayoutDocument {
    pub fn new(layout: &Layout) -> Self {
        Self {
            geometry: layout.geometry(),
            positions: layout.coordinates(),
            graph_ref: None,
            seed: None,
            schedule: None,
            final_stress: None,
            pan: None,
        }
    }

    pub fn to_layout(&self) -> Result<Layout> {
        Layout::from_coordinates(self.geometry, &self.positions)
    }
}

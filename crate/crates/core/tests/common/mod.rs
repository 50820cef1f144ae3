//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use wrapgraph::sphere::Vec3;
use wrapgraph::corpus::{CorpusPreset, CorpusSpec};
use wrapgraph::{GeoPoint, Graph, ProjectionKind, ProjectionSpec, Projector, RotationTriple, UnitVec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the sphere by rejection from the cube.
pub fn random_unit(rng: &mut impl Rng) -> UnitVec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v.normalized().unwrap();
        }
    }
}

/// Connected random graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(n: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.insert((u, v));
    }
    let mut tries = 0;
    while edges.len() < n - 1 + extra && tries < 100 * (extra + 1) {
        tries += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    Graph::new(n, edges, None).unwrap()
}

/// All-pairs hop counts, `None` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Option<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![inf; n * n];
    for i in 0..n {
        d[i * n + i] = 0;
    }
    for &(a, b) in g.edges() {
        d[a * n + b] = 1;
        d[b * n + a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d.into_iter().map(|x| (x < inf).then_some(x)).collect()
}

/// Newman modularity as `1/2m sum_ij (A_ij - k_i k_j / 2m) [c_i = c_j]`.
pub fn modularity_double_sum(g: &Graph, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let two_m = 2.0 * g.edge_count() as f64;
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] != labels[j] {
                continue;
            }
            let a = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            q += a - g.degree(i) as f64 * g.degree(j) as f64 / two_m;
        }
    }
    q / two_m
}

/// Torus stress enumerating every adjacency of every pair. Each term uses
/// the same floating-point operations as a direct evaluation so the result
/// can be compared exactly.
pub fn torus_stress_brute(
    pos: &[[f64; 2]],
    delta: impl Fn(usize, usize) -> f64,
    weight: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let dl = delta(i, j);
            let mut best = f64::INFINITY;
            for a in [-1.0, 0.0, 1.0] {
                for b in [-1.0, 0.0, 1.0] {
                    let d = (pos[i][0] - pos[j][0] - a).hypot(pos[i][1] - pos[j][1] - b);
                    best = best.min((dl - d) * (dl - d));
                }
            }
            total += weight(i, j) * best;
        }
    }
    total
}

/// Monte-Carlo area (steradians) of a convex spherical polygon, sampling a
/// cap around its vertex centroid that contains every vertex.
pub fn monte_carlo_area(vertices: &[UnitVec3], samples: usize, rng: &mut impl Rng) -> f64 {
    let mut sum = Vec3::default();
    for v in vertices {
        sum = sum + v.vec();
    }
    let c = sum.normalized().unwrap();
    let radius = vertices
        .iter()
        .map(|v| v.cross(*c).norm().atan2(v.dot(*c)))
        .fold(0.0, f64::max)
        + 1e-3;
    let normals: Vec<(Vec3, f64)> = (0..vertices.len())
        .map(|k| {
            let nrm = vertices[k].cross(*vertices[(k + 1) % vertices.len()]);
            (nrm, nrm.dot(*c).signum())
        })
        .collect();
    let (e1, e2) = c.local_frame();
    let cap_cos = radius.cos();
    let mut hits = 0usize;
    for _ in 0..samples {
        let z: f64 = 1.0 - rng.random::<f64>() * (1.0 - cap_cos);
        let az = rng.random::<f64>() * 2.0 * PI;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let p = c.vec() * z + e1.vec() * (r * az.cos()) + e2.vec() * (r * az.sin());
        if normals.iter().all(|(nrm, s)| nrm.dot(p) * s >= 0.0) {
            hits += 1;
        }
    }
    2.0 * PI * (1.0 - cap_cos) * hits as f64 / samples as f64
}

/// Relative error between two gradient vectors, guarded near zero.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

/// Central-difference gradient of the planar pair term with respect to `xi`.
pub fn plane_fd(xi: [f64; 2], xj: [f64; 2], delta: f64, w: f64, h: f64) -> [f64; 2] {
    let f = |p: [f64; 2]| {
        let d = ((p[0] - xj[0]).powi(2) + (p[1] - xj[1]).powi(2)).sqrt();
        w * (delta - d).powi(2)
    };
    [
        (f([xi[0] + h, xi[1]]) - f([xi[0] - h, xi[1]])) / (2.0 * h),
        (f([xi[0], xi[1] + h]) - f([xi[0], xi[1] - h])) / (2.0 * h),
    ]
}

/// Central-difference derivatives of the sphere pair term along the two
/// local tangent directions at `xi`, moving on the sphere by retraction.
pub fn sphere_fd(xi: UnitVec3, xj: UnitVec3, delta: f64, w: f64, h: f64) -> ([f64; 2], [Vec3; 2]) {
    let f = |p: Vec3| {
        let p = p.normalized().unwrap();
        let d = p.dot(*xj).clamp(-1.0, 1.0).acos();
        w * (delta - d).powi(2)
    };
    let (e, n) = xi.local_frame();
    let along = |t: Vec3| (f(xi.vec() + t * h) - f(xi.vec() - t * h)) / (2.0 * h);
    ([along(e.vec()), along(n.vec())], [e.vec(), n.vec()])
}

/// Central-difference gradient of the torus pair term, or `None` when the
/// minimizing adjacency changes inside the stencil.
pub fn torus_fd(xi: [f64; 2], xj: [f64; 2], delta: f64, w: f64, h: f64) -> Option<[f64; 2]> {
    let best = |p: [f64; 2]| {
        let mut out = (f64::INFINITY, (0i32, 0i32));
        for a in -1..=1 {
            for b in -1..=1 {
                let d = ((p[0] - xj[0] - a as f64).powi(2) + (p[1] - xj[1] - b as f64).powi(2)).sqrt();
                let e = w * (delta - d).powi(2);
                if e < out.0 {
                    out = (e, (a, b));
                }
            }
        }
        out
    };
    let centre = best(xi).1;
    let stencil = [
        [xi[0] + h, xi[1]],
        [xi[0] - h, xi[1]],
        [xi[0], xi[1] + h],
        [xi[0], xi[1] - h],
    ];
    let vals: Vec<(f64, (i32, i32))> = stencil.iter().map(|&p| best(p)).collect();
    if vals.iter().any(|v| v.1 != centre) {
        return None;
    }
    Some([(vals[0].0 - vals[1].0) / (2.0 * h), (vals[2].0 - vals[3].0) / (2.0 * h)])
}

/// Checks a generated graph against its preset's published envelope and
/// describes the first violation.
pub fn envelope_violation(preset: CorpusPreset, g: &Graph) -> Option<String> {
    let n = g.node_count();
    let m = g.edge_count();
    if !g.is_connected() {
        return Some("disconnected".into());
    }
    match preset.spec(0) {
        CorpusSpec::Clustered(s) => {
            let labels = g.clusters()?;
            let k = labels.iter().max().map_or(0, |&c| c + 1);
            let q = modularity_double_sum(g, labels);
            if !(s.node_range[0]..=s.node_range[1]).contains(&n) {
                return Some(format!("{n} nodes"));
            }
            if !(s.edge_range[0]..=s.edge_range[1]).contains(&m) {
                return Some(format!("{m} links"));
            }
            if !(4..=7).contains(&k) {
                return Some(format!("{k} clusters"));
            }
            if (q - s.target_modularity).abs() > 0.02 {
                return Some(format!("modularity {q}"));
            }
        }
        CorpusSpec::ScaleFree(s) => {
            let density = 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0));
            if !(50..=57).contains(&n) {
                return Some(format!("{n} nodes"));
            }
            if (density - s.target_density).abs() > 0.1 * s.target_density {
                return Some(format!("density {density}"));
            }
            let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
            deg.sort_unstable();
            if *deg.last().unwrap() < 3 * deg[n / 2] {
                return Some("degree tail too light".into());
            }
        }
    }
    None
}

/// Distance from `b` to the forward half great circle leaving `a` through
/// `head`, by dense sampling at 0.1 degree steps.
pub fn sampled_track_distance(a: UnitVec3, head: UnitVec3, b: UnitVec3) -> f64 {
    let normal = a.cross(*head).normalized().unwrap();
    let forward = normal.cross(*a);
    (0..=1800)
        .map(|k| {
            let t = (k as f64 * 0.1).to_radians();
            let p = (a.vec() * t.cos() + forward * t.sin()).normalized().unwrap();
            p.cross(*b).norm().atan2(p.dot(*b))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Independent re-check of a geographic trial against the study's
/// constraints. Returns a description of the first violation.
pub fn check_geo_trial(t: &wrapgraph::stimuli::TrialSpec, mc_samples: usize) -> Option<String> {
    use wrapgraph::sphere::{great_circle_distance, spherical_polygon_area_vec, HitResult};
    use wrapgraph::stimuli::{Choice, GroundTruth, TrialPayload};
    let deg = |a: UnitVec3, b: UnitVec3| great_circle_distance(a, b).to_degrees();
    match (&t.payload, &t.ground_truth) {
        (TrialPayload::Distance { pair_a, pair_b, .. }, GroundTruth::Choice(c)) => {
            let (a0, a1, b0, b1) = (pair_a[0].to_vec(), pair_a[1].to_vec(), pair_b[0].to_vec(), pair_b[1].to_vec());
            let (da, db) = (deg(a0, a1), deg(b0, b1));
            let want = if t.is_attention_check { 0.40 } else { t.difficulty?.distance_difference() };
            let got = (da - db).abs() / da.max(db);
            if (got - want).abs() > 1e-6 {
                return Some(format!("distance difference {got}"));
            }
            let larger = if da > db { Choice::A } else { Choice::B };
            if *c != larger {
                return Some("wrong larger pair".into());
            }
            let (lo, hi) = if t.is_attention_check { (0.0, 60.0 + 1e-9) } else { (40.0 - 1e-9, 60.0 + 1e-9) };
            if !(lo..=hi).contains(&da) || !(lo..=hi).contains(&db) || da.max(db) < 40.0 - 1e-9 {
                return Some(format!("separations {da} {db}"));
            }
            let ca = (a0.vec() + a1.vec()).normalized()?;
            let cb = (b0.vec() + b1.vec()).normalized()?;
            if deg(ca, cb) < 60.0 - 1e-9 {
                return Some("centroids too close".into());
            }
        }
        (TrialPayload::Area { polygon_a, polygon_b, .. }, GroundTruth::Choice(c)) => {
            let pa: Vec<UnitVec3> = polygon_a.iter().map(|p| p.to_vec()).collect();
            let pb: Vec<UnitVec3> = polygon_b.iter().map(|p| p.to_vec()).collect();
            if pa.len() != 8 || pb.len() != 8 {
                return Some("polygons are not octagons".into());
            }
            let (sa, sb) = (spherical_polygon_area_vec(&pa).ok()?, spherical_polygon_area_vec(&pb).ok()?);
            let want = 1.0 + if t.is_attention_check { 0.40 } else { t.difficulty?.area_difference() };
            let ratio = sa.max(sb) / sa.min(sb);
            if (ratio - want).abs() > 1e-3 {
                return Some(format!("area ratio {ratio}"));
            }
            if *c != if sa > sb { Choice::A } else { Choice::B } {
                return Some("wrong larger polygon".into());
            }
            let mut r = rng(t.seed);
            for (poly, exact) in [(&pa, sa), (&pb, sb)] {
                let mc = monte_carlo_area(poly, mc_samples, &mut r);
                if (mc - exact).abs() > 0.01 * exact {
                    return Some(format!("monte carlo area {mc} vs {exact}"));
                }
            }
            let centre = |p: &[UnitVec3]| p.iter().fold(Vec3::default(), |s, v| s + v.vec()).normalized();
            if deg(centre(&pa)?, centre(&pb)?) < 60.0 - 1e-9 {
                return Some("polygon centroids too close".into());
            }
        }
        (TrialPayload::Direction { a, arrow_head, b, .. }, GroundTruth::Trajectory(truth)) => {
            let (a, h, b) = (a.to_vec(), arrow_head.to_vec(), b.to_vec());
            let d = sampled_track_distance(a, h, b).to_degrees();
            let sampled = if d <= 1.0 { HitResult::Hit } else { HitResult::Miss };
            if sampled != *truth {
                return Some(format!("sampled track distance {d} disagrees with {truth:?}"));
            }
            if deg(a, b) < 60.0 - 1e-9 {
                return Some("A and B too close".into());
            }
            if *truth == HitResult::Miss {
                let normal = a.cross(*h).normalized()?;
                let cross = normal.dot(*b).clamp(-1.0, 1.0).asin().abs().to_degrees();
                if (cross - 40.0).abs() > 0.1 {
                    return Some(format!("miss cross-track {cross}"));
                }
            }
        }
        _ => return Some("payload and ground truth disagree".into()),
    }
    None
}

pub fn random_triple(rng: &mut impl Rng) -> RotationTriple {
    RotationTriple::new(
        rng.random_range(-180.0..180.0),
        rng.random_range(-90.0..=90.0),
        rng.random_range(-180.0..180.0),
    )
}

/// Angular distance (radians) from a rotated point to the nearest cut or
/// limb of the projection.
pub fn boundary_clearance(kind: ProjectionKind, rotated: UnitVec3) -> f64 {
    let g = rotated.to_geo();
    if kind.is_hemispheric() {
        // faces meet on the great circle through the poles at lon 0 / 180
        rotated.y.abs().clamp(0.0, 1.0).asin()
    } else {
        let lon_gap = (180.0 - g.lon.abs()).to_radians();
        let pole_gap = (90.0 - g.lat.abs()).to_radians();
        (lon_gap * g.lat.to_radians().cos()).min(pole_gap)
    }
}

/// |det J| / cos(lat) of the screen mapping at a geographic point, by central
/// differences with h = 1e-5 rad.
pub fn area_scale(p: &Projector, lon: f64, lat: f64) -> f64 {
    let h = 1e-5f64;
    let at = |dl: f64, dp: f64| {
        let s = p.project_geo(GeoPoint {
            lon: lon + dl.to_degrees(),
            lat: lat + dp.to_degrees(),
        });
        (s.x, s.y)
    };
    let (xl1, yl1) = at(h, 0.0);
    let (xl0, yl0) = at(-h, 0.0);
    let (xp1, yp1) = at(0.0, h);
    let (xp0, yp0) = at(0.0, -h);
    let (dxl, dyl) = ((xl1 - xl0) / (2.0 * h), (yl1 - yl0) / (2.0 * h));
    let (dxp, dyp) = ((xp1 - xp0) / (2.0 * h), (yp1 - yp0) / (2.0 * h));
    (dxl * dyp - dxp * dyl).abs() / lat.to_radians().cos()
}

/// Area scale on a 10 x 10 cell-centre grid over lat -80..80.
pub fn grid_area_scales(kind: ProjectionKind, w: f64, h: f64) -> Vec<f64> {
    let p = ProjectionSpec::new(kind, w, h).projector().unwrap();
    let mut out = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            let lat = -80.0 + (i as f64 + 0.5) * 16.0;
            let lon = -170.0 + (j as f64 + 0.5) * 34.0;
            out.push(area_scale(&p, lon, lat));
        }
    }
    out
}

/// Per-edge recheck: rotate both endpoints and compare hemispheres by the
/// sign of the rotated longitude.
pub fn crossing_recheck(g: &Graph, pos: &[UnitVec3], r: RotationTriple) -> usize {
    let m = r.to_rotation();
    let west = |v: UnitVec3| m.apply(v).to_geo().lon < 0.0;
    let mut count = 0;
    for &(a, b) in g.edges() {
        if west(pos[a]) != west(pos[b]) {
            count += 1;
        }
    }
    count
}

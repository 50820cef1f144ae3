//! Trial generators for the geographic comparison tasks and the network
//! tasks, with closed-loop verification of every ground truth, plus the
//! counterbalanced condition orders.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autopan::{auto_pan, translate_torus, PanSearchConfig};
use crate::corpus::{modularity, CorpusPreset};
use crate::error::{Error, Result};
use crate::graph::{shortest_path_length, Graph, GraphDocument};
use crate::layout::{ideal_distances, run_sgd, Geometry, Layout, LayoutDocument, SgdSchedule, DEFAULT_ITERATIONS};
use crate::projection::ProjectionKind;
use crate::sphere::{
    cross_track_distance, great_circle_distance, spherical_polygon_area, trajectory_hit_test, GeoPoint, HitResult,
    UnitVec3, Vec3, DEFAULT_HIT_EPSILON,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_ATTEMPTS: usize = 10_000;

pub const SEPARATION_RANGE_DEG: [f64; 2] = [40.0, 60.0];
pub const MIN_CENTROID_SEPARATION_DEG: f64 = 60.0;
pub const DIRECTION_ARROW_DEG: f64 = 10.0;
pub const DIRECTION_MIN_SEPARATION_DEG: f64 = 60.0;
pub const MISS_OFFSET_DEG: f64 = 40.0;
/// Along-track range for the target (or its foot point), degrees.
pub const DIRECTION_ALONG_RANGE_DEG: [f64; 2] = [60.0, 170.0];
pub const ATTENTION_RATIO: f64 = 0.40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Distance,
    Area,
    Direction,
    ClusterCount,
    ShortestPath,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Distance => "distance",
            Task::Area => "area",
            Task::Direction => "direction",
            Task::ClusterCount => "cluster-count",
            Task::ShortestPath => "shortest-path",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Task::Distance, Task::Area, Task::Direction, Task::ClusterCount, Task::ShortestPath]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl Difficulty {
    /// Relative difference between the two distances of a distance trial.
    pub fn distance_difference(self) -> f64 {
        match self {
            Difficulty::Easy => 0.10,
            Difficulty::Hard => 0.05,
        }
    }

    /// Relative difference between the two areas of an area trial.
    pub fn area_difference(self) -> f64 {
        match self {
            Difficulty::Easy => 0.10,
            Difficulty::Hard => 0.07,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundTruth {
    Choice(Choice),
    Trajectory(HitResult),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TrialPayload {
    #[serde(rename_all = "camelCase")]
    Distance {
        pair_a: [GeoPoint; 2],
        pair_b: [GeoPoint; 2],
        separation_a_deg: f64,
        separation_b_deg: f64,
    },
    #[serde(rename_all = "camelCase")]
    Area {
        polygon_a: Vec<GeoPoint>,
        polygon_b: Vec<GeoPoint>,
        area_a_sr: f64,
        area_b_sr: f64,
    },
    #[serde(rename_all = "camelCase")]
    Direction {
        a: GeoPoint,
        arrow_head: GeoPoint,
        b: GeoPoint,
        cross_track_deg: f64,
        hit_epsilon_deg: f64,
    },
    #[serde(rename_all = "camelCase")]
    Network {
        preset: Option<CorpusPreset>,
        graph: GraphDocument,
        layout: LayoutDocument,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        projection: Option<ProjectionKind>,
        highlighted_nodes: Vec<usize>,
        highlighted_edges: Vec<[usize; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialSpec {
    pub schema_version: u32,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    pub is_attention_check: bool,
    pub seed: u64,
    pub payload: TrialPayload,
    pub ground_truth: GroundTruth,
}

fn random_point(rng: &mut impl Rng) -> UnitVec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v.normalized().expect("non-zero");
        }
    }
}

fn exhausted(what: &str) -> Error {
    Error::SpecInfeasible(format!("{what}: no valid sample in {MAX_ATTEMPTS} attempts"))
}

/// A second centre at least the minimum separation away from `first`.
fn distant_centre(first: UnitVec3, rng: &mut impl Rng) -> Result<UnitVec3> {
    for _ in 0..MAX_ATTEMPTS {
        let c = random_point(rng);
        if great_circle_distance(first, c).to_degrees() >= MIN_CENTROID_SEPARATION_DEG {
            return Ok(c);
        }
    }
    Err(exhausted("centroid separation"))
}

fn choose_larger(rng: &mut impl Rng) -> Choice {
    if rng.random_bool(0.5) {
        Choice::A
    } else {
        Choice::B
    }
}

/// Symmetric pair about `centre` with the given separation.
fn pair_about(centre: UnitVec3, separation_deg: f64, rng: &mut impl Rng) -> [UnitVec3; 2] {
    let bearing = rng.random_range(0.0..360.0);
    let half = (separation_deg / 2.0).to_radians();
    [centre.destination(bearing, half), centre.destination(bearing + 180.0, half)]
}

/// Pair midpoint; the pairs are symmetric so this is the centre they were
/// built around.
fn pair_centroid(p: &[GeoPoint; 2]) -> UnitVec3 {
    (p[0].to_vec().vec() + p[1].to_vec().vec())
        .normalized()
        .expect("pairs are never antipodal")
}

pub fn generate_distance_trial(difficulty: Difficulty, seed: u64, attention_check: bool) -> Result<TrialSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diff = if attention_check { ATTENTION_RATIO } else { difficulty.distance_difference() };
    let [lo, hi] = SEPARATION_RANGE_DEG;
    // normal trials keep both separations in range; the attention check
    // cannot (a 40% gap does not fit in 40..60), so only the larger is
    let large_lo = if attention_check { lo } else { lo / (1.0 - diff) };
    let large = rng.random_range(large_lo..=hi);
    let small = large * (1.0 - diff);
    let larger = choose_larger(&mut rng);
    let c1 = random_point(&mut rng);
    let c2 = distant_centre(c1, &mut rng)?;
    let (sa, sb) = match larger {
        Choice::A => (large, small),
        Choice::B => (small, large),
    };
    let to_geo = |p: [UnitVec3; 2]| [p[0].to_geo(), p[1].to_geo()];
    let pair_a = to_geo(pair_about(c1, sa, &mut rng));
    let pair_b = to_geo(pair_about(c2, sb, &mut rng));
    let trial = TrialSpec {
        schema_version: SCHEMA_VERSION,
        task: Task::Distance,
        difficulty: Some(difficulty),
        is_attention_check: attention_check,
        seed,
        payload: TrialPayload::Distance {
            separation_a_deg: great_circle_distance(pair_a[0].to_vec(), pair_a[1].to_vec()).to_degrees(),
            separation_b_deg: great_circle_distance(pair_b[0].to_vec(), pair_b[1].to_vec()).to_degrees(),
            pair_a,
            pair_b,
        },
        ground_truth: GroundTruth::Choice(larger),
    };
    verify_trial(&trial)?;
    Ok(trial)
}

/// Parameters of the octagons in area trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AreaTrialConfig {
    /// Allowed polygon extent (diameter of the circumscribed circle), degrees.
    pub extent_range_deg: [f64; 2],
    pub vertices: usize,
    /// Smallest angular gap between consecutive vertex bearings, degrees.
    pub min_bearing_gap_deg: f64,
}

impl Default for AreaTrialConfig {
    fn default() -> Self {
        Self {
            extent_range_deg: SEPARATION_RANGE_DEG,
            vertices: 8,
            min_bearing_gap_deg: 12.0,
        }
    }
}

fn random_bearings(cfg: &AreaTrialConfig, rng: &mut impl Rng) -> Result<Vec<f64>> {
    for _ in 0..MAX_ATTEMPTS {
        let mut b: Vec<f64> = (0..cfg.vertices).map(|_| rng.random_range(0.0..360.0)).collect();
        b.sort_by(f64::total_cmp);
        let ok = (0..b.len()).all(|i| {
            let next = if i + 1 < b.len() { b[i + 1] } else { b[0] + 360.0 };
            next - b[i] >= cfg.min_bearing_gap_deg
        });
        if ok {
            return Ok(b);
        }
    }
    Err(exhausted("polygon bearings"))
}

/// Vertices on the small circle of angular radius `radius` around `centre`,
/// in bearing order, so the polygon is convex.
fn cyclic_polygon(centre: UnitVec3, bearings: &[f64], radius: f64) -> Vec<GeoPoint> {
    bearings
        .iter()
        .map(|&b| centre.destination(b, radius).to_geo())
        .collect()
}

fn vertex_centroid(p: &[GeoPoint]) -> UnitVec3 {
    p.iter()
        .fold(Vec3::default(), |acc, q| acc + q.to_vec().vec())
        .normalized()
        .expect("small polygons have a centroid")
}

/// Radius at which the cyclic polygon has the requested area.
fn radius_for_area(centre: UnitVec3, bearings: &[f64], area: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, PI / 2.0 - 1e-6);
    if spherical_polygon_area(&cyclic_polygon(centre, bearings, hi))? < area {
        return Err(Error::SpecInfeasible("area out of reach".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spherical_polygon_area(&cyclic_polygon(centre, bearings, mid))? < area {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn generate_area_trial(difficulty: Difficulty, seed: u64, attention_check: bool) -> Result<TrialSpec> {
    generate_area_trial_with(difficulty, seed, attention_check, &AreaTrialConfig::default())
}

pub fn generate_area_trial_with(
    difficulty: Difficulty,
    seed: u64,
    attention_check: bool,
    cfg: &AreaTrialConfig,
) -> Result<TrialSpec> {
    if cfg.vertices < 3 || !(cfg.extent_range_deg[0] > 0.0 && cfg.extent_range_deg[0] <= cfg.extent_range_deg[1]) {
        return Err(Error::InvalidArgument("bad area trial configuration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = 1.0 + if attention_check { ATTENTION_RATIO } else { difficulty.area_difference() };
    let [lo, hi] = cfg.extent_range_deg;
    for _ in 0..MAX_ATTEMPTS {
        let c1 = random_point(&mut rng);
        let c2 = distant_centre(c1, &mut rng)?;
        let large_radius = (rng.random_range(lo..=hi) / 2.0).to_radians();
        let large_bearings = random_bearings(cfg, &mut rng)?;
        let small_bearings = random_bearings(cfg, &mut rng)?;
        let larger = choose_larger(&mut rng);
        let (cl, cs) = match larger {
            Choice::A => (c1, c2),
            Choice::B => (c2, c1),
        };
        let large = cyclic_polygon(cl, &large_bearings, large_radius);
        let target = spherical_polygon_area(&large)? / ratio;
        let small_radius = match radius_for_area(cs, &small_bearings, target) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let small_extent = 2.0 * small_radius.to_degrees();
        if !(lo..=hi).contains(&small_extent) && !attention_check {
            continue;
        }
        let small = cyclic_polygon(cs, &small_bearings, small_radius);
        // uneven bearings pull the vertex centroid off the circle centre
        if great_circle_distance(vertex_centroid(&large), vertex_centroid(&small)).to_degrees()
            < MIN_CENTROID_SEPARATION_DEG
        {
            continue;
        }
        let (polygon_a, polygon_b) = match larger {
            Choice::A => (large, small),
            Choice::B => (small, large),
        };
        let trial = TrialSpec {
            schema_version: SCHEMA_VERSION,
            task: Task::Area,
            difficulty: Some(difficulty),
            is_attention_check: attention_check,
            seed,
            payload: TrialPayload::Area {
                area_a_sr: spherical_polygon_area(&polygon_a)?,
                area_b_sr: spherical_polygon_area(&polygon_b)?,
                polygon_a,
                polygon_b,
            },
            ground_truth: GroundTruth::Choice(larger),
        };
        verify_trial(&trial)?;
        return Ok(trial);
    }
    Err(exhausted("area trial"))
}

pub fn generate_direction_trial(seed: u64, hit_probability: f64, attention_check: bool) -> Result<TrialSpec> {
    if !(0.0..=1.0).contains(&hit_probability) {
        return Err(Error::InvalidArgument(format!(
            "hit probability {hit_probability} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, head, b, truth) = if attention_check {
        let a = GeoPoint::new(0.0, 0.0);
        (a, GeoPoint::new(DIRECTION_ARROW_DEG, 0.0), GeoPoint::new(60.0, 0.0), HitResult::Hit)
    } else {
        let hit = rng.random_bool(hit_probability);
        let mut found = None;
        for _ in 0..MAX_ATTEMPTS {
            let a = random_point(&mut rng);
            let bearing = rng.random_range(0.0..360.0);
            let head = a.destination(bearing, DIRECTION_ARROW_DEG.to_radians());
            let along = rng.random_range(DIRECTION_ALONG_RANGE_DEG[0]..=DIRECTION_ALONG_RANGE_DEG[1]);
            let foot = a.destination(bearing, along.to_radians());
            let b = if hit {
                foot
            } else {
                // leave the track at a right angle, to either side
                let (east, north) = foot.local_frame();
                let travel = foot.tangent_towards(a).map(|t| -t.vec()).expect("foot is not a or -a");
                let track_bearing = travel.dot(east.vec()).atan2(travel.dot(north.vec())).to_degrees();
                let side = if rng.random_bool(0.5) { 90.0 } else { -90.0 };
                foot.destination(track_bearing + side, MISS_OFFSET_DEG.to_radians())
            };
            if great_circle_distance(a, b).to_degrees() >= DIRECTION_MIN_SEPARATION_DEG {
                found = Some((a.to_geo(), head.to_geo(), b.to_geo(), if hit { HitResult::Hit } else { HitResult::Miss }));
                break;
            }
        }
        found.ok_or_else(|| exhausted("direction trial"))?
    };
    let trial = TrialSpec {
        schema_version: SCHEMA_VERSION,
        task: Task::Direction,
        difficulty: None,
        is_attention_check: attention_check,
        seed,
        payload: TrialPayload::Direction {
            cross_track_deg: cross_track_distance(a.to_vec(), head.to_vec(), b.to_vec())?
                .abs()
                .to_degrees(),
            hit_epsilon_deg: DEFAULT_HIT_EPSILON.to_degrees(),
            a,
            arrow_head: head,
            b,
        },
        ground_truth: GroundTruth::Trajectory(truth),
    };
    verify_trial(&trial)?;
    Ok(trial)
}

/// How a network trial is shown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkView {
    pub geometry: Geometry,
    /// Projection for sphere layouts; it selects the auto-pan score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionKind>,
}

impl NetworkView {
    /// The four layout conditions of the network study.
    pub const STUDY: [NetworkView; 4] = [
        NetworkView { geometry: Geometry::Plane, projection: None },
        NetworkView { geometry: Geometry::Torus, projection: None },
        NetworkView { geometry: Geometry::Sphere, projection: Some(ProjectionKind::EqualEarth) },
        NetworkView { geometry: Geometry::Sphere, projection: Some(ProjectionKind::OrthographicHemisphere) },
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkTrialConfig {
    pub iterations: usize,
    pub pan: PanSearchConfig,
    /// Required shortest-path length; drawn from 1..=4 when absent.
    #[serde(default)]
    pub path_length: Option<usize>,
}

impl Default for NetworkTrialConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            pan: PanSearchConfig::default(),
            path_length: None,
        }
    }
}

/// Two clusters joined by a single edge.
fn two_cluster_graph(rng: &mut impl Rng) -> Result<Graph> {
    for _ in 0..MAX_ATTEMPTS {
        let sizes = [rng.random_range(8..=12), rng.random_range(8..=12)];
        let mut edges = Vec::new();
        let mut labels = Vec::new();
        let mut start = 0;
        for (c, &s) in sizes.iter().enumerate() {
            for i in 0..s {
                for j in (i + 1)..s {
                    if rng.random_bool(0.6) {
                        edges.push((start + i, start + j));
                    }
                }
            }
            labels.extend(std::iter::repeat_n(c, s));
            start += s;
        }
        let a = rng.random_range(0..sizes[0]);
        let b = sizes[0] + rng.random_range(0..sizes[1]);
        edges.push((a, b));
        let g = Graph::new(start, edges, Some(labels))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(exhausted("two-cluster graph"))
}

/// Nodes on one shortest path from `s` to `t`.
fn path_nodes(g: &Graph, s: usize, t: usize) -> Vec<usize> {
    let dist = g.bfs(t);
    let mut path = vec![s];
    let mut v = s;
    while v != t {
        let d = dist[v].expect("connected");
        v = *g
            .neighbors(v)
            .iter()
            .find(|&&w| dist[w] == Some(d - 1))
            .expect("bfs predecessor exists");
        path.push(v);
    }
    path
}

fn lay_out(g: &Graph, view: NetworkView, cfg: &NetworkTrialConfig, seed: u64) -> Result<LayoutDocument> {
    let ideal = ideal_distances(g, view.geometry)?;
    let schedule = SgdSchedule::for_ideal(&ideal, cfg.iterations, seed);
    let run = run_sgd(g, view.geometry, &schedule)?;
    let (layout, pan) = match (&run.layout, view.geometry) {
        (Layout::Plane(_), _) => (run.layout.clone(), None),
        (Layout::Torus(p), _) => {
            let pan = auto_pan(g, &run.layout, ProjectionKind::EqualEarth, &cfg.pan)?;
            let moved = translate_torus(p, pan.best_offset.expect("torus pans return an offset"));
            (Layout::Torus(moved), Some(pan))
        }
        (Layout::Sphere(_), _) => {
            let kind = view.projection.unwrap_or(ProjectionKind::OrthographicHemisphere);
            let pan_cfg = PanSearchConfig { seed, ..cfg.pan };
            (run.layout.clone(), Some(auto_pan(g, &run.layout, kind, &pan_cfg)?))
        }
    };
    let mut doc = LayoutDocument::new(&layout);
    doc.seed = Some(seed);
    doc.schedule = Some(schedule);
    doc.final_stress = Some(crate::layout::stress(&layout, &ideal));
    doc.pan = pan.map(|mut p| {
        // the full score list is debugging detail, not stimulus content
        p.all_scores = None;
        p
    });
    Ok(doc)
}

pub fn generate_network_trial(
    task: Task,
    preset: CorpusPreset,
    view: NetworkView,
    seed: u64,
    attention_check: bool,
    cfg: &NetworkTrialConfig,
) -> Result<TrialSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph_seed = rng.next_u64();
    let layout_seed = rng.next_u64();
    let (graph, preset_used, highlighted_nodes, highlighted_edges, truth) = match task {
        Task::ClusterCount => {
            if attention_check {
                let g = two_cluster_graph(&mut rng)?;
                (g, None, vec![], vec![], 2)
            } else {
                let g = preset.spec(graph_seed).generate()?;
                let k = g.cluster_count().ok_or_else(|| {
                    Error::InvalidArgument(format!("preset {} has no planted clusters", preset.name()))
                })?;
                (g, Some(preset), vec![], vec![], k)
            }
        }
        Task::ShortestPath => {
            let g = preset.spec(graph_seed).generate()?;
            let want = if attention_check {
                2
            } else {
                cfg.path_length.unwrap_or_else(|| rng.random_range(1..=4))
            };
            let n = g.node_count();
            let mut pair = None;
            for _ in 0..MAX_ATTEMPTS {
                let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
                if s != t && shortest_path_length(&g, s, t)? == want {
                    pair = Some((s, t));
                    break;
                }
            }
            let (s, t) = pair.ok_or_else(|| exhausted("node pair at the requested distance"))?;
            let edges = if attention_check {
                path_nodes(&g, s, t)
                    .windows(2)
                    .map(|w| [w[0].min(w[1]), w[0].max(w[1])])
                    .collect()
            } else {
                vec![]
            };
            (g, Some(preset), vec![s, t], edges, want)
        }
        _ => {
            return Err(Error::InvalidArgument(format!("{} is not a network task", task.name())));
        }
    };
    let layout = lay_out(&graph, view, cfg, layout_seed)?;
    let spec_json = match preset_used {
        Some(p) => serde_json::to_value(p.spec(graph_seed))?,
        None => serde_json::json!({"kind": "two-cluster-attention-check"}),
    };
    let trial = TrialSpec {
        schema_version: SCHEMA_VERSION,
        task,
        difficulty: preset_used.map(|p| match p {
            CorpusPreset::SmallEasy | CorpusPreset::LargeEasy | CorpusPreset::PathEasy => Difficulty::Easy,
            _ => Difficulty::Hard,
        }),
        is_attention_check: attention_check,
        seed,
        payload: TrialPayload::Network {
            preset: preset_used,
            graph: graph.to_document(spec_json, Some(graph_seed)),
            layout,
            projection: view.projection.filter(|_| view.geometry == Geometry::Sphere),
            highlighted_nodes,
            highlighted_edges,
        },
        ground_truth: GroundTruth::Count(truth),
    };
    verify_trial(&trial)?;
    Ok(trial)
}

fn mismatch(what: impl Into<String>) -> Error {
    Error::InvalidArgument(format!("trial failed verification: {}", what.into()))
}

/// Re-derives the ground truth and the difficulty constraints from the
/// stored geometry.
pub fn verify_trial(t: &TrialSpec) -> Result<()> {
    match (&t.payload, &t.ground_truth) {
        (TrialPayload::Distance { pair_a, pair_b, .. }, GroundTruth::Choice(c)) => {
            let da = great_circle_distance(pair_a[0].to_vec(), pair_a[1].to_vec()).to_degrees();
            let db = great_circle_distance(pair_b[0].to_vec(), pair_b[1].to_vec()).to_degrees();
            let want = if t.is_attention_check {
                ATTENTION_RATIO
            } else {
                t.difficulty.ok_or_else(|| mismatch("missing difficulty"))?.distance_difference()
            };
            if ((da - db).abs() / da.max(db) - want).abs() > 1e-9 {
                return Err(mismatch(format!("distance difference {da} vs {db}")));
            }
            let [lo, hi] = SEPARATION_RANGE_DEG;
            let in_range = |d: f64| d >= lo - 1e-9 && d <= hi + 1e-9;
            if !in_range(da.max(db)) || (!t.is_attention_check && !in_range(da.min(db))) {
                return Err(mismatch(format!("separations {da}, {db} out of range")));
            }
            if great_circle_distance(pair_centroid(pair_a), pair_centroid(pair_b)).to_degrees()
                < MIN_CENTROID_SEPARATION_DEG - 1e-9
            {
                return Err(mismatch("pair centroids too close"));
            }
            let larger = if da > db { Choice::A } else { Choice::B };
            if *c != larger {
                return Err(mismatch("wrong larger pair"));
            }
        }
        (TrialPayload::Area { polygon_a, polygon_b, .. }, GroundTruth::Choice(c)) => {
            let (aa, ab) = (spherical_polygon_area(polygon_a)?, spherical_polygon_area(polygon_b)?);
            let want = 1.0
                + if t.is_attention_check {
                    ATTENTION_RATIO
                } else {
                    t.difficulty.ok_or_else(|| mismatch("missing difficulty"))?.area_difference()
                };
            if (aa.max(ab) / aa.min(ab) - want).abs() > 1e-9 {
                return Err(mismatch(format!("area ratio {}", aa.max(ab) / aa.min(ab))));
            }
            if great_circle_distance(vertex_centroid(polygon_a), vertex_centroid(polygon_b)).to_degrees()
                < MIN_CENTROID_SEPARATION_DEG - 1e-6
            {
                return Err(mismatch("polygon centroids too close"));
            }
            let larger = if aa > ab { Choice::A } else { Choice::B };
            if *c != larger {
                return Err(mismatch("wrong larger polygon"));
            }
        }
        (TrialPayload::Direction { a, arrow_head, b, hit_epsilon_deg, .. }, GroundTruth::Trajectory(h)) => {
            let got = trajectory_hit_test(*a, *arrow_head, *b, hit_epsilon_deg.to_radians())?;
            if got != *h {
                return Err(mismatch("hit test disagrees"));
            }
            if great_circle_distance(a.to_vec(), b.to_vec()).to_degrees() < DIRECTION_MIN_SEPARATION_DEG - 1e-9 {
                return Err(mismatch("target too close to start"));
            }
            if *h == HitResult::Miss {
                let xt = cross_track_distance(a.to_vec(), arrow_head.to_vec(), b.to_vec())?
                    .abs()
                    .to_degrees();
                if (xt - MISS_OFFSET_DEG).abs() > 1e-6 {
                    return Err(mismatch(format!("miss offset {xt}")));
                }
            }
        }
        (
            TrialPayload::Network {
                graph,
                highlighted_nodes,
                highlighted_edges,
                preset,
                ..
            },
            GroundTruth::Count(k),
        ) => {
            let g = graph.to_graph()?;
            match t.task {
                Task::ClusterCount => {
                    let labels = g.clusters().ok_or_else(|| mismatch("no cluster labels"))?;
                    if g.cluster_count() != Some(*k) {
                        return Err(mismatch("cluster count"));
                    }
                    if preset.is_some() && !(4..=7).contains(k) {
                        return Err(mismatch(format!("{k} clusters")));
                    }
                    if *k > 1 && modularity(&g, labels) <= 0.0 {
                        return Err(mismatch("planted partition has no community structure"));
                    }
                }
                Task::ShortestPath => {
                    let [s, tt] = highlighted_nodes[..] else {
                        return Err(mismatch("need two highlighted nodes"));
                    };
                    if shortest_path_length(&g, s, tt)? != *k || !(1..=4).contains(k) {
                        return Err(mismatch("path length"));
                    }
                    if !highlighted_edges.is_empty()
                        && (highlighted_edges.len() != *k
                            || !highlighted_edges.iter().all(|e| g.has_edge(e[0], e[1])))
                    {
                        return Err(mismatch("highlighted path"));
                    }
                }
                _ => return Err(mismatch("network payload on a geographic task")),
            }
        }
        _ => return Err(mismatch("payload does not match the ground truth type")),
    }
    Ok(())
}

/// Williams design: each condition follows every other equally often. For
/// odd `n` the mirrored rows are appended, giving `2n` orders.
pub fn williams_latin_square(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![];
    }
    // first row 0, 1, n-1, 2, n-2, ...
    let mut first = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, n);
    for i in 0..n {
        if i % 2 == 0 {
            first.push(lo);
            lo += 1;
        } else {
            hi -= 1;
            first.push(hi);
        }
    }
    let mut rows: Vec<Vec<usize>> = (0..n)
        .map(|r| first.iter().map(|&c| (c + r) % n).collect())
        .collect();
    if n % 2 == 1 {
        let mirrored: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().rev().copied().collect()).collect();
        rows.extend(mirrored);
    }
    rows
}

/// All orders of `n` conditions, in lexicographic order.
pub fn full_factorial_orders(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Condition {
    pub projection: ProjectionKind,
    pub interactive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionTrials {
    pub condition: Condition,
    pub trials: Vec<TrialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialBatch {
    pub schema_version: u32,
    pub task: Task,
    pub seed: u64,
    pub conditions: Vec<ConditionTrials>,
    /// Counterbalanced projection orders (indices into
    /// `ProjectionKind::ALL`), used identically in both interactivity blocks.
    pub projection_orders: Vec<Vec<usize>>,
}

/// Trials per condition for a geographic task: 6 easy + 6 hard for distance
/// and area, 8 for direction, each optionally followed by one attention
/// check inserted at a random position.
pub fn trials_per_condition(task: Task) -> Result<Vec<Option<Difficulty>>> {
    Ok(match task {
        Task::Distance | Task::Area => {
            let mut v = vec![Some(Difficulty::Easy); 6];
            v.extend(vec![Some(Difficulty::Hard); 6]);
            v
        }
        Task::Direction => vec![None; 8],
        _ => return Err(Error::InvalidArgument(format!("{} is not a geographic task", task.name()))),
    })
}

pub fn generate_geo_batch(task: Task, seed: u64, attention_checks: bool) -> Result<TrialBatch> {
    let plan = trials_per_condition(task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conditions = Vec::new();
    for interactive in [false, true] {
        for projection in ProjectionKind::ALL {
            let mut trials = Vec::with_capacity(plan.len() + 1);
            for d in &plan {
                let s = rng.next_u64();
                trials.push(match task {
                    Task::Distance => generate_distance_trial(d.expect("difficulty"), s, false)?,
                    Task::Area => generate_area_trial(d.expect("difficulty"), s, false)?,
                    _ => generate_direction_trial(s, 0.5, false)?,
                });
            }
            if attention_checks {
                let s = rng.next_u64();
                let check = match task {
                    Task::Distance => generate_distance_trial(Difficulty::Easy, s, true)?,
                    Task::Area => generate_area_trial(Difficulty::Easy, s, true)?,
                    _ => generate_direction_trial(s, 1.0, true)?,
                };
                let at = rng.random_range(0..=trials.len());
                trials.insert(at, check);
            }
            conditions.push(ConditionTrials {
                condition: Condition { projection, interactive },
                trials,
            });
        }
    }
    Ok(TrialBatch {
        schema_version: SCHEMA_VERSION,
        task,
        seed,
        conditions,
        projection_orders: williams_latin_square(ProjectionKind::ALL.len()),
    })
}

/// Network trials for one layout condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewTrials {
    pub view: NetworkView,
    pub trials: Vec<TrialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkTrialBatch {
    pub schema_version: u32,
    pub task: Task,
    pub seed: u64,
    pub repetitions: usize,
    pub views: Vec<ViewTrials>,
    /// Counterbalanced view orders (indices into `NetworkView::STUDY`).
    pub view_orders: Vec<Vec<usize>>,
}

/// Difficulty levels in presentation order for a network task.
pub fn network_levels(task: Task) -> Result<Vec<CorpusPreset>> {
    use CorpusPreset::*;
    Ok(match task {
        Task::ClusterCount => vec![SmallEasy, LargeEasy, SmallHard, LargeHard],
        Task::ShortestPath => vec![PathEasy, PathHard],
        _ => return Err(Error::InvalidArgument(format!("{} is not a network task", task.name()))),
    })
}

/// Every view shows the same graphs: `repetitions` per level, levels in
/// fixed order, trials shuffled within a level per view, and optionally
/// one attention check per view at a random position. Shortest-path
/// lengths cycle through 1..=4 within a level.
pub fn generate_network_batch(
    task: Task,
    seed: u64,
    repetitions: usize,
    attention_checks: bool,
    cfg: &NetworkTrialConfig,
) -> Result<NetworkTrialBatch> {
    use rand::seq::SliceRandom;
    use rayon::prelude::*;
    let levels = network_levels(task)?;
    if repetitions == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (preset, trial seed, path length)
    let items: Vec<(CorpusPreset, u64, Option<usize>)> = levels
        .iter()
        .flat_map(|&p| (0..repetitions).map(move |i| (p, i)))
        .map(|(p, i)| {
            let len = (task == Task::ShortestPath).then_some(i % 4 + 1);
            (p, rng.next_u64(), len)
        })
        .collect();
    let mut plans = Vec::new();
    for view in NetworkView::STUDY {
        let mut order = Vec::with_capacity(items.len() + 1);
        for level in 0..levels.len() {
            let mut block: Vec<usize> = (level * repetitions..(level + 1) * repetitions).collect();
            block.shuffle(&mut rng);
            order.extend(block.into_iter().map(Some));
        }
        let check = attention_checks.then(|| {
            let at = rng.random_range(0..=order.len());
            order.insert(at, None);
            rng.next_u64()
        });
        plans.push((view, order, check));
    }
    let views = plans
        .into_par_iter()
        .map(|(view, order, check)| {
            let trials = order
                .into_iter()
                .map(|slot| match slot {
                    Some(k) => {
                        let (preset, s, len) = items[k];
                        let c = NetworkTrialConfig { path_length: len, ..cfg.clone() };
                        generate_network_trial(task, preset, view, s, false, &c)
                    }
                    None => generate_network_trial(task, levels[0], view, check.expect("check seed"), true, cfg),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ViewTrials { view, trials })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkTrialBatch {
        schema_version: SCHEMA_VERSION,
        task,
        seed,
        repetitions,
        views,
        view_orders: full_factorial_orders(NetworkView::STUDY.len()),
    })
}

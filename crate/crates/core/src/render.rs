//! SVG and bitmap rendering of projected maps and wrapped node-link
//! diagrams.
//!
//! Torus views map the fundamental domain `[0, 1)^2` onto the whole canvas
//! (`x = u W`, `y = v H`). Each edge is drawn as the shortest image from its
//! first endpoint; the nine translated copies of that segment are clipped to
//! the domain so wrapped edges re-enter on the opposite side. Plane views fit
//! the layout's bounding box into the canvas.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::layout::{Layout, TORUS_OFFSETS};
use crate::projection::{ProjectionSpec, Projector, ScreenPoint};
use crate::raster::{rasterize_sphere_edges, Bitmap};
use crate::sphere::{GeoPoint, UnitVec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenderSpec {
    pub width: f64,
    pub height: f64,
    pub stroke_width: f64,
    pub node_radius: f64,
    pub show_graticule: bool,
    #[serde(default)]
    pub highlight_nodes: Option<Vec<usize>>,
    #[serde(default)]
    pub highlight_edges: Option<Vec<[usize; 2]>>,
}

impl RenderSpec {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            stroke_width: 1.0,
            node_radius: 3.0,
            show_graticule: false,
            highlight_nodes: None,
            highlight_edges: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidArgument("canvas dimensions must be positive".into()));
        }
        if !(self.stroke_width >= 1.0) || !(self.node_radius >= 0.0) {
            return Err(Error::InvalidArgument("stroke width must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Scene {
    Projection { projection: ProjectionSpec },
    Torus,
    Plane,
}

/// What to draw: GeoJSON layers (projection scenes only) and an optional
/// graph with its layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct SceneContent<'a> {
    pub geojson: &'a [Value],
    pub graph: Option<(&'a Graph, &'a Layout)>,
}

enum View {
    Projection(Projector),
    Torus { w: f64, h: f64 },
    Plane { scale: f64, dx: f64, dy: f64 },
}

impl View {
    fn build(scene: &Scene, content: &SceneContent, w: f64, h: f64, margin: f64) -> Result<View> {
        if let Some((g, layout)) = content.graph {
            if g.node_count() != layout.len() {
                return Err(Error::InconsistentScene(format!(
                    "{} nodes but {} positions",
                    g.node_count(),
                    layout.len()
                )));
            }
        }
        let geometry = content.graph.map(|(_, l)| l.geometry());
        match scene {
            Scene::Projection { projection } => {
                if geometry.is_some_and(|g| g != crate::layout::Geometry::Sphere) {
                    return Err(Error::InconsistentScene("projection scenes need a sphere layout".into()));
                }
                if (projection.canvas_width - w).abs() > 1e-9 || (projection.canvas_height - h).abs() > 1e-9 {
                    return Err(Error::InconsistentScene(format!(
                        "projection canvas {}x{} differs from render canvas {w}x{h}",
                        projection.canvas_width, projection.canvas_height
                    )));
                }
                Ok(View::Projection(projection.projector()?))
            }
            Scene::Torus | Scene::Plane if !content.geojson.is_empty() => Err(Error::InconsistentScene(
                "geographic layers need a projection scene".into(),
            )),
            Scene::Torus => match geometry {
                Some(crate::layout::Geometry::Torus) | None => Ok(View::Torus { w, h }),
                Some(_) => Err(Error::InconsistentScene("torus scenes need a torus layout".into())),
            },
            Scene::Plane => match content.graph {
                Some((_, Layout::Plane(p))) => Ok(fit_plane(p, w, h, margin)),
                None => Ok(View::Plane { scale: 1.0, dx: 0.0, dy: 0.0 }),
                Some(_) => Err(Error::InconsistentScene("plane scenes need a plane layout".into())),
            },
        }
    }
}

fn fit_plane(p: &[[f64; 2]], w: f64, h: f64, margin: f64) -> View {
    if p.is_empty() {
        return View::Plane { scale: 1.0, dx: 0.0, dy: 0.0 };
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for q in p {
        x0 = x0.min(q[0]);
        x1 = x1.max(q[0]);
        y0 = y0.min(q[1]);
        y1 = y1.max(q[1]);
    }
    let (bw, bh) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
    let (aw, ah) = ((w - 2.0 * margin).max(1.0), (h - 2.0 * margin).max(1.0));
    let scale = (aw / bw).min(ah / bh);
    View::Plane {
        scale,
        dx: (w - scale * (x1 - x0)) / 2.0 - scale * x0,
        dy: (h - scale * (y1 - y0)) / 2.0 - scale * y0,
    }
}

/// Liang-Barsky clip of a segment to `[0, 1]^2`.
pub fn clip_unit_square(a: [f64; 2], b: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d[0], a[0]), (d[0], 1.0 - a[0]), (-d[1], a[1]), (d[1], 1.0 - a[1])] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64| [(a[0] + t * d[0]).clamp(0.0, 1.0), (a[1] + t * d[1]).clamp(0.0, 1.0)];
    Some((at(t0), at(t1)))
}

fn circular_delta(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Visible pieces of a torus edge, in domain coordinates.
pub fn torus_edge_pieces(p: [f64; 2], q: [f64; 2]) -> Vec<([f64; 2], [f64; 2])> {
    let d = [circular_delta(p[0], q[0]), circular_delta(p[1], q[1])];
    TORUS_OFFSETS
        .iter()
        .filter_map(|off| {
            let a = [p[0] + off[0], p[1] + off[1]];
            clip_unit_square(a, [a[0] + d[0], a[1] + d[1]])
        })
        .filter(|(a, b)| a != b || (d == [0.0, 0.0]))
        .collect()
}

/// One polyline per drawn edge piece, tagged with the edge index.
fn edge_polylines(view: &View, g: &Graph, layout: &Layout) -> Vec<(usize, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        match (view, layout) {
            (View::Projection(proj), Layout::Sphere(p)) => {
                if let Ok(path) = proj.project_geodesic(p[a], p[b]) {
                    out.extend(path.segments.into_iter().map(|s| (e, s.iter().map(|q| (q.x, q.y)).collect())));
                }
            }
            (View::Torus { w, h }, Layout::Torus(p)) => {
                for (s, t) in torus_edge_pieces(p[a], p[b]) {
                    out.push((e, vec![(s[0] * w, s[1] * h), (t[0] * w, t[1] * h)]));
                }
            }
            (View::Plane { scale, dx, dy }, Layout::Plane(p)) => {
                let f = |q: [f64; 2]| (dx + scale * q[0], dy + scale * q[1]);
                out.push((e, vec![f(p[a]), f(p[b])]));
            }
            _ => unreachable!("scene and layout checked for consistency"),
        }
    }
    out
}

/// Screen position of every node.
pub fn node_positions(scene: &Scene, g: &Graph, layout: &Layout, spec: &RenderSpec) -> Result<Vec<ScreenPoint>> {
    let content = SceneContent { geojson: &[], graph: Some((g, layout)) };
    let view = View::build(scene, &content, spec.width, spec.height, margin(spec))?;
    Ok(place_nodes(&view, layout))
}

fn place_nodes(view: &View, layout: &Layout) -> Vec<ScreenPoint> {
    match (view, layout) {
        (View::Projection(proj), Layout::Sphere(p)) => p.iter().map(|&v| proj.project(v)).collect(),
        (View::Torus { w, h }, Layout::Torus(p)) => p.iter().map(|q| ScreenPoint::new(q[0] * w, q[1] * h)).collect(),
        (View::Plane { scale, dx, dy }, Layout::Plane(p)) => p
            .iter()
            .map(|q| ScreenPoint::new(dx + scale * q[0], dy + scale * q[1]))
            .collect(),
        _ => unreachable!("scene and layout checked for consistency"),
    }
}

fn margin(spec: &RenderSpec) -> f64 {
    spec.node_radius + spec.stroke_width
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn path_data(points: &[(f64, f64)], close: bool) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { "L" }, num(*x), num(*y));
    }
    if close {
        d.push('Z');
    }
    d
}

/// Projects a sampled line (not necessarily geodesic), splitting at breaks.
fn project_sampled(proj: &Projector, pts: &[UnitVec3]) -> Vec<Vec<(f64, f64)>> {
    let mut out: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut prev: Option<(UnitVec3, ScreenPoint)> = None;
    for &v in pts {
        let s = proj.project(v);
        match prev {
            Some((u, p)) if !proj.is_break(&p, &s) && !proj.crosses_cut(u, v) => {
                out.last_mut().expect("started").push((s.x, s.y))
            }
            _ => out.push(vec![(s.x, s.y)]),
        }
        prev = Some((v, s));
    }
    out.retain(|s| s.len() >= 2);
    out
}

fn graticule(proj: &Projector) -> Vec<Vec<(f64, f64)>> {
    let mut lines = Vec::new();
    for k in 0..12 {
        let lon = -180.0 + 30.0 * k as f64;
        let pts: Vec<UnitVec3> = (0..=88).map(|i| GeoPoint::new(lon, -88.0 + 2.0 * i as f64).to_vec()).collect();
        lines.extend(project_sampled(proj, &pts));
    }
    for k in 1..6 {
        let lat = -90.0 + 30.0 * k as f64;
        let pts: Vec<UnitVec3> = (0..=180).map(|i| GeoPoint::new(-180.0 + 2.0 * i as f64, lat).to_vec()).collect();
        lines.extend(project_sampled(proj, &pts));
    }
    lines
}

/// Great-circle polylines of a GeoJSON object: rings and line strings.
fn geojson_lines(value: &Value, out: &mut Vec<Vec<GeoPoint>>, points: &mut Vec<GeoPoint>) -> Result<()> {
    let bad = |m: &str| Error::InvalidArgument(format!("geojson: {m}"));
    let position = |p: &Value| -> Result<GeoPoint> {
        let a = p.as_array().ok_or_else(|| bad("position is not an array"))?;
        match (a.first().and_then(Value::as_f64), a.get(1).and_then(Value::as_f64)) {
            (Some(lon), Some(lat)) => Ok(GeoPoint::new(lon, lat)),
            _ => Err(bad("position needs two numbers")),
        }
    };
    let line = |v: &Value| -> Result<Vec<GeoPoint>> {
        v.as_array().ok_or_else(|| bad("expected a coordinate list"))?.iter().map(position).collect()
    };
    let lines = |v: &Value| -> Result<Vec<Vec<GeoPoint>>> {
        v.as_array().ok_or_else(|| bad("expected a list of lines"))?.iter().map(line).collect()
    };
    let coords = || value.get("coordinates").ok_or_else(|| bad("missing coordinates"));
    match value.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => {
            for f in value.get("features").and_then(Value::as_array).ok_or_else(|| bad("missing features"))? {
                geojson_lines(f, out, points)?;
            }
        }
        Some("Feature") => {
            if let Some(g) = value.get("geometry").filter(|g| !g.is_null()) {
                geojson_lines(g, out, points)?;
            }
        }
        Some("GeometryCollection") => {
            for g in value.get("geometries").and_then(Value::as_array).ok_or_else(|| bad("missing geometries"))? {
                geojson_lines(g, out, points)?;
            }
        }
        Some("Point") => points.push(position(coords()?)?),
        Some("MultiPoint") => points.extend(line(coords()?)?),
        Some("LineString") => out.push(line(coords()?)?),
        Some("MultiLineString") | Some("Polygon") => out.extend(lines(coords()?)?),
        Some("MultiPolygon") => {
            for poly in coords()?.as_array().ok_or_else(|| bad("expected polygons"))? {
                out.extend(lines(poly)?);
            }
        }
        other => return Err(bad(&format!("unsupported type {other:?}"))),
    }
    Ok(())
}

fn geodesic_polyline(proj: &Projector, pts: &[GeoPoint]) -> Vec<Vec<(f64, f64)>> {
    let mut out: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut open = false;
    for w in pts.windows(2) {
        let Ok(path) = proj.project_geodesic(w[0].to_vec(), w[1].to_vec()) else {
            open = false;
            continue;
        };
        for (i, seg) in path.segments.iter().enumerate() {
            let seg: Vec<(f64, f64)> = seg.iter().map(|p| (p.x, p.y)).collect();
            if i == 0 && open {
                // continue the current piece, skipping the shared vertex
                out.last_mut().expect("open piece").extend(seg.into_iter().skip(1));
            } else {
                out.push(seg);
            }
        }
        // the next arc starts where this one ended only if it ended unbroken
        open = path
            .segments
            .last()
            .and_then(|s| s.last())
            .is_some_and(|last| (proj.project(w[1].to_vec()).distance(last)) < 1e-6);
    }
    out
}

/// Renders a scene to a standalone SVG 1.1 document.
pub fn render_svg(scene: &Scene, content: &SceneContent, spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    let view = View::build(scene, content, spec.width, spec.height, margin(spec))?;
    let (w, h) = (spec.width, spec.height);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, num(w), num(h));
    let sw = num(spec.stroke_width);

    match &view {
        View::Projection(proj) => {
            if spec.show_graticule {
                let _ = writeln!(svg, r##"<g class="graticule" fill="none" stroke="#cccccc" stroke-width="{sw}">"##);
                for l in graticule(proj) {
                    let _ = writeln!(svg, r#"<path d="{}"/>"#, path_data(&l, false));
                }
                svg.push_str("</g>\n");
            }
            if !content.geojson.is_empty() {
                let (mut lines, mut points) = (Vec::new(), Vec::new());
                for layer in content.geojson {
                    geojson_lines(layer, &mut lines, &mut points)?;
                }
                let _ = writeln!(svg, r##"<g class="geo" fill="none" stroke="#777777" stroke-width="{sw}">"##);
                for l in &lines {
                    for piece in geodesic_polyline(proj, l) {
                        let _ = writeln!(svg, r#"<path d="{}"/>"#, path_data(&piece, false));
                    }
                }
                for p in &points {
                    let s = proj.project_geo(*p);
                    let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="{}"/>"#, num(s.x), num(s.y), num(spec.node_radius));
                }
                svg.push_str("</g>\n");
            }
            let _ = writeln!(svg, r##"<g class="outline" fill="none" stroke="#000000" stroke-width="{sw}">"##);
            for ring in proj.outline() {
                let _ = writeln!(svg, r#"<path d="{}"/>"#, path_data(&ring, true));
            }
            svg.push_str("</g>\n");
        }
        View::Torus { .. } => {
            let _ = writeln!(
                svg,
                r##"<rect class="outline" x="0" y="0" width="{}" height="{}" fill="none" stroke="#000000" stroke-width="{sw}"/>"##,
                num(w),
                num(h)
            );
        }
        View::Plane { .. } => {}
    }

    if let Some((g, layout)) = content.graph {
        let hl_edges = spec.highlight_edges.clone().unwrap_or_default();
        let is_hl_edge = |e: usize| {
            let (a, b) = g.edges()[e];
            hl_edges.iter().any(|h| (h[0].min(h[1]), h[0].max(h[1])) == (a, b))
        };
        let _ = writeln!(svg, r##"<g class="edges" fill="none" stroke="#555555" stroke-width="{sw}">"##);
        for (e, piece) in edge_polylines(&view, g, layout) {
            if is_hl_edge(e) {
                let _ = writeln!(svg, r##"<path d="{}" stroke="#d62728"/>"##, path_data(&piece, false));
            } else {
                let _ = writeln!(svg, r#"<path d="{}"/>"#, path_data(&piece, false));
            }
        }
        svg.push_str("</g>\n");
        let hl = spec.highlight_nodes.clone().unwrap_or_default();
        let _ = writeln!(svg, r##"<g class="nodes" fill="#000000">"##);
        for (i, s) in place_nodes(&view, layout).iter().enumerate() {
            let fill = if hl.contains(&i) { r##" fill="#d62728""## } else { "" };
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="{}"{fill}/>"#,
                num(s.x),
                num(s.y),
                num(spec.node_radius)
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// 1-px Bresenham rendering of a graph's edges at `width x height`.
pub fn rasterize_edges(scene: &Scene, g: &Graph, layout: &Layout, width: usize, height: usize) -> Result<Bitmap> {
    let content = SceneContent { geojson: &[], graph: Some((g, layout)) };
    let (w, h) = match scene {
        Scene::Projection { projection } => (projection.canvas_width, projection.canvas_height),
        _ => (width as f64, height as f64),
    };
    let view = View::build(scene, &content, w, h, 0.0)?;
    let mut bitmap = Bitmap::new(width, height);
    match (&view, layout) {
        (View::Projection(proj), Layout::Sphere(p)) => rasterize_sphere_edges(proj, p, g.edges(), &mut bitmap),
        _ => {
            for (_, piece) in edge_polylines(&view, g, layout) {
                bitmap.draw_polyline(piece);
            }
        }
    }
    Ok(bitmap)
}

/// Reference projections shared with the interactive viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GoldenVector {
    pub projection: ProjectionSpec,
    pub point: GeoPoint,
    pub screen: ScreenPoint,
}

/// For every projection kind, `count` random rotations each applied to a
/// random point, projected on the given canvas.
pub fn golden_vectors(count: usize, seed: u64, width: f64, height: f64) -> Result<Vec<GoldenVector>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count * 5);
    for kind in crate::projection::ProjectionKind::ALL {
        for _ in 0..count {
            let r = crate::sphere::RotationTriple::new(
                rng.random_range(-180.0..180.0),
                rng.random_range(-90.0..=90.0),
                rng.random_range(-180.0..180.0),
            );
            let point = GeoPoint::new(rng.random_range(-180.0..180.0), rng.random_range(-90.0..=90.0));
            let projection = ProjectionSpec::new(kind, width, height).with_rotation(r);
            let screen = projection.projector()?.project_geo(point);
            out.push(GoldenVector { projection, point, screen });
        }
    }
    Ok(out)
}

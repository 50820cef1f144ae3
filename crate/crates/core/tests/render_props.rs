mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use wrapgraph::layout::random_layout;
use wrapgraph::raster::{pixel_of, Bitmap};
use wrapgraph::render::*;
use wrapgraph::{Geometry, Graph, Layout, ProjectionKind, ProjectionSpec, RotationTriple};

const W: f64 = 700.0;
const H: f64 = 350.0;

fn projection_scene(kind: ProjectionKind, r: RotationTriple) -> Scene {
    Scene::Projection { projection: ProjectionSpec::new(kind, W, H).with_rotation(r) }
}

fn svg_of(scene: &Scene, g: &Graph, l: &Layout, spec: &RenderSpec) -> String {
    render_svg(scene, &SceneContent { geojson: &[], graph: Some((g, l)) }, spec).unwrap()
}

/// Contents of every `name="..."` attribute in document order.
fn attributes<'a>(svg: &'a str, name: &str) -> Vec<&'a str> {
    let key = format!(" {name}=\"");
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(i) = rest.find(&key) {
        rest = &rest[i + key.len()..];
        let end = rest.find('"').unwrap();
        out.push(&rest[..end]);
        rest = &rest[end..];
    }
    out
}

fn path_points(d: &str) -> Vec<(f64, f64)> {
    d.trim_end_matches('Z')
        .split(['M', 'L'])
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (x, y) = s.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

/// Path data inside the `<g class="...">` group.
fn group_paths<'a>(svg: &'a str, class: &str) -> Vec<&'a str> {
    let open = format!("<g class=\"{class}\"");
    let Some(start) = svg.find(&open) else { return Vec::new() };
    let body = &svg[start..];
    let body = &body[..body.find("</g>").unwrap()];
    attributes(body, "d")
}

fn all_coordinates(svg: &str) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = attributes(svg, "d").into_iter().flat_map(path_points).collect();
    let cx = attributes(svg, "cx");
    let cy = attributes(svg, "cy");
    pts.extend(cx.iter().zip(&cy).map(|(x, y)| (x.parse().unwrap(), y.parse().unwrap())));
    pts
}

#[test]
fn empty_graph_renders_outline_only() {
    let g = Graph::new(0, [], None).unwrap();
    let l = Layout::Sphere(vec![]);
    for kind in ProjectionKind::ALL {
        let svg = svg_of(&projection_scene(kind, RotationTriple::IDENTITY), &g, &l, &RenderSpec::new(W, H));
        assert!(svg.starts_with("<?xml"));
        assert!(!group_paths(&svg, "outline").is_empty(), "{kind:?}");
        assert!(group_paths(&svg, "edges").is_empty());
        assert!(!svg.contains("<circle"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn svg_is_byte_deterministic() {
    let g = random_connected_graph(40, 40, &mut rng(1));
    let spec = RenderSpec { show_graticule: true, highlight_nodes: Some(vec![0, 3]), ..RenderSpec::new(W, H) };
    let scenes = [
        (projection_scene(ProjectionKind::Hammer, RotationTriple::new(20.0, 10.0, 5.0)), random_layout(40, Geometry::Sphere, 1)),
        (Scene::Torus, random_layout(40, Geometry::Torus, 1)),
        (Scene::Plane, random_layout(40, Geometry::Plane, 1)),
    ];
    for (scene, l) in &scenes {
        assert_eq!(svg_of(scene, &g, l, &spec), svg_of(scene, &g, l, &spec));
    }
}

#[test]
fn edge_endpoints_match_projected_nodes() {
    let mut r = rng(2);
    let spec = RenderSpec::new(W, H);
    for kind in ProjectionKind::ALL {
        for trial in 0..5u64 {
            let rot = RotationTriple::new(r.random_range(-180.0..180.0), r.random_range(-90.0..90.0), r.random_range(-180.0..180.0));
            let g = random_connected_graph(25, 25, &mut r);
            let l = random_layout(25, Geometry::Sphere, trial);
            let scene = projection_scene(kind, rot);
            let projector = ProjectionSpec::new(kind, W, H).with_rotation(rot).projector().unwrap();
            let nodes = node_positions(&scene, &g, &l, &spec).unwrap();
            let pos = l.sphere_positions().unwrap();
            for (i, s) in nodes.iter().enumerate() {
                assert!(s.distance(&projector.project(pos[i])) < 1e-12);
            }
            let paths: Vec<Vec<(f64, f64)>> = group_paths(&svg_of(&scene, &g, &l, &spec), "edges").into_iter().map(path_points).collect();
            let mut k = 0;
            for &(a, b) in g.edges() {
                let pieces = projector.project_geodesic(pos[a], pos[b]).unwrap().segments.len();
                let first = paths[k][0];
                let last = *paths[k + pieces - 1].last().unwrap();
                k += pieces;
                let (pa, pb) = (nodes[a], nodes[b]);
                assert!((first.0 - pa.x).hypot(first.1 - pa.y) <= 0.5, "{kind:?} edge ({a}, {b}) start");
                assert!((last.0 - pb.x).hypot(last.1 - pb.y) <= 0.5, "{kind:?} edge ({a}, {b}) end");
            }
            assert_eq!(k, paths.len());

            // the raster hits the pixel under every drawn endpoint
            let bitmap = rasterize_edges(&scene, &g, &l, W as usize, H as usize).unwrap();
            for &(a, _) in g.edges() {
                let s = nodes[a];
                let (x, y) = pixel_of(s.x, s.y);
                if x >= 0 && y >= 0 && (x as f64) < W && (y as f64) < H {
                    assert!(bitmap.get(x as usize, y as usize), "{kind:?} node at ({}, {})", s.x, s.y);
                }
            }
        }
    }
}

#[test]
fn torus_and_plane_endpoints_match_node_positions() {
    let mut r = rng(3);
    let spec = RenderSpec::new(W, H);
    for seed in 0..10 {
        let g = random_connected_graph(20, 20, &mut r);
        let l = random_layout(20, Geometry::Plane, seed);
        let nodes = node_positions(&Scene::Plane, &g, &l, &spec).unwrap();
        let paths: Vec<Vec<(f64, f64)>> = group_paths(&svg_of(&Scene::Plane, &g, &l, &spec), "edges").into_iter().map(path_points).collect();
        for (k, &(a, b)) in g.edges().iter().enumerate() {
            assert!((paths[k][0].0 - nodes[a].x).hypot(paths[k][0].1 - nodes[a].y) <= 0.5);
            assert!((paths[k][1].0 - nodes[b].x).hypot(paths[k][1].1 - nodes[b].y) <= 0.5);
        }

        let l = random_layout(20, Geometry::Torus, seed);
        let pos = l.torus_positions().unwrap();
        let nodes = node_positions(&Scene::Torus, &g, &l, &spec).unwrap();
        for (i, s) in nodes.iter().enumerate() {
            assert_eq!((s.x, s.y), (pos[i][0] * W, pos[i][1] * H));
        }
        // every drawn torus endpoint lies on a node or on the canvas border
        let border = |p: (f64, f64)| p.0.abs() < 1e-3 || (p.0 - W).abs() < 1e-3 || p.1.abs() < 1e-3 || (p.1 - H).abs() < 1e-3;
        for path in group_paths(&svg_of(&Scene::Torus, &g, &l, &spec), "edges").into_iter().map(path_points) {
            for p in [path[0], path[1]] {
                let on_node = nodes.iter().any(|s| (p.0 - s.x).hypot(p.1 - s.y) <= 0.5);
                assert!(on_node || border(p), "{p:?}");
            }
        }
    }
}

#[test]
fn torus_edges_are_nine_copy_clips() {
    let mut r = rng(4);
    for _ in 0..500 {
        let p = [r.random::<f64>(), r.random::<f64>()];
        let q = [r.random::<f64>(), r.random::<f64>()];
        let pieces = torus_edge_pieces(p, q);
        assert!((1..=4).contains(&pieces.len()));
        // pieces add up to the shortest wrapped displacement
        let du = (q[0] - p[0] + 0.5).rem_euclid(1.0) - 0.5;
        let dv = (q[1] - p[1] + 0.5).rem_euclid(1.0) - 0.5;
        let total: f64 = pieces.iter().map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).sum();
        assert!((total - du.hypot(dv)).abs() < 1e-9);
        for (a, b) in pieces {
            for c in [a, b] {
                assert!((0.0..=1.0).contains(&c[0]) && (0.0..=1.0).contains(&c[1]));
            }
        }
    }
}

#[test]
fn no_edges_gives_an_empty_bitmap() {
    let g = Graph::new(5, [], None).unwrap();
    let scene = projection_scene(ProjectionKind::EqualEarth, RotationTriple::IDENTITY);
    let b = rasterize_edges(&scene, &g, &random_layout(5, Geometry::Sphere, 0), 700, 350).unwrap();
    assert_eq!(b.count_ones(), 0);
    let b = rasterize_edges(&Scene::Torus, &g, &random_layout(5, Geometry::Torus, 0), 100, 100).unwrap();
    assert_eq!(b.count_ones(), 0);
}

#[test]
fn horizontal_centre_edge_has_length_plus_one_pixels() {
    let g = Graph::new(2, [(0, 1)], None).unwrap();
    for len in [1usize, 10, 33, 64, 99] {
        let x0 = 50 - len / 2;
        // pixel centres in domain coordinates
        let u = |x: usize| (x as f64 + 0.5) / 100.0;
        let l = Layout::Torus(vec![[u(x0), 0.505], [u(x0 + len), 0.505]]);
        let b = rasterize_edges(&Scene::Torus, &g, &l, 100, 100).unwrap();
        if len <= 50 {
            assert_eq!(b.count_ones(), len as u64 + 1, "length {len}");
        } else {
            // longer than half the domain: drawn the other way round
            assert_eq!(b.count_ones(), (100 - len) as u64 + 1, "length {len}");
        }
    }
    let mut b = Bitmap::new(200, 100);
    b.draw_polyline([(20.5, 50.5), (170.5, 50.5)]);
    assert_eq!(b.count_ones(), 151);
}

#[test]
fn set_pixel_count_is_stable() {
    let g = random_connected_graph(60, 80, &mut rng(5));
    let l = random_layout(60, Geometry::Sphere, 5);
    for kind in ProjectionKind::ALL {
        let scene = projection_scene(kind, RotationTriple::new(30.0, -20.0, 10.0));
        let a = rasterize_edges(&scene, &g, &l, 700, 350).unwrap();
        let b = rasterize_edges(&scene, &g, &l, 700, 350).unwrap();
        assert_eq!(a, b);
        let recount = (0..350).flat_map(|y| (0..700).map(move |x| (x, y))).filter(|&(x, y)| a.get(x, y)).count();
        assert_eq!(a.count_ones(), recount as u64);
        assert!(a.count_ones() > 0);
    }
}

#[test]
fn pbm_dump_round_trips() {
    let g = random_connected_graph(20, 20, &mut rng(6));
    let b = rasterize_edges(&Scene::Torus, &g, &random_layout(20, Geometry::Torus, 6), 37, 21).unwrap();
    let bytes = b.to_pbm_bytes();
    let header = b"P4\n37 21\n";
    assert_eq!(&bytes[..header.len()], header);
    let body = &bytes[header.len()..];
    assert_eq!(body.len(), 5 * 21);
    for y in 0..21 {
        for x in 0..37 {
            let bit = body[y * 5 + x / 8] & (0x80 >> (x % 8)) != 0;
            assert_eq!(bit, b.get(x, y));
        }
    }
}

#[test]
fn golden_vectors_match_the_projector() {
    let vectors = golden_vectors(200, 9, W, H).unwrap();
    assert_eq!(vectors.len(), 1000);
    for v in &vectors {
        let s = v.projection.projector().unwrap().project_geo(v.point);
        assert_eq!(s, v.screen);
    }
    let text = serde_json::to_string(&vectors).unwrap();
    let back: Vec<GoldenVector> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, vectors);
    assert_eq!(text, serde_json::to_string(&golden_vectors(200, 9, W, H).unwrap()).unwrap());
}

#[test]
fn inconsistent_scenes_are_rejected() {
    let g = Graph::new(3, [(0, 1)], None).unwrap();
    let spec = RenderSpec::new(W, H);
    let sphere = random_layout(3, Geometry::Sphere, 0);
    let torus = random_layout(3, Geometry::Torus, 0);
    assert!(render_svg(&Scene::Torus, &SceneContent { geojson: &[], graph: Some((&g, &sphere)) }, &spec).is_err());
    let scene = projection_scene(ProjectionKind::MollweideHemisphere, RotationTriple::IDENTITY);
    assert!(render_svg(&scene, &SceneContent { geojson: &[], graph: Some((&g, &torus)) }, &spec).is_err());
    let small = RenderSpec::new(300.0, 150.0);
    assert!(render_svg(&scene, &SceneContent { geojson: &[], graph: Some((&g, &sphere)) }, &small).is_err());
    let land = serde_json::json!({"type": "Point", "coordinates": [0, 0]});
    assert!(render_svg(&Scene::Torus, &SceneContent { geojson: &[land], graph: None }, &spec).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svg_stays_within_the_canvas(seed in any::<u64>(), k in 0usize..7, stroke in 1.0..4.0f64, radius in 0.0..6.0f64) {
        let mut r = rng(seed);
        let n = r.random_range(2..30);
        let g = random_connected_graph(n, n, &mut r);
        let spec = RenderSpec { stroke_width: stroke, node_radius: radius, show_graticule: true, ..RenderSpec::new(W, H) };
        let (scene, l) = match k {
            5 => (Scene::Torus, random_layout(n, Geometry::Torus, seed)),
            6 => (Scene::Plane, random_layout(n, Geometry::Plane, seed)),
            _ => {
                let rot = RotationTriple::new(r.random_range(-180.0..180.0), r.random_range(-90.0..90.0), r.random_range(-180.0..180.0));
                (projection_scene(ProjectionKind::ALL[k], rot), random_layout(n, Geometry::Sphere, seed))
            }
        };
        let svg = svg_of(&scene, &g, &l, &spec);
        for (x, y) in all_coordinates(&svg) {
            prop_assert!(x >= -stroke && x <= W + stroke && y >= -stroke && y <= H + stroke, "({x}, {y})");
        }
    }
}

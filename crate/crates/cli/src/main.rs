//! `wrapgraph`: corpus graphs, layouts, auto-pan, stimuli and rendering as a
//! file-based pipeline. Every run writes `<out>.manifest.json` beside its
//! output with the full parameter set, seeds and headline results.
//!
//! Exit codes: 0 success, 2 domain error, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use wrapgraph::autopan::{auto_pan, compare_with_random, translate_torus, PanSearchConfig, DEFAULT_BAND_PCT, DEFAULT_SAMPLES};
use wrapgraph::corpus::{modularity, CorpusPreset, CorpusSpec};
use wrapgraph::layout::{ideal_distances, run_sgd, stress, DEFAULT_ITERATIONS};
use wrapgraph::render::{golden_vectors, rasterize_edges, render_svg, RenderSpec, Scene, SceneContent};
use wrapgraph::stimuli::{generate_geo_batch, generate_network_batch, network_levels, NetworkTrialConfig, Task};
use wrapgraph::{
    Geometry, Graph, GraphDocument, Layout, LayoutDocument, ProjectionKind, ProjectionSpec, RotationTriple, SgdSchedule,
};

const EXIT_DOMAIN: u8 = 2;
const EXIT_USAGE: u8 = 64;

// Progress output; a closed stdout is not an error.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const MAP_CANVAS: (f64, f64) = (900.0, 317.0);
const SQUARE_CANVAS: (f64, f64) = (650.0, 650.0);

#[derive(Parser)]
#[command(name = "wrapgraph", version, about = "Wrapped network layouts, map projections and study stimuli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Generate a corpus graph from a preset or a spec file.
    GenGraph(GenGraphArgs),
    /// Stress layout of a graph on the plane, sphere or torus.
    Layout(LayoutArgs),
    /// Choose the view rotation (sphere) or offset (torus) of a layout.
    AutoPan(AutoPanArgs),
    /// Draw a layout as SVG or as a 1-bit edge raster.
    Render(RenderArgs),
    /// Generate a counterbalanced trial batch for one task.
    GenTrials(GenTrialsArgs),
    /// Report graph and layout statistics.
    Summarize(SummarizeArgs),
    /// Emit reference projections for the viewer.
    GoldenVectors(GoldenVectorsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenGraph(_) => "gen-graph",
            Command::Layout(_) => "layout",
            Command::AutoPan(_) => "auto-pan",
            Command::Render(_) => "render",
            Command::GenTrials(_) => "gen-trials",
            Command::Summarize(_) => "summarize",
            Command::GoldenVectors(_) => "golden-vectors",
        }
    }
}

fn parse_with<T: FromStr<Err = wrapgraph::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: wrapgraph::Error| e.to_string())
}

fn parse_rotation(s: &str) -> Result<RotationTriple, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] if parts.iter().all(|v| v.is_finite()) => Ok(RotationTriple::new(a, b, c)),
        _ => Err("expected three finite angles 'lambda,phi,gamma'".into()),
    }
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct GenGraphArgs {
    #[arg(long, value_parser = parse_with::<CorpusPreset>, required_unless_present = "spec", conflicts_with = "spec")]
    preset: Option<CorpusPreset>,
    /// Corpus spec JSON to use instead of a preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Generator seed; overrides the seed in a spec file. Presets default to 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct LayoutArgs {
    #[arg(long)]
    graph: PathBuf,
    /// plane, sphere or torus
    #[arg(long, value_parser = parse_with::<Geometry>)]
    geometry: Geometry,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct AutoPanArgs {
    #[arg(long, required_unless_present = "batch")]
    graph: Option<PathBuf>,
    #[arg(long, required_unless_present = "batch")]
    layout: Option<PathBuf>,
    /// Target projection; required for sphere layouts.
    #[arg(long, value_parser = parse_with::<ProjectionKind>)]
    projection: Option<ProjectionKind>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Boundary band width as a percentage of the raster width.
    #[arg(long, default_value_t = DEFAULT_BAND_PCT)]
    band_pct: f64,
    #[arg(long, default_value_t = MAP_CANVAS.0 as usize)]
    raster_width: usize,
    #[arg(long, default_value_t = MAP_CANVAS.1 as usize)]
    raster_height: usize,
    /// Keep the score of every candidate rotation in the output.
    #[arg(long)]
    all_scores: bool,
    /// Generate, lay out and pan corpus graphs, comparing against random
    /// rotations, and write a summary table.
    #[arg(long, conflicts_with_all = ["graph", "layout"])]
    batch: bool,
    /// Batch presets, each contributing `--graphs-per-preset` graphs.
    #[arg(long, value_parser = parse_with::<CorpusPreset>, value_delimiter = ',', default_value = "small-easy,small-hard")]
    presets: Vec<CorpusPreset>,
    #[arg(long, default_value_t = 5)]
    graphs_per_preset: usize,
    /// Random rotations per graph in the batch baseline.
    #[arg(long, default_value_t = 10)]
    random: usize,
    /// Layout iterations for batch graphs.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
}

impl AutoPanArgs {
    fn config(&self, seed: u64) -> PanSearchConfig {
        PanSearchConfig {
            samples: self.samples,
            seed,
            mask_band_width_pct: self.band_pct,
            raster_width: self.raster_width,
            raster_height: self.raster_height,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Svg,
    /// Binary 1-bit netpbm raster of the edges.
    Pgm,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct RenderArgs {
    #[arg(long, requires = "layout")]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    layout: Option<PathBuf>,
    /// Projection for sphere layouts and map-only scenes; defaults to the
    /// projection recorded by auto-pan.
    #[arg(long, value_parser = parse_with::<ProjectionKind>)]
    projection: Option<ProjectionKind>,
    /// Explicit rotation 'lambda,phi,gamma' in degrees.
    #[arg(long, value_parser = parse_rotation, allow_hyphen_values = true)]
    rotation: Option<RotationTriple>,
    /// Ignore any pan stored in the layout.
    #[arg(long)]
    no_pan: bool,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long, value_enum, default_value = "svg")]
    format: Format,
    /// GeoJSON layers drawn under the graph (projection scenes).
    #[arg(long)]
    geojson: Vec<PathBuf>,
    #[arg(long)]
    graticule: bool,
    #[arg(long, default_value_t = 1.0)]
    stroke_width: f64,
    #[arg(long, default_value_t = 3.0)]
    node_radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct GenTrialsArgs {
    /// distance, area, direction, cluster-count or shortest-path
    #[arg(long, value_parser = parse_with::<Task>)]
    task: Task,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add one quality-control trial per condition.
    #[arg(long)]
    attention_checks: bool,
    /// Network tasks: trials per difficulty level (5 for cluster-count,
    /// 8 for shortest-path by default).
    #[arg(long)]
    repetitions: Option<usize>,
    /// Network tasks: layout iterations.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    /// Network tasks: auto-pan candidate rotations.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct SummarizeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
struct GoldenVectorsArgs {
    /// Vectors per projection kind.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = MAP_CANVAS.0)]
    width: f64,
    #[arg(long, default_value_t = MAP_CANVAS.1)]
    height: f64,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<wrapgraph::Error> for Failure {
    fn from(e: wrapgraph::Error) -> Self {
        let code = if e.is_domain() { EXIT_DOMAIN } else { EXIT_USAGE };
        Self { code, message: e.to_string() }
    }
}

type CmdResult<T> = Result<T, Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    std::fs::write(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(wrapgraph::Error::from)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest(cmd: &Command, out: &Path, results: Value) -> CmdResult<()> {
    let manifest = json!({
        "tool": "wrapgraph",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "parameters": cmd,
        "output": out.display().to_string(),
        "results": results,
    });
    write_json(&manifest_path(out), &manifest)
}

fn load_graph(path: &Path) -> CmdResult<Graph> {
    Ok(read_json::<GraphDocument>(path)?.to_graph()?)
}

fn load_pair(graph: &Path, layout: &Path) -> CmdResult<(Graph, LayoutDocument, Layout)> {
    let g = load_graph(graph)?;
    let doc: LayoutDocument = read_json(layout)?;
    let l = doc.to_layout()?;
    if l.len() != g.node_count() {
        return Err(Failure::usage(format!(
            "layout has {} positions but the graph has {} nodes",
            l.len(),
            g.node_count()
        )));
    }
    Ok((g, doc, l))
}

fn with_seed(spec: CorpusSpec, seed: u64) -> CorpusSpec {
    match spec {
        CorpusSpec::Clustered(mut s) => {
            s.seed = seed;
            CorpusSpec::Clustered(s)
        }
        CorpusSpec::ScaleFree(mut s) => {
            s.seed = seed;
            CorpusSpec::ScaleFree(s)
        }
    }
}

fn gen_graph(cmd: &Command, a: &GenGraphArgs) -> CmdResult<()> {
    let spec = match (&a.preset, &a.spec) {
        (Some(p), _) => p.spec(a.seed.unwrap_or(0)),
        (None, Some(path)) => {
            let spec: CorpusSpec = read_json(path)?;
            match a.seed {
                Some(s) => with_seed(spec, s),
                None => spec,
            }
        }
        (None, None) => return Err(Failure::usage("need --preset or --spec")),
    };
    let g = spec.generate()?;
    let spec_json = serde_json::to_value(&spec).map_err(wrapgraph::Error::from)?;
    write_json(&a.out, &g.to_document(spec_json.clone(), Some(spec.seed())))?;
    let q = g.clusters().map(|labels| modularity(&g, labels));
    write_manifest(
        cmd,
        &a.out,
        json!({
            "spec": spec_json,
            "seed": spec.seed(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "density": g.density(),
            "clusters": g.cluster_count(),
            "modularity": q,
        }),
    )?;
    say!("{}: {} nodes, {} edges", a.out.display(), g.node_count(), g.edge_count());
    Ok(())
}

fn layout(cmd: &Command, a: &LayoutArgs) -> CmdResult<()> {
    let g = load_graph(&a.graph)?;
    let ideal = ideal_distances(&g, a.geometry)?;
    let schedule = SgdSchedule::for_ideal(&ideal, a.iterations, a.seed);
    let run = run_sgd(&g, a.geometry, &schedule)?;
    let doc = LayoutDocument {
        graph_ref: Some(a.graph.display().to_string()),
        seed: Some(a.seed),
        schedule: Some(schedule),
        final_stress: Some(run.final_stress),
        ..LayoutDocument::new(&run.layout)
    };
    write_json(&a.out, &doc)?;
    write_manifest(
        cmd,
        &a.out,
        json!({
            "nodes": g.node_count(),
            "schedule": schedule,
            "initialStress": run.initial_stress,
            "finalStress": run.final_stress,
        }),
    )?;
    say!(
        "{}: {} layout, stress {:.4} -> {:.4}",
        a.out.display(),
        a.geometry.name(),
        run.initial_stress,
        run.final_stress
    );
    Ok(())
}

fn auto_pan_one(cmd: &Command, a: &AutoPanArgs) -> CmdResult<()> {
    let (Some(graph), Some(layout)) = (&a.graph, &a.layout) else {
        return Err(Failure::usage("need --graph and --layout, or --batch"));
    };
    let (g, mut doc, l) = load_pair(graph, layout)?;
    let kind = match (l.geometry(), a.projection) {
        (Geometry::Sphere, None) => return Err(Failure::usage("sphere layouts need --projection")),
        (Geometry::Sphere, Some(k)) => k,
        // the torus scan ignores the projection
        (_, k) => k.unwrap_or(ProjectionKind::EqualEarth),
    };
    let mut pan = auto_pan(&g, &l, kind, &a.config(a.seed))?;
    if !a.all_scores {
        pan.all_scores = None;
    }
    let results = json!({
        "method": pan.method,
        "bestScore": pan.best_score,
        "identityScore": pan.identity_score,
        "bestIndex": pan.best_index,
        "bestRotation": pan.best_rotation,
        "bestOffset": pan.best_offset,
    });
    say!(
        "{}: best score {} (identity {})",
        a.out.display(),
        pan.best_score,
        pan.identity_score
    );
    doc.pan = Some(pan);
    write_json(&a.out, &doc)?;
    write_manifest(cmd, &a.out, results)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn auto_pan_batch(cmd: &Command, a: &AutoPanArgs) -> CmdResult<()> {
    let kind = a.projection.ok_or_else(|| Failure::usage("--batch needs --projection"))?;
    if a.presets.is_empty() || a.graphs_per_preset == 0 {
        return Err(Failure::usage("--batch needs at least one graph"));
    }
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &preset in &a.presets {
        for _ in 0..a.graphs_per_preset {
            let seed = a.seed + index;
            let g = preset.spec(seed).generate()?;
            let ideal = ideal_distances(&g, Geometry::Sphere)?;
            let run = run_sgd(&g, Geometry::Sphere, &SgdSchedule::for_ideal(&ideal, a.iterations, seed))?;
            let positions = run.layout.sphere_positions().expect("sphere layout");
            let c = compare_with_random(&g, positions, kind, &a.config(seed), a.random, a.seed + 1000 + index)?;
            let mut row = json!({
                "preset": preset,
                "seed": seed,
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "identityScore": c.pan.identity_score,
                "randomMeanScore": c.random_mean_score,
                "autoPanScore": c.pan.best_score,
                "bestRotation": c.pan.best_rotation,
            });
            if let (Some(best), Some(random)) = (c.pan.best_pixels, c.random_mean_pixels) {
                row["autoPanPixels"] = json!(best);
                row["identityPixels"] = json!(c.pan.identity_pixels);
                row["randomMeanPixels"] = json!(random);
            }
            rows.push(row);
            index += 1;
        }
    }
    let col = |key: &str| mean(rows.iter().map(|r| r[key].as_f64().unwrap_or(0.0)));
    let (identity, random, best) = (col("identityScore"), col("randomMeanScore"), col("autoPanScore"));
    let mut summary = json!({
        "graphs": rows.len(),
        "meanIdentityScore": identity,
        "meanRandomScore": random,
        "meanAutoPanScore": best,
        "reductionVsRandomPct": if random > 0.0 { 100.0 * (random - best) / random } else { 0.0 },
    });
    let pixels = |group: &str, field: &str| mean(rows.iter().map(|r| r[group][field].as_f64().unwrap_or(0.0)));
    if !kind.is_hemispheric() {
        let (ri, bi) = (pixels("randomMeanPixels", "interior"), pixels("autoPanPixels", "interior"));
        let (rc, bc) = (pixels("randomMeanPixels", "bandClear"), pixels("autoPanPixels", "bandClear"));
        summary["meanRandomInteriorPixels"] = json!(ri);
        summary["meanAutoPanInteriorPixels"] = json!(bi);
        summary["interiorGainPct"] = json!(if ri > 0.0 { 100.0 * (bi - ri) / ri } else { 0.0 });
        summary["meanRandomBandClearPixels"] = json!(rc);
        summary["meanAutoPanBandClearPixels"] = json!(bc);
        summary["bandClearGainPct"] = json!(if rc > 0.0 { 100.0 * (bc - rc) / rc } else { 0.0 });
    }
    let score = if kind.is_hemispheric() { "crossings" } else { "band pixels" };
    say!("{:<12} {:>6} {:>12} {:>12} {:>12}", "preset", "seed", "no pan", "random", "auto-pan");
    for r in &rows {
        say!(
            "{:<12} {:>6} {:>12.1} {:>12.1} {:>12.1}",
            r["preset"].as_str().unwrap_or(""),
            r["seed"].as_u64().unwrap_or(0),
            r["identityScore"].as_f64().unwrap_or(0.0),
            r["randomMeanScore"].as_f64().unwrap_or(0.0),
            r["autoPanScore"].as_f64().unwrap_or(0.0)
        );
    }
    say!("{:<20}{:>12.1} {:>12.1} {:>12.1}  mean {score}", "", identity, random, best);
    let report = json!({
        "projection": kind,
        "score": score,
        "randomRotations": a.random,
        "rows": rows,
        "summary": summary,
    });
    write_json(&a.out, &report)?;
    write_manifest(cmd, &a.out, summary)
}

fn render(cmd: &Command, a: &RenderArgs) -> CmdResult<()> {
    let loaded = match (&a.graph, &a.layout) {
        (Some(g), Some(l)) => Some(load_pair(g, l)?),
        _ => None,
    };
    let geometry = loaded.as_ref().map(|(_, _, l)| l.geometry());
    let stored = loaded.as_ref().and_then(|(_, doc, _)| doc.pan.as_ref());
    let pan = stored.filter(|_| !a.no_pan);
    let square = !matches!(geometry, None | Some(Geometry::Sphere));
    let (dw, dh) = if square { SQUARE_CANVAS } else { MAP_CANVAS };
    let (w, h) = (a.width.unwrap_or(dw), a.height.unwrap_or(dh));
    let mut rotation = None;
    let mut offset = None;
    let scene = match geometry {
        None | Some(Geometry::Sphere) => {
            let kind = a
                .projection
                .or_else(|| stored.and_then(|p| p.projection))
                .ok_or_else(|| Failure::usage("need --projection"))?;
            let r = a
                .rotation
                .or_else(|| pan.and_then(|p| p.best_rotation))
                .unwrap_or(RotationTriple::IDENTITY);
            rotation = Some(r);
            Scene::Projection { projection: ProjectionSpec::new(kind, w, h).with_rotation(r) }
        }
        Some(Geometry::Torus) => {
            offset = pan.and_then(|p| p.best_offset);
            Scene::Torus
        }
        Some(Geometry::Plane) => Scene::Plane,
    };
    let panned = loaded.map(|(g, _, l)| {
        let l = match (&l, offset) {
            (Layout::Torus(p), Some(o)) => Layout::Torus(translate_torus(p, o)),
            _ => l,
        };
        (g, l)
    });
    let mut results = json!({
        "format": a.format,
        "width": w,
        "height": h,
        "scene": scene,
        "offset": offset,
    });
    match a.format {
        Format::Svg => {
            let layers = a
                .geojson
                .iter()
                .map(|p| read_json::<Value>(p))
                .collect::<CmdResult<Vec<_>>>()?;
            let spec = RenderSpec {
                stroke_width: a.stroke_width,
                node_radius: a.node_radius,
                show_graticule: a.graticule,
                ..RenderSpec::new(w, h)
            };
            let content = SceneContent { geojson: &layers, graph: panned.as_ref().map(|(g, l)| (g, l)) };
            let svg = render_svg(&scene, &content, &spec)?;
            write_bytes(&a.out, svg.as_bytes())?;
        }
        Format::Pgm => {
            let (g, l) = panned.as_ref().ok_or_else(|| Failure::usage("raster output needs --graph and --layout"))?;
            if !(w >= 1.0 && h >= 1.0 && w.fract() == 0.0 && h.fract() == 0.0) {
                return Err(Failure::usage("raster dimensions must be positive integers"));
            }
            let bitmap = rasterize_edges(&scene, g, l, w as usize, h as usize)?;
            results["setPixels"] = json!(bitmap.count_ones());
            write_bytes(&a.out, &bitmap.to_pbm_bytes())?;
        }
    }
    if let Some(r) = rotation {
        results["rotation"] = json!(r);
    }
    write_manifest(cmd, &a.out, results)?;
    say!("{}: {w} x {h}", a.out.display());
    Ok(())
}

fn gen_trials(cmd: &Command, a: &GenTrialsArgs) -> CmdResult<()> {
    let results = if network_levels(a.task).is_ok() {
        let repetitions = a.repetitions.unwrap_or(if a.task == Task::ClusterCount { 5 } else { 8 });
        let cfg = NetworkTrialConfig {
            iterations: a.iterations,
            pan: PanSearchConfig { samples: a.samples, ..Default::default() },
            path_length: None,
        };
        let batch = generate_network_batch(a.task, a.seed, repetitions, a.attention_checks, &cfg)?;
        write_json(&a.out, &batch)?;
        json!({
            "schemaVersion": batch.schema_version,
            "views": batch.views.iter().map(|v| json!({
                "view": v.view,
                "trials": v.trials.len(),
                "trialSeeds": v.trials.iter().map(|t| t.seed).collect::<Vec<_>>(),
                "attentionChecks": v.trials.iter().filter(|t| t.is_attention_check).count(),
            })).collect::<Vec<_>>(),
            "viewOrders": batch.view_orders,
        })
    } else {
        if a.repetitions.is_some() {
            return Err(Failure::usage("--repetitions applies to network tasks only"));
        }
        let batch = generate_geo_batch(a.task, a.seed, a.attention_checks)?;
        write_json(&a.out, &batch)?;
        json!({
            "schemaVersion": batch.schema_version,
            "conditions": batch.conditions.iter().map(|c| json!({
                "condition": c.condition,
                "trials": c.trials.len(),
                "trialSeeds": c.trials.iter().map(|t| t.seed).collect::<Vec<_>>(),
                "attentionChecks": c.trials.iter().filter(|t| t.is_attention_check).count(),
            })).collect::<Vec<_>>(),
            "projectionOrder": ProjectionKind::ALL,
            "projectionOrders": batch.projection_orders,
        })
    };
    write_manifest(cmd, &a.out, results)?;
    say!("{}: {} trials", a.out.display(), a.task.name());
    Ok(())
}

fn summarize(cmd: &Command, a: &SummarizeArgs) -> CmdResult<()> {
    let g = load_graph(&a.graph)?;
    let degrees: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    let connected = g.is_connected();
    let mut report = json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "density": g.density(),
        "connected": connected,
        "diameter": if connected { Some(g.diameter()?) } else { None },
        "minDegree": degrees.iter().min(),
        "maxDegree": degrees.iter().max(),
        "meanDegree": mean(degrees.iter().map(|&d| d as f64)),
        "clusters": g.cluster_count(),
        "modularity": g.clusters().map(|labels| modularity(&g, labels)),
    });
    if let Some(path) = &a.layout {
        let (g, doc, l) = load_pair(&a.graph, path)?;
        let ideal = ideal_distances(&g, l.geometry())?;
        report["layout"] = json!({
            "geometry": l.geometry(),
            "stress": stress(&l, &ideal),
            "recordedFinalStress": doc.final_stress,
            "seed": doc.seed,
            "pan": doc.pan.map(|mut p| {
                p.all_scores = None;
                p
            }),
        });
    }
    write_json(&a.out, &report)?;
    write_manifest(cmd, &a.out, Value::Null)?;
    say!(
        "{}: {} nodes, {} edges, diameter {}",
        a.out.display(),
        g.node_count(),
        g.edge_count(),
        report["diameter"]
    );
    Ok(())
}

fn golden(cmd: &Command, a: &GoldenVectorsArgs) -> CmdResult<()> {
    let vectors = golden_vectors(a.count, a.seed, a.width, a.height)?;
    write_json(&a.out, &vectors)?;
    write_manifest(cmd, &a.out, json!({ "vectors": vectors.len() }))?;
    say!("{}: {} vectors", a.out.display(), vectors.len());
    Ok(())
}

fn run(cmd: &Command) -> CmdResult<()> {
    match cmd {
        Command::GenGraph(a) => gen_graph(cmd, a),
        Command::Layout(a) => layout(cmd, a),
        Command::AutoPan(a) if a.batch => auto_pan_batch(cmd, a),
        Command::AutoPan(a) => auto_pan_one(cmd, a),
        Command::Render(a) => render(cmd, a),
        Command::GenTrials(a) => gen_trials(cmd, a),
        Command::Summarize(a) => summarize(cmd, a),
        Command::GoldenVectors(a) => golden(cmd, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wrapgraph: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

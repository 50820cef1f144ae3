//! Choosing a view that keeps edges away from projection boundaries.
//!
//! Spherical layouts are scored under a set of candidate rotations (the
//! identity plus uniformly drawn triples) and the first best one wins. On
//! the hemisphere projections the score is the number of edges whose ends
//! land on different discs; on the continuous projections it is the number
//! of edge pixels inside a band along the projected outline. Torus layouts
//! are translated instead, one axis at a time, by an exact scan over cut
//! positions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::layout::{wrap_unit, Layout};
use crate::projection::{face_of_rotated, Face, ProjectionKind, ProjectionSpec};
use crate::raster::{rasterize_sphere_edges, Bitmap, BoundaryMask};
use crate::sphere::{Rotation, RotationTriple, UnitVec3};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_BAND_PCT: f64 = 3.0;
pub const DEFAULT_RASTER: (usize, usize) = (900, 317);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanSearchConfig {
    pub samples: usize,
    pub seed: u64,
    pub mask_band_width_pct: f64,
    pub raster_width: usize,
    pub raster_height: usize,
}

impl Default for PanSearchConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            mask_band_width_pct: DEFAULT_BAND_PCT,
            raster_width: DEFAULT_RASTER.0,
            raster_height: DEFAULT_RASTER.1,
        }
    }
}

impl PanSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if !(self.mask_band_width_pct > 0.0 && self.mask_band_width_pct < 50.0) {
            return Err(Error::InvalidArgument(format!(
                "band width {}% must lie in (0, 50)",
                self.mask_band_width_pct
            )));
        }
        if self.raster_width == 0 || self.raster_height == 0 {
            return Err(Error::InvalidArgument("raster dimensions must be positive".into()));
        }
        Ok(())
    }

    fn projection(&self, kind: ProjectionKind) -> ProjectionSpec {
        ProjectionSpec::new(kind, self.raster_width as f64, self.raster_height as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanMethod {
    FaceCrossings,
    BoundaryPixels,
    TorusScan,
}

/// Pixel tallies for one rotation under a boundary mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PixelCounts {
    /// Edge pixels in the boundary band (the penalty).
    pub band: u64,
    /// Edge pixels in the deep interior.
    pub interior: u64,
    /// Band pixels inside the outline that carry no edge.
    pub band_clear: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanResult {
    pub method: PanMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_rotation: Option<RotationTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_offset: Option<[f64; 2]>,
    pub best_score: f64,
    pub identity_score: f64,
    pub best_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_pixels: Option<PixelCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_pixels: Option<PixelCounts>,
    /// Per-axis wrapped edge counts after a torus pan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_wraps: Option<[usize; 2]>,
}

fn hemisphere_face(m: &Rotation, v: UnitVec3) -> Face {
    face_of_rotated(m.apply_vec(v.vec()))
}

/// Edges whose endpoints fall on different hemisphere discs after rotation.
pub fn orthographic_crossing_count(g: &Graph, positions: &[UnitVec3], r: RotationTriple) -> usize {
    let m = r.to_rotation();
    let faces: Vec<Face> = positions.iter().map(|&v| hemisphere_face(&m, v)).collect();
    g.edges().iter().filter(|&&(a, b)| faces[a] != faces[b]).count()
}

type MaskKey = (ProjectionKind, usize, usize, u64);

/// Band masks depend only on the outline, so they are shared across calls.
pub fn boundary_mask(kind: ProjectionKind, cfg: &PanSearchConfig) -> Result<Arc<BoundaryMask>> {
    static CACHE: OnceLock<Mutex<HashMap<MaskKey, Arc<BoundaryMask>>>> = OnceLock::new();
    let key = (kind, cfg.raster_width, cfg.raster_height, cfg.mask_band_width_pct.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.lock().expect("mask cache poisoned").get(&key) {
        return Ok(Arc::clone(m));
    }
    let projector = cfg.projection(kind).projector()?;
    let mask = Arc::new(BoundaryMask::new(
        &projector,
        cfg.raster_width,
        cfg.raster_height,
        cfg.mask_band_width_pct,
    ));
    cache
        .lock()
        .expect("mask cache poisoned")
        .insert(key, Arc::clone(&mask));
    Ok(mask)
}

/// Rasterizes the projected edges of a spherical layout at the configured
/// raster size.
pub fn edge_bitmap(
    g: &Graph,
    positions: &[UnitVec3],
    kind: ProjectionKind,
    r: RotationTriple,
    cfg: &PanSearchConfig,
) -> Result<Bitmap> {
    let projector = cfg.projection(kind).with_rotation(r).projector()?;
    let mut bitmap = Bitmap::new(cfg.raster_width, cfg.raster_height);
    rasterize_sphere_edges(&projector, positions, g.edges(), &mut bitmap);
    Ok(bitmap)
}

fn tally(bitmap: &Bitmap, mask: &BoundaryMask) -> PixelCounts {
    PixelCounts {
        band: bitmap.count_and(mask.band()),
        interior: bitmap.count_and(mask.interior()),
        band_clear: mask.band_inside().count_and_not(bitmap),
    }
}

pub fn boundary_pixel_counts(
    g: &Graph,
    positions: &[UnitVec3],
    kind: ProjectionKind,
    r: RotationTriple,
    cfg: &PanSearchConfig,
) -> Result<PixelCounts> {
    cfg.validate()?;
    let mask = boundary_mask(kind, cfg)?;
    Ok(tally(&edge_bitmap(g, positions, kind, r, cfg)?, &mask))
}

/// Set edge pixels inside the Equal Earth boundary band.
pub fn equal_earth_boundary_penalty(
    g: &Graph,
    positions: &[UnitVec3],
    r: RotationTriple,
    cfg: &PanSearchConfig,
) -> Result<u64> {
    Ok(boundary_pixel_counts(g, positions, ProjectionKind::EqualEarth, r, cfg)?.band)
}

/// Identity followed by `samples - 1` uniform triples. A longer list always
/// extends a shorter one drawn with the same seed.
pub fn candidate_rotations(samples: usize, seed: u64) -> Vec<RotationTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    out.push(RotationTriple::IDENTITY);
    for _ in 1..samples {
        let lambda = rng.random_range(-180.0..180.0);
        let phi = rng.random_range(-90.0..=90.0);
        let gamma = rng.random_range(-180.0..180.0);
        out.push(RotationTriple::new(lambda, phi, gamma));
    }
    out
}

fn first_min(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

/// Rotation search for a spherical layout. Hemisphere projections score
/// face crossings; continuous ones score boundary-band pixels.
pub fn auto_pan_sphere(
    g: &Graph,
    positions: &[UnitVec3],
    kind: ProjectionKind,
    cfg: &PanSearchConfig,
) -> Result<PanResult> {
    cfg.validate()?;
    check_positions(g, positions.len())?;
    let candidates = candidate_rotations(cfg.samples, cfg.seed);
    if kind.is_hemispheric() {
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&r| orthographic_crossing_count(g, positions, r) as f64)
            .collect();
        let best = first_min(&scores);
        return Ok(PanResult {
            method: PanMethod::FaceCrossings,
            projection: Some(kind),
            best_rotation: Some(candidates[best]),
            best_offset: None,
            best_score: scores[best],
            identity_score: scores[0],
            best_index: best,
            all_scores: Some(scores),
            best_pixels: None,
            identity_pixels: None,
            axis_wraps: None,
        });
    }

    let mask = boundary_mask(kind, cfg)?;
    let base = cfg.projection(kind);
    let counts: Vec<PixelCounts> = candidates
        .par_iter()
        .map_init(
            || Bitmap::new(cfg.raster_width, cfg.raster_height),
            |bitmap, &r| {
                bitmap.clear();
                let projector = base.with_rotation(r).projector().expect("validated canvas");
                rasterize_sphere_edges(&projector, positions, g.edges(), bitmap);
                tally(bitmap, &mask)
            },
        )
        .collect();
    let scores: Vec<f64> = counts.iter().map(|c| c.band as f64).collect();
    let best = first_min(&scores);
    Ok(PanResult {
        method: PanMethod::BoundaryPixels,
        projection: Some(kind),
        best_rotation: Some(candidates[best]),
        best_offset: None,
        best_score: scores[best],
        identity_score: scores[0],
        best_index: best,
        all_scores: Some(scores),
        best_pixels: Some(counts[best]),
        identity_pixels: Some(counts[0]),
        axis_wraps: None,
    })
}

fn check_positions(g: &Graph, n: usize) -> Result<()> {
    if n != g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "layout has {n} positions for {} nodes",
            g.node_count()
        )));
    }
    Ok(())
}

/// Signed shortest displacement from `a` to `b` on the unit circle.
fn circular_delta(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Edges that leave the fundamental domain along one axis when every
/// coordinate is shifted by `offset` and each edge is drawn as its shortest
/// image from its first endpoint.
pub fn torus_axis_wraps(g: &Graph, coords: &[f64], offset: f64) -> usize {
    g.edges()
        .iter()
        .filter(|&&(a, b)| {
            let u = wrap_unit(coords[a] + offset);
            let end = u + circular_delta(coords[a], coords[b]);
            !(0.0..1.0).contains(&end)
        })
        .count()
}

/// Best shift along one axis: the cut goes in the middle of the gap between
/// consecutive node coordinates that the fewest edges span.
fn scan_axis(g: &Graph, coords: &[f64]) -> (f64, usize) {
    let mut sorted: Vec<f64> = coords.iter().map(|&c| wrap_unit(c)).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let identity = torus_axis_wraps(g, coords, 0.0);
    if sorted.len() < 2 {
        return (0.0, identity);
    }
    // arcs as (start, length) going forward around the circle
    let arcs: Vec<(f64, f64)> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let d = circular_delta(coords[a], coords[b]);
            if d >= 0.0 {
                (wrap_unit(coords[a]), d)
            } else {
                (wrap_unit(coords[b]), -d)
            }
        })
        .collect();
    let mut best = (0.0, identity);
    for k in 0..sorted.len() {
        let lo = sorted[k];
        let hi = if k + 1 < sorted.len() { sorted[k + 1] } else { sorted[0] + 1.0 };
        let cut = wrap_unit((lo + hi) / 2.0);
        let count = arcs
            .iter()
            .filter(|&&(s, len)| (cut - s).rem_euclid(1.0) < len)
            .count();
        if count < best.1 {
            best = (wrap_unit(-cut), count);
        }
    }
    best
}

/// Translation of a torus layout that minimizes wrapped edges, per axis.
pub fn auto_pan_torus(g: &Graph, positions: &[[f64; 2]]) -> Result<PanResult> {
    check_positions(g, positions.len())?;
    let xs: Vec<f64> = positions.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = positions.iter().map(|p| p[1]).collect();
    let identity = torus_axis_wraps(g, &xs, 0.0) + torus_axis_wraps(g, &ys, 0.0);
    let (du, wx) = scan_axis(g, &xs);
    let (dv, wy) = scan_axis(g, &ys);
    Ok(PanResult {
        method: PanMethod::TorusScan,
        projection: None,
        best_rotation: None,
        best_offset: Some([du, dv]),
        best_score: (wx + wy) as f64,
        identity_score: identity as f64,
        best_index: 0,
        all_scores: None,
        best_pixels: None,
        identity_pixels: None,
        axis_wraps: Some([wx, wy]),
    })
}

/// Shifts a torus layout by `offset`, wrapping back into `[0, 1)^2`.
pub fn translate_torus(positions: &[[f64; 2]], offset: [f64; 2]) -> Vec<[f64; 2]> {
    positions
        .iter()
        .map(|p| [wrap_unit(p[0] + offset[0]), wrap_unit(p[1] + offset[1])])
        .collect()
}

/// Mean pixel tallies over several rotations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeanPixels {
    pub band: f64,
    pub interior: f64,
    pub band_clear: f64,
}

/// Auto-pan against a baseline of random rotations for one layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanComparison {
    pub pan: PanResult,
    pub random_scores: Vec<f64>,
    pub random_mean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_mean_pixels: Option<MeanPixels>,
}

/// Runs the rotation search and scores `random_count` further uniform
/// rotations (drawn from `random_seed`, identity excluded) the same way.
pub fn compare_with_random(
    g: &Graph,
    positions: &[UnitVec3],
    kind: ProjectionKind,
    cfg: &PanSearchConfig,
    random_count: usize,
    random_seed: u64,
) -> Result<PanComparison> {
    if random_count == 0 {
        return Err(Error::InvalidArgument("need at least one random rotation".into()));
    }
    let pan = auto_pan_sphere(g, positions, kind, cfg)?;
    let rotations = &candidate_rotations(random_count + 1, random_seed)[1..];
    let n = random_count as f64;
    if kind.is_hemispheric() {
        let random_scores: Vec<f64> = rotations
            .iter()
            .map(|&r| orthographic_crossing_count(g, positions, r) as f64)
            .collect();
        let random_mean_score = random_scores.iter().sum::<f64>() / n;
        return Ok(PanComparison { pan, random_scores, random_mean_score, random_mean_pixels: None });
    }
    let counts = rotations
        .iter()
        .map(|&r| boundary_pixel_counts(g, positions, kind, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mean = |f: fn(&PixelCounts) -> u64| counts.iter().map(|c| f(c) as f64).sum::<f64>() / n;
    let random_scores: Vec<f64> = counts.iter().map(|c| c.band as f64).collect();
    Ok(PanComparison {
        pan,
        random_mean_score: mean(|c| c.band),
        random_scores,
        random_mean_pixels: Some(MeanPixels {
            band: mean(|c| c.band),
            interior: mean(|c| c.interior),
            band_clear: mean(|c| c.band_clear),
        }),
    })
}

/// Dispatches on the layout geometry. Plane layouts have nothing to pan.
pub fn auto_pan(g: &Graph, layout: &Layout, kind: ProjectionKind, cfg: &PanSearchConfig) -> Result<PanResult> {
    match layout {
        Layout::Sphere(p) => auto_pan_sphere(g, p, kind, cfg),
        Layout::Torus(p) => auto_pan_torus(g, p),
        Layout::Plane(_) => Err(Error::InvalidArgument("plane layouts cannot be panned".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::GeoPoint;

    fn geo(lon: f64, lat: f64) -> UnitVec3 {
        GeoPoint::new(lon, lat).to_vec()
    }

    #[test]
    fn antipodal_edge_always_crosses() {
        let g = Graph::new(2, [(0, 1)], None).unwrap();
        let pos = [geo(20.0, 10.0), geo(-160.0, -10.0)];
        for r in candidate_rotations(50, 1) {
            assert_eq!(orthographic_crossing_count(&g, &pos, r), 1);
        }
    }

    #[test]
    fn single_sample_is_identity() {
        let g = Graph::new(3, [(0, 1), (1, 2)], None).unwrap();
        let pos = [geo(0.0, 0.0), geo(100.0, 0.0), geo(-100.0, 0.0)];
        let cfg = PanSearchConfig { samples: 1, ..Default::default() };
        let res = auto_pan_sphere(&g, &pos, ProjectionKind::OrthographicHemisphere, &cfg).unwrap();
        assert_eq!(res.best_rotation, Some(RotationTriple::IDENTITY));
        assert_eq!(res.best_score, res.identity_score);
    }

    #[test]
    fn candidate_lists_extend() {
        let a = candidate_rotations(10, 5);
        let b = candidate_rotations(20, 5);
        assert_eq!(a[..], b[..10]);
        assert_eq!(a[0], RotationTriple::IDENTITY);
    }

    #[test]
    fn empty_and_central_edges_have_no_penalty() {
        let cfg = PanSearchConfig::default();
        let g = Graph::new(2, [], None).unwrap();
        let pos = [geo(0.0, 0.0), geo(5.0, 0.0)];
        assert_eq!(equal_earth_boundary_penalty(&g, &pos, RotationTriple::IDENTITY, &cfg).unwrap(), 0);
        let g = Graph::new(2, [(0, 1)], None).unwrap();
        assert_eq!(equal_earth_boundary_penalty(&g, &pos, RotationTriple::IDENTITY, &cfg).unwrap(), 0);
        let pos = [geo(175.0, 0.0), geo(-175.0, 0.0)];
        assert!(equal_earth_boundary_penalty(&g, &pos, RotationTriple::IDENTITY, &cfg).unwrap() > 0);
    }

    #[test]
    fn torus_cluster_unwraps() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)], None).unwrap();
        let pos = [[0.95, 0.5], [0.05, 0.52], [0.02, 0.97]];
        let res = auto_pan_torus(&g, &pos).unwrap();
        assert_eq!(res.best_score, 0.0);
        assert!(res.identity_score > 0.0);
        let moved = translate_torus(&pos, res.best_offset.unwrap());
        for p in moved {
            assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
        }
    }

    #[test]
    fn bad_config_rejected() {
        let g = Graph::new(1, [], None).unwrap();
        let pos = [geo(0.0, 0.0)];
        for cfg in [
            PanSearchConfig { samples: 0, ..Default::default() },
            PanSearchConfig { mask_band_width_pct: 50.0, ..Default::default() },
            PanSearchConfig { raster_width: 0, ..Default::default() },
        ] {
            assert!(auto_pan_sphere(&g, &pos, ProjectionKind::EqualEarth, &cfg).is_err());
        }
    }
}

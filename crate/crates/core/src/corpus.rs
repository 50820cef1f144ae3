//! Study corpora: clustered graphs with a planted partition at a target
//! modularity, and sparse scale-free graphs at a target density.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const MAX_REJECTION_ROUNDS: usize = 200;
pub const DEFAULT_MODULARITY_TOLERANCE: f64 = 0.02;
pub const DEFAULT_DENSITY_TOLERANCE: f64 = 0.10;
/// Largest share of the within-cluster pairs that may be used as edges.
const MAX_INTRA_FILL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusteredGraphSpec {
    pub node_range: [usize; 2],
    pub edge_range: [usize; 2],
    pub cluster_count_range: [usize; 2],
    pub target_modularity: f64,
    pub modularity_tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScaleFreeGraphSpec {
    pub node_range: [usize; 2],
    pub target_density: f64,
    pub density_tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusSpec {
    Clustered(ClusteredGraphSpec),
    ScaleFree(ScaleFreeGraphSpec),
}

impl CorpusSpec {
    pub fn seed(&self) -> u64 {
        match self {
            CorpusSpec::Clustered(s) => s.seed,
            CorpusSpec::ScaleFree(s) => s.seed,
        }
    }

    pub fn generate(&self) -> Result<Graph> {
        match self {
            CorpusSpec::Clustered(s) => generate_clustered(s),
            CorpusSpec::ScaleFree(s) => generate_scale_free(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusPreset {
    SmallEasy,
    SmallHard,
    LargeEasy,
    LargeHard,
    PathEasy,
    PathHard,
}

impl CorpusPreset {
    pub const ALL: [CorpusPreset; 6] = [
        CorpusPreset::SmallEasy,
        CorpusPreset::SmallHard,
        CorpusPreset::LargeEasy,
        CorpusPreset::LargeHard,
        CorpusPreset::PathEasy,
        CorpusPreset::PathHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorpusPreset::SmallEasy => "small-easy",
            CorpusPreset::SmallHard => "small-hard",
            CorpusPreset::LargeEasy => "large-easy",
            CorpusPreset::LargeHard => "large-hard",
            CorpusPreset::PathEasy => "path-easy",
            CorpusPreset::PathHard => "path-hard",
        }
    }

    pub fn spec(self, seed: u64) -> CorpusSpec {
        let clustered = |node_range, edge_range, q| {
            CorpusSpec::Clustered(ClusteredGraphSpec {
                node_range,
                edge_range,
                cluster_count_range: [4, 7],
                target_modularity: q,
                modularity_tolerance: DEFAULT_MODULARITY_TOLERANCE,
                seed,
            })
        };
        let path = |density| {
            CorpusSpec::ScaleFree(ScaleFreeGraphSpec {
                node_range: [50, 57],
                target_density: density,
                density_tolerance: DEFAULT_DENSITY_TOLERANCE,
                seed,
            })
        };
        match self {
            CorpusPreset::SmallEasy => clustered([68, 80], [710, 925], 0.4),
            CorpusPreset::SmallHard => clustered([68, 80], [710, 925], 0.3),
            CorpusPreset::LargeEasy => clustered([126, 134], [2310, 2590], 0.4),
            CorpusPreset::LargeHard => clustered([126, 134], [2310, 2590], 0.3),
            CorpusPreset::PathEasy => path(0.075),
            CorpusPreset::PathHard => path(0.11),
        }
    }
}

impl std::str::FromStr for CorpusPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorpusPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }
}

/// Newman modularity `sum_c (e_cc - a_c^2)` of a labelling, where `e_cc` is
/// the fraction of edges inside cluster `c` and `a_c` the fraction of edge
/// ends attached to it.
pub fn modularity(g: &Graph, labels: &[usize]) -> f64 {
    assert_eq!(labels.len(), g.node_count(), "one label per node");
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut inside = vec![0.0; k];
    let mut ends = vec![0.0; k];
    for &(a, b) in g.edges() {
        if labels[a] == labels[b] {
            inside[labels[a]] += 1.0;
        }
        ends[labels[a]] += 1.0;
        ends[labels[b]] += 1.0;
    }
    inside
        .iter()
        .zip(&ends)
        .map(|(&e, &a)| e / m - (a / (2.0 * m)).powi(2))
        .sum()
}

fn check_range(name: &str, r: [usize; 2]) -> Result<()> {
    if r[0] > r[1] {
        return Err(Error::InvalidArgument(format!("{name} range {r:?} is empty")));
    }
    Ok(())
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Cluster sizes around `n / k`, each jittered by up to 20%, summing to `n`.
fn cluster_sizes(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let raw: Vec<f64> = (0..k).map(|_| 1.0 + rng.random_range(-0.2..0.2)).collect();
    let total: f64 = raw.iter().sum();
    let mut sizes: Vec<usize> = raw
        .iter()
        .map(|r| ((r / total * n as f64).floor() as usize).max(2))
        .collect();
    // hand out the rounding remainder, or take back an excess, one node at a time
    let mut i = 0;
    while sizes.iter().sum::<usize>() < n {
        sizes[i % k] += 1;
        i += 1;
    }
    while sizes.iter().sum::<usize>() > n {
        let big = (0..k).max_by_key(|&c| sizes[c]).expect("k >= 1");
        sizes[big] -= 1;
    }
    sizes
}

/// Splits `total` into per-cluster counts proportional to `caps`
/// (largest remainder), never exceeding a cap.
fn apportion(total: usize, caps: &[usize]) -> Vec<usize> {
    let cap_sum: usize = caps.iter().sum();
    if cap_sum == 0 {
        return vec![0; caps.len()];
    }
    let exact: Vec<f64> = caps
        .iter()
        .map(|&c| total as f64 * c as f64 / cap_sum as f64)
        .collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut left = total - out.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if out[c] < caps[c] {
            out[c] += 1;
            left -= 1;
        }
    }
    out
}

/// Planted partition with exact intra- and inter-cluster edge counts.
fn planted_partition(sizes: &[usize], m_in: usize, m_out: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = Vec::with_capacity(sizes.len());
    let mut labels = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        start.push(labels.len());
        labels.extend(std::iter::repeat_n(c, s));
    }
    let n = labels.len();
    let caps: Vec<usize> = sizes.iter().map(|&s| pairs(s)).collect();
    let mut edges = Vec::with_capacity(m_in + m_out);
    for (c, &count) in apportion(m_in, &caps).iter().enumerate() {
        let s = sizes[c];
        for idx in sample(&mut rng, caps[c], count) {
            let (i, j) = unrank_pair(idx, s);
            edges.push((start[c] + i, start[c] + j));
        }
    }
    let inter: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .filter(|&(a, b)| labels[a] != labels[b])
        .collect();
    for idx in sample(&mut rng, inter.len(), m_out.min(inter.len())) {
        edges.push(inter[idx]);
    }
    Graph::new(n, edges, Some(labels)).expect("sampled pairs are distinct and in range")
}

/// Inverse of the row-major enumeration of pairs `i < j` below `s`.
fn unrank_pair(mut idx: usize, s: usize) -> (usize, usize) {
    let mut i = 0;
    while idx >= s - 1 - i {
        idx -= s - 1 - i;
        i += 1;
    }
    (i, i + 1 + idx)
}

pub fn generate_clustered(spec: &ClusteredGraphSpec) -> Result<Graph> {
    check_range("node", spec.node_range)?;
    check_range("edge", spec.edge_range)?;
    check_range("cluster count", spec.cluster_count_range)?;
    if spec.cluster_count_range[0] == 0 || spec.node_range[0] == 0 {
        return Err(Error::InvalidArgument("need at least one node and one cluster".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last_reason = String::new();
    for _ in 0..MAX_REJECTION_ROUNDS {
        let n = rng.random_range(spec.node_range[0]..=spec.node_range[1]);
        let m = rng.random_range(spec.edge_range[0]..=spec.edge_range[1]);
        let k = rng.random_range(spec.cluster_count_range[0]..=spec.cluster_count_range[1]);
        let sizes = cluster_sizes(n, k, &mut rng);
        let sub_seed = rng.next_u64();
        if 2 * k > n {
            last_reason = format!("{k} clusters for {n} nodes");
            continue;
        }
        let intra_cap: usize = sizes.iter().map(|&s| pairs(s)).sum();
        let inter_cap = pairs(n) - intra_cap;
        let hi = ((MAX_INTRA_FILL * intra_cap as f64).floor() as usize).min(m);
        let lo = m.saturating_sub(inter_cap);
        if lo > hi {
            last_reason = format!("{m} edges do not fit {k} clusters over {n} nodes");
            continue;
        }
        let build = |m_in: usize| planted_partition(&sizes, m_in, m - m_in, sub_seed);
        let q_of = |g: &Graph| modularity(g, g.clusters().expect("planted labels"));

        // modularity grows with the intra-cluster share; find the first
        // count reaching the target, then keep whichever neighbour is closer
        let (mut a, mut b) = (lo, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if q_of(&build(mid)) < spec.target_modularity {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        let mut best = build(a);
        if a > lo {
            let below = build(a - 1);
            if (q_of(&below) - spec.target_modularity).abs() < (q_of(&best) - spec.target_modularity).abs() {
                best = below;
            }
        }
        let q = q_of(&best);
        if (q - spec.target_modularity).abs() > spec.modularity_tolerance {
            last_reason = format!("modularity {q:.3} with {k} clusters, {n} nodes, {m} edges");
            continue;
        }
        if !best.is_connected() {
            last_reason = "disconnected sample".into();
            continue;
        }
        return Ok(best);
    }
    Err(Error::SpecInfeasible(format!(
        "no clustered graph after {MAX_REJECTION_ROUNDS} rounds (last: {last_reason})"
    )))
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Barabasi-Albert growth followed by preferential edge additions until the
/// edge count matches the target density.
fn preferential_graph(n: usize, m_target: usize, rng: &mut impl Rng) -> Graph {
    let m0 = (m_target / n).max(1);
    let mut edges: std::collections::BTreeSet<(usize, usize)> = Default::default();
    // one entry per edge end, so a uniform pick is degree-proportional
    let mut ends: Vec<usize> = Vec::new();
    let seed_size = (m0 + 1).min(n);
    for a in 0..seed_size {
        for b in (a + 1)..seed_size {
            edges.insert((a, b));
            ends.extend([a, b]);
        }
    }
    for v in seed_size..n {
        let mut targets = Vec::with_capacity(m0);
        while targets.len() < m0.min(v) {
            let t = ends[rng.random_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.insert((t, v));
            ends.extend([t, v]);
        }
    }
    let cap = pairs(n);
    while edges.len() < m_target.min(cap) {
        let a = ends[rng.random_range(0..ends.len())];
        let b = ends[rng.random_range(0..ends.len())];
        if a != b && edges.insert((a.min(b), a.max(b))) {
            ends.extend([a, b]);
        }
    }
    Graph::new(n, edges, None).expect("generated edges are simple")
}

pub fn generate_scale_free(spec: &ScaleFreeGraphSpec) -> Result<Graph> {
    check_range("node", spec.node_range)?;
    if !(spec.target_density > 0.0 && spec.target_density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density {} must lie in (0, 1]",
            spec.target_density
        )));
    }
    if spec.node_range[0] < 2 {
        return Err(Error::SpecInfeasible("need at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last_reason = String::new();
    for _ in 0..MAX_REJECTION_ROUNDS {
        let n = rng.random_range(spec.node_range[0]..=spec.node_range[1]);
        let m_target = (spec.target_density * pairs(n) as f64).round() as usize;
        if m_target < n - 1 {
            last_reason = format!("{m_target} edges cannot connect {n} nodes");
            continue;
        }
        let g = preferential_graph(n, m_target, &mut rng);
        let density = g.density();
        if (density - spec.target_density).abs() > spec.density_tolerance * spec.target_density {
            last_reason = format!("density {density:.4}");
            continue;
        }
        let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
        let max = *degrees.iter().max().expect("n >= 2") as f64;
        let med = median(degrees);
        if !g.is_connected() || max < 3.0 * med {
            last_reason = format!("max degree {max} vs median {med}");
            continue;
        }
        return Ok(g);
    }
    Err(Error::SpecInfeasible(format!(
        "no scale-free graph after {MAX_REJECTION_ROUNDS} rounds (last: {last_reason})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cluster_has_zero_modularity() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)], None).unwrap();
        assert_eq!(modularity(&g, &[0, 0, 0, 0]), 0.0);
        let spec = ClusteredGraphSpec {
            node_range: [10, 10],
            edge_range: [20, 20],
            cluster_count_range: [1, 1],
            target_modularity: 0.0,
            modularity_tolerance: 0.02,
            seed: 3,
        };
        let g = generate_clustered(&spec).unwrap();
        assert!(g.is_connected());
        assert_eq!(modularity(&g, g.clusters().unwrap()), 0.0);
    }

    #[test]
    fn unrank_covers_all_pairs() {
        let s = 6;
        let got: Vec<_> = (0..pairs(s)).map(|i| unrank_pair(i, s)).collect();
        let want: Vec<_> = (0..s).flat_map(|i| ((i + 1)..s).map(move |j| (i, j))).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn apportion_respects_caps() {
        assert_eq!(apportion(10, &[5, 5]), vec![5, 5]);
        let a = apportion(7, &[10, 1, 3]);
        assert_eq!(a.iter().sum::<usize>(), 7);
        assert!(a[1] <= 1);
    }

    #[test]
    fn small_easy_envelope() {
        let g = CorpusPreset::SmallEasy.spec(7).generate().unwrap();
        assert!((68..=80).contains(&g.node_count()));
        assert!((710..=925).contains(&g.edge_count()));
        let q = modularity(&g, g.clusters().unwrap());
        assert!((q - 0.4).abs() <= 0.02, "{q}");
    }

    #[test]
    fn minimal_scale_free() {
        let spec = ScaleFreeGraphSpec {
            node_range: [5, 5],
            target_density: 0.5,
            density_tolerance: 0.1,
            seed: 1,
        };
        // five nodes rarely reach a 3x hub, so either outcome is acceptable
        match generate_scale_free(&spec) {
            Ok(g) => {
                assert!(g.is_connected());
                assert_eq!(g.edge_count(), 5);
            }
            Err(e) => assert!(matches!(e, Error::SpecInfeasible(_))),
        }
    }

    #[test]
    fn infeasible_clustered_spec() {
        let spec = ClusteredGraphSpec {
            node_range: [20, 20],
            edge_range: [180, 180],
            cluster_count_range: [7, 7],
            target_modularity: 0.6,
            modularity_tolerance: 0.02,
            seed: 0,
        };
        assert!(matches!(generate_clustered(&spec), Err(Error::SpecInfeasible(_))));
    }

    #[test]
    fn preset_names_round_trip() {
        for p in CorpusPreset::ALL {
            assert_eq!(p.name().parse::<CorpusPreset>().unwrap(), p);
        }
    }
}

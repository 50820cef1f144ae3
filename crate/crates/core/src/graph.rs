//! Simple undirected graphs with optional planted cluster labels.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable simple undirected graph. Edges are stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    clusters: Option<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates and builds a graph. Rejects self-loops, duplicate edges,
    /// out-of-range endpoints and label vectors of the wrong length.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        clusters: Option<Vec<usize>>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        let mut adjacency = vec![Vec::new(); node_count];
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            list.push(e);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        if let Some(labels) = &clusters {
            if labels.len() != node_count {
                return Err(Error::InvalidGraph(format!(
                    "{} cluster labels for {node_count} nodes",
                    labels.len()
                )));
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: list,
            clusters,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn clusters(&self) -> Option<&[usize]> {
        self.clusters.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.node_count && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// `2|E| / (n (n - 1))`.
    pub fn density(&self) -> f64 {
        let n = self.node_count as f64;
        if self.node_count < 2 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / (n * (n - 1.0))
    }

    /// Number of distinct cluster labels, if labelled.
    pub fn cluster_count(&self) -> Option<usize> {
        self.clusters
            .as_ref()
            .map(|l| l.iter().collect::<BTreeSet<_>>().len())
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued nodes have a distance");
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.node_count == 0 || self.bfs(0).iter().all(Option::is_some)
    }

    /// All-pairs hop distances, row-major `n x n`.
    pub fn all_pairs_hops(&self) -> Result<Vec<usize>> {
        let n = self.node_count;
        let mut out = vec![0; n * n];
        for s in 0..n {
            for (t, d) in self.bfs(s).into_iter().enumerate() {
                out[s * n + t] = d.ok_or(Error::DisconnectedGraph)?;
            }
        }
        Ok(out)
    }

    pub fn diameter(&self) -> Result<usize> {
        Ok(self.all_pairs_hops()?.into_iter().max().unwrap_or(0))
    }

    pub fn to_document(&self, spec: serde_json::Value, seed: Option<u64>) -> GraphDocument {
        GraphDocument {
            nodes: self.node_count,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            clusters: self.clusters.clone(),
            spec,
            seed,
        }
    }
}

/// BFS hop count between two nodes.
pub fn shortest_path_length(g: &Graph, s: usize, t: usize) -> Result<usize> {
    if s >= g.node_count() || t >= g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "node pair ({s}, {t}) out of range for {} nodes",
            g.node_count()
        )));
    }
    g.bfs(s)[t].ok_or(Error::Unreachable { from: s, to: t })
}

/// On-disk graph format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub clusters: Option<Vec<usize>>,
    #[serde(default)]
    pub spec: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl GraphDocument {
    pub fn to_graph(&self) -> Result<Graph> {
        Graph::new(
            self.nodes,
            self.edges.iter().map(|e| (e[0], e[1])),
            self.clusters.clone(),
        )
    }
}

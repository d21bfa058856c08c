//! Plaintext graph handling: loading, neighbor padding, feature normalization
//! and the plaintext GCN reference.

mod features;
pub mod gcn;
mod load;
mod pad;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{normalize_features, NormalizeReport};
pub use load::{load_citation, load_graph, parse_edge_list, parse_json, GraphFormat};
pub use pad::{aggregate, pad_neighbors, unpadded, PaddedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Undirected graph with node features and class labels. Self-loops are not
/// stored; the normalized adjacency adds them analytically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlainGraph {
    pub num_nodes: usize,
    pub edges: Vec<Edge>,
    pub feature_dim: usize,
    /// Row-major N × D.
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub split: Vec<Split>,
    pub num_classes: usize,
}

impl PlainGraph {
    /// Checks ids, weights, duplicates and dimensions. Errors point at the
    /// offending edge or node index through `line` (1-based).
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        let bad = |line: usize, msg: String| Error::Parse { file: "graph".into(), line, msg };
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(bad(i + 1, format!("edge ({}, {}) references a node id ≥ N = {n}", e.src, e.dst)));
            }
            if e.src == e.dst {
                return Err(bad(i + 1, format!("self-loop on node {}", e.src)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(bad(i + 1, format!("edge weight {} must be positive", e.weight)));
            }
            if !seen.insert((e.src.min(e.dst), e.src.max(e.dst))) {
                return Err(bad(i + 1, format!("duplicate edge ({}, {})", e.src, e.dst)));
            }
        }
        if self.features.len() != n * self.feature_dim {
            return Err(Error::Shape(format!(
                "{} feature values for {n} nodes of dimension {}",
                self.features.len(),
                self.feature_dim
            )));
        }
        if self.labels.len() != n || self.split.len() != n {
            return Err(Error::Shape(format!(
                "{} labels / {} splits for {n} nodes",
                self.labels.len(),
                self.split.len()
            )));
        }
        if let Some((v, &c)) = self.labels.iter().enumerate().find(|(_, &c)| c >= self.num_classes) {
            return Err(bad(v + 1, format!("label {c} of node {v} ≥ number of classes {}", self.num_classes)));
        }
        Ok(())
    }

    pub fn feature_row(&self, v: usize) -> &[f64] {
        &self.features[v * self.feature_dim..(v + 1) * self.feature_dim]
    }

    /// Adjacency lists with weights, both directions, in edge order.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.src].push((e.dst, e.weight));
            adj[e.dst].push((e.src, e.weight));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for e in &self.edges {
            d[e.src] += 1;
            d[e.dst] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// degree → number of nodes with that degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for d in self.degrees() {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    }

    pub fn mask(&self, which: Split) -> Vec<bool> {
        self.split.iter().map(|s| *s == which).collect()
    }

    /// Row-major N × C one-hot label matrix.
    pub fn one_hot(&self) -> Vec<f64> {
        let c = self.num_classes;
        let mut y = vec![0.0; self.num_nodes * c];
        for (v, &l) in self.labels.iter().enumerate() {
            y[v * c + l] = 1.0;
        }
        y
    }

    /// Copy with row-normalized features.
    pub fn normalized(&self) -> (PlainGraph, NormalizeReport) {
        let (features, report) = normalize_features(&self.features, self.feature_dim);
        (PlainGraph { features, ..self.clone() }, report)
    }
}

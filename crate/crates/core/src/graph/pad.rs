use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PlainGraph;

/// Per-node neighbor arrays extended with weight-zero dummy entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaddedGraph {
    pub num_nodes: usize,
    pub d_max: usize,
    /// Neighbor ids; real neighbors first, then dummies.
    pub ne: Vec<Vec<usize>>,
    /// Edge weights aligned with `ne`; dummies are exactly 0.
    pub ew: Vec<Vec<f64>>,
    /// 1 + Σ ew per node.
    pub sw: Vec<f64>,
    /// Number of dummies appended to each node.
    pub added: Vec<usize>,
}

impl PaddedGraph {
    pub fn entries(&self) -> usize {
        self.ne.iter().map(Vec::len).sum()
    }

    pub fn total_added(&self) -> usize {
        self.added.iter().sum()
    }
}

fn build(g: &PlainGraph, mut extra: impl FnMut(usize) -> usize, mut dummy: impl FnMut() -> usize) -> PaddedGraph {
    let adj = g.neighbors();
    let d_max = adj.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = PaddedGraph {
        num_nodes: g.num_nodes,
        d_max,
        ne: Vec::with_capacity(g.num_nodes),
        ew: Vec::with_capacity(g.num_nodes),
        sw: Vec::with_capacity(g.num_nodes),
        added: Vec::with_capacity(g.num_nodes),
    };
    for list in adj {
        let k = extra(d_max - list.len());
        let mut ne: Vec<usize> = list.iter().map(|e| e.0).collect();
        let mut ew: Vec<f64> = list.iter().map(|e| e.1).collect();
        out.sw.push(1.0 + ew.iter().sum::<f64>());
        for _ in 0..k {
            ne.push(dummy());
            ew.push(0.0);
        }
        out.ne.push(ne);
        out.ew.push(ew);
        out.added.push(k);
    }
    out
}

/// Appends k_v ~ U[0, d_max − d_v] dummies to every node, with dummy ids
/// uniform over all nodes.
pub fn pad_neighbors<R: Rng + ?Sized>(g: &PlainGraph, rng: &mut R) -> PaddedGraph {
    let n = g.num_nodes;
    let rng = std::cell::RefCell::new(rng);
    build(g, |gap| rng.borrow_mut().gen_range(0..=gap), || rng.borrow_mut().gen_range(0..n))
}

/// The same layout without dummies.
pub fn unpadded(g: &PlainGraph) -> PaddedGraph {
    build(g, |_| 0, || unreachable!())
}

/// Normalized aggregation (1/sw_v)·x_v + Σ_j ew_{v,j}/√(sw_v·sw_{ne_{v,j}})·x_{ne_{v,j}}
/// over a row-major N × dim matrix.
pub fn aggregate(pg: &PaddedGraph, x: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; pg.num_nodes * dim];
    for v in 0..pg.num_nodes {
        let o = &mut out[v * dim..(v + 1) * dim];
        let xs = &x[v * dim..(v + 1) * dim];
        for (a, b) in o.iter_mut().zip(xs) {
            *a = b / pg.sw[v];
        }
        for (&u, &w) in pg.ne[v].iter().zip(&pg.ew[v]) {
            let c = w / (pg.sw[v] * pg.sw[u]).sqrt();
            for (a, b) in o.iter_mut().zip(&x[u * dim..(u + 1) * dim]) {
                *a += c * b;
            }
        }
    }
    out
}

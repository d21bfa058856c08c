//! Secret-shared two-layer GCN: ingest, Â-aggregation through oblivious
//! array access, forward pass, backpropagation and SGD.

mod checkpoint;

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::gcn::Mat;
use crate::graph::{PaddedGraph, PlainGraph};
use crate::party::Party;
use crate::protocols::array_access::{access_batch, Schedule, SharedArray};
use crate::protocols::linear::{matmult, mul_public_fixed, mul_raw, mul_sum_raw};
use crate::protocols::nonlinear::{inv_sqrt, relu_with_mask, softmax};
use crate::ring::{enc, Z64};
use crate::sharing::{deal_rep, RepShare};
use crate::tensor::{deal_fixed, SecureTensor};
use crate::transport::tag;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};

/// Hex SHA-256 over the padded structure, weights and features.
pub fn graph_hash(pg: &PaddedGraph, features: &[f64], dim: usize, frac_bits: u32) -> String {
    let mut h = Sha256::new();
    for v in [pg.num_nodes as u64, dim as u64, frac_bits as u64] {
        h.update(v.to_le_bytes());
    }
    for (ne, ew) in pg.ne.iter().zip(&pg.ew) {
        h.update((ne.len() as u64).to_le_bytes());
        for (&u, &w) in ne.iter().zip(ew) {
            h.update((u as u64).to_le_bytes());
            h.update(w.to_bits().to_le_bytes());
        }
    }
    for x in features {
        h.update(x.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Quantities derived once per graph: inverse square roots of sw, the
/// aggregation coefficients and Â·X.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prepared {
    pub isq: Vec<RepShare>,
    pub self_coef: Vec<RepShare>,
    /// Per node, one coefficient per padded neighbor entry.
    pub coef: Vec<Vec<RepShare>>,
    pub ax: SecureTensor,
}

/// One party's view of the shared graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecureGraphState {
    pub num_nodes: usize,
    pub feature_dim: usize,
    /// Public cache key.
    pub hash: String,
    pub x: SecureTensor,
    /// Neighbor ids as integer shares; the padded lengths are public.
    pub ne: Vec<Vec<RepShare>>,
    pub ew: Vec<Vec<RepShare>>,
    pub sw: Vec<RepShare>,
    pub prepared: Option<Prepared>,
}

/// Data-owner side: shares a padded graph and its normalized features.
pub fn ingest<R: Rng + ?Sized>(
    pg: &PaddedGraph,
    features: &[f64],
    dim: usize,
    frac_bits: u32,
    rng: &mut R,
) -> Result<[SecureGraphState; 4]> {
    let n = pg.num_nodes;
    if features.len() != n * dim {
        return Err(Error::Shape(format!("{} feature values for {n} nodes of dimension {dim}", features.len())));
    }
    let hash = graph_hash(pg, features, dim, frac_bits);
    let x = deal_fixed(features, n, dim, frac_bits, rng)?;
    let lens: Vec<usize> = pg.ne.iter().map(Vec::len).collect();
    let ids: Vec<Z64> = pg.ne.iter().flatten().map(|&u| Z64(u as u64)).collect();
    let weights: Vec<f64> = pg.ew.iter().flatten().copied().collect();
    let ne = deal_rep(&ids, rng);
    let ew = deal_fixed(&weights, weights.len(), 1, frac_bits, rng)?;
    let sw = deal_fixed(&pg.sw, n, 1, frac_bits, rng)?;
    let split = |flat: &[RepShare]| -> Vec<Vec<RepShare>> {
        let mut off = 0;
        lens.iter()
            .map(|&l| {
                off += l;
                flat[off - l..off].to_vec()
            })
            .collect()
    };
    let [x0, x1, x2, x3] = x;
    Ok([x0, x1, x2, x3]
        .into_iter()
        .enumerate()
        .map(|(i, x)| SecureGraphState {
            num_nodes: n,
            feature_dim: dim,
            hash: hash.clone(),
            x,
            ne: split(&ne[i]),
            ew: split(&ew[i].data),
            sw: sw[i].data.clone(),
            prepared: None,
        })
        .collect::<Vec<_>>()
        .try_into()
        .expect("four parties"))
}

/// Where prepared shares are cached between runs.
#[derive(Clone, Debug, Default)]
pub struct PrepareCache {
    pub dir: Option<PathBuf>,
}

impl PrepareCache {
    pub fn disabled() -> Self {
        PrepareCache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        PrepareCache { dir: Some(dir.into()) }
    }

    fn file(&self, hash: &str, p: &Party) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{hash}.{}.json", p.id())))
    }
}

/// Aggregates through the given coefficients: fetches every padded neighbor
/// row by oblivious access, then forms Σ coef·row with one truncation per
/// output entry.
fn aggregate_with(
    p: &mut Party,
    state: &SecureGraphState,
    self_coef: &[RepShare],
    coef: &[Vec<RepShare>],
    x: &SecureTensor,
) -> Result<SecureTensor> {
    let (n, d) = x.shape();
    if n != state.num_nodes {
        return Err(Error::Shape(format!("aggregating {n} rows over a {}-node graph", state.num_nodes)));
    }
    if d == 0 {
        return Ok(x.clone());
    }
    let arr = SharedArray::new(n, d, x.data.clone())?;
    let reqs: Vec<(&SharedArray, RepShare)> = state.ne.iter().flatten().map(|&i| (&arr, i)).collect();
    let rows =
        if reqs.is_empty() { Vec::new() } else { p.with_tag(tag::AA, |p| access_batch(p, &reqs, Schedule::Async))? };
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut groups = Vec::with_capacity(n * d);
    let mut off = 0;
    for v in 0..n {
        let k = state.ne[v].len();
        for c in 0..d {
            lhs.push(self_coef[v]);
            rhs.push(x.data[v * d + c]);
            for j in 0..k {
                lhs.push(coef[v][j]);
                rhs.push(rows[(off + j) * d + c]);
            }
            groups.push(k + 1);
        }
        off += k;
    }
    let fb = p.frac_bits();
    let data = p.with_tag(tag::HAD, |p| mul_sum_raw(p, &lhs, &rhs, &groups, fb))?;
    SecureTensor::new(n, d, x.frac_bits, data)
}

/// Computes (or loads) the inverse-sqrt cache, the coefficients and Â·X.
pub fn prepare(p: &mut Party, state: &mut SecureGraphState, cache: &PrepareCache) -> Result<()> {
    if state.prepared.is_some() {
        return Ok(());
    }
    let file = cache.file(&state.hash, p);
    let complete = cache.dir.as_deref().is_some_and(|d| cache_complete(d, &state.hash));
    if let Some(f) = file.as_ref().filter(|_| complete) {
        let prep: Prepared = serde_json::from_slice(&std::fs::read(f)?)?;
        if prep.ax.shape() == (state.num_nodes, state.feature_dim) {
            state.prepared = Some(prep);
            return Ok(());
        }
    }
    let fb = p.frac_bits();
    let n = state.num_nodes;
    let isq = inv_sqrt(p, &state.sw)?;
    let isq_arr = SharedArray::scalars(isq.clone())?;
    let reqs: Vec<(&SharedArray, RepShare)> = state.ne.iter().flatten().map(|&i| (&isq_arr, i)).collect();
    let isq_ne =
        if reqs.is_empty() { Vec::new() } else { p.with_tag(tag::AA, |p| access_batch(p, &reqs, Schedule::Async))? };
    let (coef_flat, self_coef) = p.with_tag(tag::HAD, |p| {
        // one round: isq_v² and ew·isq_v, then ·isq_u
        let mut a = isq.clone();
        let mut b = isq.clone();
        for v in 0..n {
            for w in &state.ew[v] {
                a.push(*w);
                b.push(isq[v]);
            }
        }
        let r = mul_raw(p, &a, &b, fb)?;
        let (sc, t) = r.split_at(n);
        Ok((mul_raw(p, t, &isq_ne, fb)?, sc.to_vec()))
    })?;
    let mut coef = Vec::with_capacity(n);
    let mut off = 0;
    for v in 0..n {
        let k = state.ne[v].len();
        coef.push(coef_flat[off..off + k].to_vec());
        off += k;
    }
    let ax = aggregate_with(p, state, &self_coef, &coef, &state.x)?;
    let prep = Prepared { isq, self_coef, coef, ax };
    if let Some(f) = file {
        if let Some(dir) = f.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&f, serde_json::to_vec(&prep)?)?;
    }
    state.prepared = Some(prep);
    Ok(())
}

fn prepared(state: &SecureGraphState) -> Result<&Prepared> {
    state
        .prepared
        .as_ref()
        .ok_or_else(|| Error::Parameter("graph state is not prepared; call gnn::prepare first".into()))
}

/// Â·x over the shared graph.
pub fn aggregate_layer(p: &mut Party, state: &SecureGraphState, x: &SecureTensor) -> Result<SecureTensor> {
    let prep = prepared(state)?;
    aggregate_with(p, state, &prep.self_coef, &prep.coef, x)
}

/// Shared weights and public training hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecureModel {
    pub w0: SecureTensor,
    pub w1: SecureTensor,
    pub lr: LearningRate,
    pub epoch: u64,
}

/// Public learning rate (stored as bits so the model stays `Eq`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningRate(u64);

impl LearningRate {
    pub fn new(v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Parameter(format!("learning rate {v} must be a nonnegative number")));
        }
        Ok(LearningRate(v.to_bits()))
    }

    pub fn get(self) -> f64 {
        f64::from_bits(self.0)
    }
}

impl SecureModel {
    /// Shares plaintext weights among the four parties.
    pub fn deal<R: Rng + ?Sized>(
        w0: &Mat<f64>,
        w1: &Mat<f64>,
        lr: f64,
        frac_bits: u32,
        rng: &mut R,
    ) -> Result<[SecureModel; 4]> {
        if w0.cols != w1.rows {
            return Err(Error::Shape(format!("W0 {}×{} and W1 {}×{}", w0.rows, w0.cols, w1.rows, w1.cols)));
        }
        let lr = LearningRate::new(lr)?;
        let a = deal_fixed(&w0.data, w0.rows, w0.cols, frac_bits, rng)?;
        let b = deal_fixed(&w1.data, w1.rows, w1.cols, frac_bits, rng)?;
        let [a0, a1, a2, a3] = a;
        let [b0, b1, b2, b3] = b;
        Ok([(a0, b0), (a1, b1), (a2, b2), (a3, b3)].map(|(w0, w1)| SecureModel { w0, w1, lr, epoch: 0 }))
    }
}

/// Shares the one-hot label matrix.
pub fn deal_labels<R: Rng + ?Sized>(g: &PlainGraph, frac_bits: u32, rng: &mut R) -> Result<[SecureTensor; 4]> {
    deal_fixed(&g.one_hot(), g.num_nodes, g.num_classes, frac_bits, rng)
}

/// Shared intermediates of one forward pass.
#[derive(Clone, Debug)]
pub struct SecureTrace {
    pub h: SecureTensor,
    /// Integer 0/1 shares of [h > 0].
    pub relu_mask: Vec<RepShare>,
    pub r: SecureTensor,
    pub ar: SecureTensor,
    pub logits: SecureTensor,
    pub z: SecureTensor,
}

/// softmax(Â·ReLU(Â·X·W0)·W1) with Â·X taken from the prepared state.
pub fn forward(p: &mut Party, state: &SecureGraphState, model: &SecureModel) -> Result<SecureTrace> {
    let prep = prepared(state)?;
    let h = matmult(p, &prep.ax, &model.w0)?;
    let (r, relu_mask) = relu_with_mask(p, &h.data)?;
    let r = SecureTensor::new(h.rows, h.cols, h.frac_bits, r)?;
    let ar = aggregate_layer(p, state, &r)?;
    let logits = matmult(p, &ar, &model.w1)?;
    let z = softmax(p, &logits)?;
    Ok(SecureTrace { h, relu_mask, r, ar, logits, z })
}

/// One full-batch SGD step on the masked nodes. Returns the pre-update
/// forward trace; its `z` lets the data owner compute loss and accuracy.
pub fn train_epoch(
    p: &mut Party,
    state: &SecureGraphState,
    model: &mut SecureModel,
    labels: &SecureTensor,
    mask: &[bool],
) -> Result<SecureTrace> {
    let m = mask.iter().filter(|&&b| b).count();
    if m == 0 {
        return Err(Error::Parameter("training mask selects no node".into()));
    }
    let prep = prepared(state)?;
    let t = forward(p, state, model)?;
    if labels.shape() != t.z.shape() {
        return Err(Error::Shape(format!("labels {:?} vs predictions {:?}", labels.shape(), t.z.shape())));
    }
    let g = t.z.sub(labels)?.mask_rows(mask)?;
    let dw1 = matmult(p, &t.ar.transpose(), &g)?;
    let dar = matmult(p, &g, &model.w1.transpose())?;
    let dr = aggregate_layer(p, state, &dar)?;
    let dh = p.with_tag(tag::MULT, |p| mul_raw(p, &dr.data, &t.relu_mask, 0))?;
    let dh = SecureTensor::new(dr.rows, dr.cols, dr.frac_bits, dh)?;
    let dw0 = matmult(p, &prep.ax.transpose(), &dh)?;
    let c = enc(model.lr.get() / m as f64, p.frac_bits());
    let step0 = mul_public_fixed(p, &dw0.data, c)?;
    let step1 = mul_public_fixed(p, &dw1.data, c)?;
    model.w0 = model.w0.sub(&SecureTensor::new(dw0.rows, dw0.cols, dw0.frac_bits, step0)?)?;
    model.w1 = model.w1.sub(&SecureTensor::new(dw1.rows, dw1.cols, dw1.frac_bits, step1)?)?;
    model.epoch += 1;
    Ok(t)
}

/// True when every party's cache file exists for `hash`.
pub fn cache_complete(dir: &Path, hash: &str) -> bool {
    crate::transport::PartyId::ALL.iter().all(|id| dir.join(format!("{hash}.{id}.json")).exists())
}

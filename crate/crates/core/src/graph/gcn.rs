//! Two-layer GCN in plaintext: Z = softmax(Â·ReLU(Â·X·W0)·W1), trained with
//! full-batch SGD on the softmax/cross-entropy gradient. Runs on any
//! [`Arith`] backend; with [`FixedArith`](crate::oracle::FixedArith) it
//! follows the secure pipeline's operation and truncation order.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PaddedGraph;
use crate::error::{Error, Result};
use crate::oracle::Arith;

/// Width of the hidden layer.
pub const HIDDEN: usize = 16;

/// Row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Mat<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}×{cols} matrix", data.len())));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat<T> {
        let data = (0..self.cols * self.rows).map(|i| self.data[(i % self.rows) * self.cols + i / self.rows]).collect();
        Mat { rows: self.cols, cols: self.rows, data }
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

pub fn matmul<A: Arith>(a: &A, x: &Mat<A::T>, y: &Mat<A::T>) -> Result<Mat<A::T>> {
    if x.cols != y.rows {
        return Err(Error::Shape(format!("matmul of {}×{} and {}×{}", x.rows, x.cols, y.rows, y.cols)));
    }
    let yt = y.transpose();
    let mut data = Vec::with_capacity(x.rows * y.cols);
    for i in 0..x.rows {
        for j in 0..y.cols {
            data.push(a.dot(x.row(i), yt.row(j)));
        }
    }
    Ok(Mat { rows: x.rows, cols: y.cols, data })
}

/// Kaiming-uniform initialization, U(±√(6/fan_in)), row-major fan_in × fan_out.
pub fn kaiming<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Mat<f64> {
    let b = (6.0 / fan_in.max(1) as f64).sqrt();
    let u = Uniform::new_inclusive(-b, b);
    Mat { rows: fan_in, cols: fan_out, data: (0..fan_in * fan_out).map(|_| u.sample(rng)).collect() }
}

/// Per-node aggregation coefficients: the self term 1/sw_v and one
/// ew·sw_v^(−½)·sw_u^(−½) per padded neighbor entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    pub self_coef: Vec<T>,
    pub neighbors: Vec<Vec<(usize, T)>>,
}

impl<T: Copy> Coefficients<T> {
    /// Same operation order as the secure preparation: isq = invsqrt(sw),
    /// self = isq·isq, coef = (ew·isq_v)·isq_u.
    pub fn build<A: Arith<T = T>>(a: &A, pg: &PaddedGraph) -> Self {
        let isq: Vec<T> = pg.sw.iter().map(|&s| a.inv_sqrt(a.from_f64(s))).collect();
        let self_coef = isq.iter().map(|&s| a.mul(s, s)).collect();
        let neighbors = (0..pg.num_nodes)
            .map(|v| {
                pg.ne[v]
                    .iter()
                    .zip(&pg.ew[v])
                    .map(|(&u, &w)| (u, a.mul(a.mul(a.from_f64(w), isq[v]), isq[u])))
                    .collect()
            })
            .collect();
        Coefficients { self_coef, neighbors }
    }

    /// Â·x, one rounding per output entry.
    pub fn apply<A: Arith<T = T>>(&self, a: &A, x: &Mat<T>) -> Mat<T> {
        let d = x.cols;
        let mut data = Vec::with_capacity(x.rows * d);
        for v in 0..x.rows {
            let nb = &self.neighbors[v];
            let mut coefs = Vec::with_capacity(nb.len() + 1);
            coefs.push(self.self_coef[v]);
            coefs.extend(nb.iter().map(|e| e.1));
            for c in 0..d {
                let mut vals = Vec::with_capacity(nb.len() + 1);
                vals.push(x.data[v * d + c]);
                vals.extend(nb.iter().map(|e| x.data[e.0 * d + c]));
                data.push(a.dot(&coefs, &vals));
            }
        }
        Mat { rows: x.rows, cols: d, data }
    }
}

/// Intermediate tensors of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace<T> {
    pub h: Mat<T>,
    pub relu_mask: Vec<bool>,
    pub r: Mat<T>,
    pub ar: Mat<T>,
    pub logits: Mat<T>,
    pub z: Mat<T>,
}

/// Outcome of one training step, measured on the pre-update forward pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepReport {
    pub loss: f64,
    pub accuracy: f64,
}

/// Plaintext GCN state.
pub struct PlainGcn<A: Arith> {
    pub arith: A,
    pub coef: Coefficients<A::T>,
    /// Cached Â·X.
    pub ax: Mat<A::T>,
    pub w0: Mat<A::T>,
    pub w1: Mat<A::T>,
    pub lr: f64,
}

impl<A: Arith> PlainGcn<A> {
    /// `features` must already be normalized (N × D row-major).
    pub fn new(arith: A, pg: &PaddedGraph, features: &Mat<f64>, w0: &Mat<f64>, w1: &Mat<f64>, lr: f64) -> Result<Self> {
        if features.rows != pg.num_nodes || w0.rows != features.cols || w1.rows != w0.cols {
            return Err(Error::Shape(format!(
                "features {}×{}, W0 {}×{}, W1 {}×{} for {} nodes",
                features.rows, features.cols, w0.rows, w0.cols, w1.rows, w1.cols, pg.num_nodes
            )));
        }
        let coef = Coefficients::build(&arith, pg);
        let x = features.map(|v| arith.from_f64(v));
        let ax = coef.apply(&arith, &x);
        let w0 = w0.map(|v| arith.from_f64(v));
        let w1 = w1.map(|v| arith.from_f64(v));
        Ok(PlainGcn { arith, coef, ax, w0, w1, lr })
    }

    pub fn forward(&self) -> Result<Trace<A::T>> {
        let a = &self.arith;
        let h = matmul(a, &self.ax, &self.w0)?;
        let relu_mask: Vec<bool> = h.data.iter().map(|&v| a.positive(v)).collect();
        let r = Mat {
            rows: h.rows,
            cols: h.cols,
            data: h.data.iter().zip(&relu_mask).map(|(&v, &m)| if m { v } else { a.zero() }).collect(),
        };
        let ar = self.coef.apply(a, &r);
        let logits = matmul(a, &ar, &self.w1)?;
        let z = Mat {
            rows: logits.rows,
            cols: logits.cols,
            data: (0..logits.rows).flat_map(|i| a.softmax(logits.row(i))).collect(),
        };
        Ok(Trace { h, relu_mask, r, ar, logits, z })
    }

    /// Class probabilities as reals.
    pub fn predict(&self) -> Result<Mat<f64>> {
        Ok(self.forward()?.z.map(|v| self.arith.to_f64(v)))
    }

    /// Gradients (dW0, dW1) of the summed cross-entropy over masked nodes.
    pub fn gradients(&self, t: &Trace<A::T>, labels: &[usize], mask: &[bool]) -> Result<(Mat<A::T>, Mat<A::T>)> {
        let a = &self.arith;
        let (n, c) = (t.z.rows, t.z.cols);
        if labels.len() != n || mask.len() != n {
            return Err(Error::Shape(format!("{} labels / {} mask entries for {n} nodes", labels.len(), mask.len())));
        }
        let one = a.from_f64(1.0);
        let g = Mat {
            rows: n,
            cols: c,
            data: (0..n * c)
                .map(|i| {
                    let (v, k) = (i / c, i % c);
                    if !mask[v] {
                        a.zero()
                    } else if labels[v] == k {
                        a.sub(t.z.data[i], one)
                    } else {
                        t.z.data[i]
                    }
                })
                .collect(),
        };
        let dw1 = matmul(a, &t.ar.transpose(), &g)?;
        let dar = matmul(a, &g, &self.w1.transpose())?;
        let dr = self.coef.apply(a, &dar);
        let dh = Mat {
            rows: dr.rows,
            cols: dr.cols,
            data: dr.data.iter().zip(&t.relu_mask).map(|(&v, &m)| if m { v } else { a.zero() }).collect(),
        };
        let dw0 = matmul(a, &self.ax.transpose(), &dh)?;
        Ok((dw0, dw1))
    }

    /// One full-batch SGD step with the gradient averaged over masked nodes.
    pub fn step(&mut self, labels: &[usize], mask: &[bool]) -> Result<StepReport> {
        let m = mask.iter().filter(|&&b| b).count();
        if m == 0 {
            return Err(Error::Parameter("training mask selects no node".into()));
        }
        let t = self.forward()?;
        let report = self.report(&t, labels, mask);
        let (dw0, dw1) = self.gradients(&t, labels, mask)?;
        let a = &self.arith;
        let scale = self.lr / m as f64;
        for (w, d) in self.w0.data.iter_mut().zip(&dw0.data) {
            *w = a.sub(*w, a.mul_public(*d, scale));
        }
        for (w, d) in self.w1.data.iter_mut().zip(&dw1.data) {
            *w = a.sub(*w, a.mul_public(*d, scale));
        }
        Ok(report)
    }

    pub fn report(&self, t: &Trace<A::T>, labels: &[usize], mask: &[bool]) -> StepReport {
        let z = t.z.map(|v| self.arith.to_f64(v));
        evaluate(&z, labels, mask)
    }

    pub fn weights(&self) -> (Mat<f64>, Mat<f64>) {
        (self.w0.map(|v| self.arith.to_f64(v)), self.w1.map(|v| self.arith.to_f64(v)))
    }
}

/// Index of the largest entry of each row (first on ties).
pub fn argmax_rows(z: &Mat<f64>) -> Vec<usize> {
    (0..z.rows)
        .map(|i| {
            z.row(i)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect()
}

/// Mean cross-entropy and accuracy over masked nodes of probability rows.
pub fn evaluate(z: &Mat<f64>, labels: &[usize], mask: &[bool]) -> StepReport {
    let pred = argmax_rows(z);
    let (mut loss, mut hit, mut m) = (0.0, 0usize, 0usize);
    for v in (0..z.rows).filter(|&v| mask[v]) {
        loss -= z.row(v)[labels[v]].max(1e-9).ln();
        hit += usize::from(pred[v] == labels[v]);
        m += 1;
    }
    let m = m.max(1) as f64;
    StepReport { loss: loss / m, accuracy: hit as f64 / m }
}

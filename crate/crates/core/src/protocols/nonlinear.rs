//! Sign test, ReLU, ODE softmax, bounding power, division and inverse square root.

use crate::error::{Error, Result};
use crate::params::CmpWindow;
use crate::party::Party;
use crate::ring::{enc, zp, Modulus, Z64};
use crate::sharing::RepShare;
use crate::tensor::SecureTensor;
use crate::transport::{tag, PartyId};

use super::linear::{add_to_rep, mul_public_fixed, mul_raw};

/// Comparison vector of one input as seen by P0 (`first`) or P1.
///
/// P0 holds A, P1 holds B with A + B = x. With Y = −B the compared prefixes
/// D_j = ⌊A/2^(o+j)⌋ − ⌊Y/2^(o+j)⌋ are split as u0_j + u1_j, and
/// v_k = D_k + D_(k+1) − 1 (v_w = D_w − 1) has a zero exactly when x > 0 at
/// the window's resolution.
fn cmp_vector(share: Z64, first: bool, flip: bool, w: &CmpWindow) -> Vec<u64> {
    let p = w.prime;
    let width = w.width as usize;
    let mut u = Vec::with_capacity(width + 1);
    if first {
        let a = if flip { -share + Z64(1u64 << w.offset) } else { share };
        for j in 0..=width {
            u.push((a.0 >> (w.offset as usize + j)) % p);
        }
    } else {
        let b = if flip { -share } else { share };
        let y = -b;
        for j in 0..=width {
            u.push(zp::sub(0, (y.0 >> (w.offset as usize + j)) % p, p));
        }
    }
    let one = if first { 0 } else { 1 };
    let mut v = Vec::with_capacity(width + 1);
    for k in 0..width {
        v.push(zp::sub(zp::add(u[k], u[k + 1], p), one, p));
    }
    v.push(zp::sub(u[width], one, p));
    v
}

/// Sign test over `w`: shares of 1 where x > 0 and 0 otherwise.
///
/// Exact for every x that is a multiple of 2^offset with |x| < 2^(offset+width−1);
/// inputs strictly between 0 and 2^offset may return either bit.
pub fn drelu_window(p: &mut Party, x: &[RepShare], w: &CmpWindow) -> Result<Vec<RepShare>> {
    w.validate()?;
    let n = x.len();
    let len = w.width as usize + 1;
    let bits = Modulus::Prime(w.prime).wire_bits();
    let tester = p.next_tester();
    let me = p.id();
    match me.index() {
        0 | 1 => {
            let first = me == PartyId::P0;
            let mut flips = Vec::with_capacity(n);
            let mut masked = Vec::with_capacity(n * len);
            for s in x {
                let prg = p.pair_prg();
                let flip = prg.next_u64() & 1 == 1;
                let perm = prg.permutation(len);
                let v = cmp_vector(s.piece, first, flip, w);
                let mut out = vec![0u64; len];
                for k in 0..len {
                    let r = prg.below(w.prime - 1) + 1;
                    let m = prg.below(w.prime);
                    let vr = zp::mul(v[k], r, w.prime);
                    out[perm[k]] = if first { zp::add(vr, m, w.prime) } else { zp::sub(vr, m, w.prime) };
                }
                masked.extend(out);
                flips.push(flip);
            }
            p.send_packed(tester, &masked, bits)?;
            let got = p.recv_ring(tester, n)?;
            let add: Vec<Z64> = got
                .iter()
                .zip(&flips)
                .map(|(g, &f)| match (first, f) {
                    (true, false) => *g,
                    (true, true) => Z64::ONE - *g,
                    (false, false) => *g,
                    (false, true) => -*g,
                })
                .collect();
            add_to_rep(p, &add, n)
        }
        _ => {
            if me == tester {
                let w0 = p.recv_packed(PartyId::P0, n * len, bits)?;
                let w1 = p.recv_packed(PartyId::P1, n * len, bits)?;
                let mut to0 = Vec::with_capacity(n);
                let mut to1 = Vec::with_capacity(n);
                for i in 0..n {
                    let hit = (0..len).any(|k| zp::add(w0[i * len + k], w1[i * len + k], w.prime) == 0);
                    let r = Z64(rand::Rng::gen(p.private_rng()));
                    to0.push(r);
                    to1.push(Z64(hit as u64) - r);
                }
                p.send_ring(PartyId::P0, &to0)?;
                p.send_ring(PartyId::P1, &to1)?;
            }
            add_to_rep(p, &[], n)
        }
    }
}

/// Sign test with the configured key-bit window.
pub fn drelu(p: &mut Party, x: &[RepShare]) -> Result<Vec<RepShare>> {
    let w = p.params().key_window();
    p.with_tag(tag::DRELU, |p| drelu_window(p, x, &w))
}

/// ReLU(x) = x · DReLU(x); also returns the DReLU bits for reuse.
pub fn relu_with_mask(p: &mut Party, x: &[RepShare]) -> Result<(Vec<RepShare>, Vec<RepShare>)> {
    let w = p.params().key_window();
    p.with_tag(tag::RELU, |p| {
        let d = drelu_window(p, x, &w)?;
        let y = mul_raw(p, x, &d, 0)?;
        Ok((y, d))
    })
}

pub fn relu(p: &mut Party, x: &[RepShare]) -> Result<Vec<RepShare>> {
    Ok(relu_with_mask(p, x)?.0)
}

/// Exponent range covered by the bounding-power protocol.
pub fn pow_range(p: &Party) -> (i32, i32) {
    let r = p.params().ring;
    (-(r.frac_bits as i32), r.value_bits as i32 - r.frac_bits as i32 - 1)
}

/// One-hot encoding of α with 2^α ≤ x < 2^(α+1), plus α itself.
#[derive(Clone, Debug)]
pub struct PowBound {
    /// Lowest exponent represented by `onehot[_][0]`.
    pub k_min: i32,
    /// Per input, integer shares e_k for k = k_min..=k_max.
    pub onehot: Vec<Vec<RepShare>>,
    /// Integer shares of α.
    pub alpha: Vec<RepShare>,
}

impl PowBound {
    /// Local combination Σ_k e_k · c(k) for public raw constants.
    pub fn combine(&self, c: impl Fn(i32) -> Z64) -> Vec<RepShare> {
        self.onehot
            .iter()
            .map(|e| e.iter().enumerate().map(|(j, s)| s.mul_public(c(self.k_min + j as i32))).sum())
            .collect()
    }
}

fn pow_bound_inner(p: &mut Party, x: &[RepShare]) -> Result<PowBound> {
    let (k_min, k_max) = pow_range(p);
    let fb = p.frac_bits() as i32;
    let id = p.id();
    let w = CmpWindow::wide(p.params().ring.value_bits);
    let per = (k_max - k_min) as usize;
    let mut y = Vec::with_capacity(x.len() * per);
    for s in x {
        for k in k_min + 1..=k_max {
            let thr = Z64(1u64 << (k + fb));
            y.push(s.add_public(id, Z64::ONE - thr));
        }
    }
    let c = drelu_window(p, &y, &w)?;
    let one = RepShare::public(id, Z64::ONE);
    let mut onehot = Vec::with_capacity(x.len());
    let mut alpha = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let cs = &c[i * per..(i + 1) * per];
        let ge = |j: usize| -> RepShare {
            if j == 0 {
                one
            } else if j > per {
                RepShare::ZERO
            } else {
                cs[j - 1]
            }
        };
        let e: Vec<RepShare> = (0..=per).map(|j| ge(j) - ge(j + 1)).collect();
        alpha.push(e.iter().enumerate().map(|(j, s)| s.scale(k_min as i64 + j as i64)).sum());
        onehot.push(e);
    }
    Ok(PowBound { k_min, onehot, alpha })
}

/// Bounding power of positive shared values.
pub fn pow_bound(p: &mut Party, x: &[RepShare]) -> Result<PowBound> {
    p.with_tag(tag::POW, |p| pow_bound_inner(p, x))
}

fn pow2_raw(e: i32, fb: u32) -> Z64 {
    let s = e + fb as i32;
    assert!((0..63).contains(&s), "2^{e} not representable");
    Z64(1u64 << s)
}

/// Division a / b for b > 0: normalize b into [0.5, 1), two Newton refinements
/// from y0 = 2.9142 − 2b, multiply by a and denormalize.
pub fn divide(p: &mut Party, a: &[RepShare], b: &[RepShare]) -> Result<Vec<RepShare>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("divide of lengths {} and {}", a.len(), b.len())));
    }
    p.with_tag(tag::DIV, |p| {
        let fb = p.frac_bits();
        let id = p.id();
        let n = a.len();
        let pb = pow_bound_inner(p, b)?;
        let s = pb.combine(|k| pow2_raw(-(k + 1), fb));
        let bn = mul_raw(p, b, &s, fb)?;
        let y0: Vec<RepShare> = bn.iter().map(|v| v.scale(-2).add_public(id, enc(2.9142, fb))).collect();
        let t = mul_raw(p, &bn, &y0, fb)?;
        let one = enc(1.0, fb);
        let beta0: Vec<RepShare> = t.iter().map(|v| (-*v).add_public(id, one)).collect();
        let lhs: Vec<RepShare> = beta0.iter().chain(&y0).copied().collect();
        let mut rhs: Vec<RepShare> = beta0.iter().chain(beta0.iter()).copied().collect();
        for v in rhs[n..].iter_mut() {
            *v = v.add_public(id, one);
        }
        let r = mul_raw(p, &lhs, &rhs, fb)?;
        let (beta1, y1) = r.split_at(n);
        let onep: Vec<RepShare> = beta1.iter().map(|v| v.add_public(id, one)).collect();
        let y2 = mul_raw(p, y1, &onep, fb)?;
        let q = mul_raw(p, a, &y2, fb)?;
        mul_raw(p, &q, &s, fb)
    })
}

/// Inverse square root for x > 0: normalize by 2^(−2⌈α/2⌉), run r Newton
/// steps y ← y(3 − x·y²)/2 from y = 1, then scale by 2^(−⌈α/2⌉).
pub fn inv_sqrt(p: &mut Party, x: &[RepShare]) -> Result<Vec<RepShare>> {
    p.with_tag(tag::INVSQRT, |p| {
        let fb = p.frac_bits();
        let id = p.id();
        let iters = p.params().iters.invsqrt_r;
        let pb = pow_bound_inner(p, x)?;
        let half_up = |k: i32| (k + 1).div_euclid(2);
        let s = pb.combine(|k| pow2_raw(-half_up(k), fb));
        let s2 = pb.combine(|k| pow2_raw(-2 * half_up(k), fb));
        let xn = mul_raw(p, x, &s2, fb)?;
        let three = enc(3.0, fb);
        let mut y: Vec<RepShare> = vec![RepShare::public(id, enc(1.0, fb)); x.len()];
        for _ in 0..iters {
            let y2 = mul_raw(p, &y, &y, fb)?;
            let h = mul_raw(p, &xn, &y2, fb)?;
            let g: Vec<RepShare> = h.iter().map(|v| (-*v).add_public(id, three)).collect();
            y = mul_raw(p, &y, &g, fb + 1)?;
        }
        mul_raw(p, &y, &s, fb)
    })
}

/// Row-wise softmax by t Euler steps of f' = (x − ⟨x, f⟩)·f from f = 1/d.
pub fn softmax(p: &mut Party, x: &SecureTensor) -> Result<SecureTensor> {
    let (n, d) = x.shape();
    if d == 0 {
        return Err(Error::Parameter("softmax over an empty vector".into()));
    }
    p.with_tag(tag::SOFTMAX, |p| {
        let fb = p.frac_bits();
        let id = p.id();
        let t = p.params().iters.softmax_t;
        let (xs, k) = if t.is_power_of_two() {
            (x.data.clone(), fb + t.trailing_zeros())
        } else {
            (mul_public_fixed(p, &x.data, enc(1.0 / t as f64, fb))?, fb)
        };
        let mut f = vec![RepShare::public(id, enc(1.0 / d as f64, fb)); n * d];
        for _ in 0..t {
            let c = mul_raw(p, &xs, &f, k)?;
            let ip: Vec<RepShare> = (0..n).map(|r| c[r * d..(r + 1) * d].iter().copied().sum()).collect();
            let ipb: Vec<RepShare> = (0..n * d).map(|i| ip[i / d]).collect();
            let b = mul_raw(p, &ipb, &f, fb)?;
            for i in 0..n * d {
                f[i] = f[i] + c[i] - b[i];
            }
        }
        SecureTensor::new(n, d, x.frac_bits, f)
    })
}

//! Multiplication, Hadamard product, matrix product, truncation and opening.
//!
//! A product is computed as four masked cross terms, one per party:
//! P0: x0·y0′ − r01, P1: x1·y1′ + r01, P2: x2·y2′ − r23, P3: x3·y3′ + r23.
//! P0↔P3 and P1↔P2 swap their terms so that P0/P3 hold zA and P1/P2 hold zB
//! with zA + zB = xy. The product is truncated once (zA as share 0, zB as
//! share 1) and the prime pieces are re-shared with a fresh seed01 mask.

use crate::error::{Error, Result};
use crate::party::Party;
use crate::ring::{trunc_prob, TruncRole, Z64};
use crate::sharing::RepShare;
use crate::tensor::SecureTensor;
use crate::transport::{tag, PartyId};

/// Partner that holds the same additive half of a product.
fn exchange_partner(p: PartyId) -> PartyId {
    PartyId::ALL[3 - p.index()]
}

fn role(p: PartyId) -> TruncRole {
    if p == PartyId::P0 || p == PartyId::P3 {
        TruncRole::Share0
    } else {
        TruncRole::Share1
    }
}

/// Turns per-party halves (zA on P0/P3, zB on P1/P2) into replicated shares
/// of zA + zB. One message P0→P2 and one P1→P3. The halves are first shifted
/// by ±m from the common generator, which makes truncated halves uniform.
pub(crate) fn reshare_halves(p: &mut Party, half: &[Z64]) -> Result<Vec<RepShare>> {
    let n = half.len();
    let m = p.common_prg().z64s(n);
    let first = role(p.id()) == TruncRole::Share0;
    let half: Vec<Z64> = half.iter().zip(&m).map(|(h, m)| if first { *h + *m } else { *h - *m }).collect();
    match p.index() {
        0 => {
            let rho = p.pair_prg().z64s(n);
            let prime: Vec<Z64> = half.iter().zip(&rho).map(|(h, r)| *h - *r).collect();
            p.send_ring(PartyId::P2, &prime)?;
            Ok(half.iter().zip(prime).map(|(h, q)| RepShare::new(*h, q)).collect())
        }
        1 => {
            let rho = p.pair_prg().z64s(n);
            let prime: Vec<Z64> = half.iter().zip(&rho).map(|(h, r)| *h + *r).collect();
            p.send_ring(PartyId::P3, &prime)?;
            Ok(half.iter().zip(prime).map(|(h, q)| RepShare::new(*h, q)).collect())
        }
        2 => {
            let prime = p.recv_ring(PartyId::P0, n)?;
            Ok(half.iter().zip(prime).map(|(h, q)| RepShare::new(*h, q)).collect())
        }
        _ => {
            let prime = p.recv_ring(PartyId::P1, n)?;
            Ok(half.iter().zip(prime).map(|(h, q)| RepShare::new(*h, q)).collect())
        }
    }
}

/// Masks the local cross terms, swaps them with the partner, truncates the
/// resulting half by `k` bits and re-shares.
fn finish_product(p: &mut Party, cross: Vec<Z64>, k: u32) -> Result<Vec<RepShare>> {
    let n = cross.len();
    let masks = p.pair_prg().z64s(n);
    let minus = p.index().is_multiple_of(2);
    let mine: Vec<Z64> = cross.iter().zip(&masks).map(|(c, m)| if minus { *c - *m } else { *c + *m }).collect();
    let partner = exchange_partner(p.id());
    p.send_ring(partner, &mine)?;
    let theirs = p.recv_ring(partner, n)?;
    let r = role(p.id());
    let half: Vec<Z64> = mine.iter().zip(&theirs).map(|(a, b)| trunc_prob(*a + *b, k, r)).collect();
    reshare_halves(p, &half)
}

/// Element-wise products truncated by `k` bits, under the caller's tag.
pub fn mul_raw(p: &mut Party, x: &[RepShare], y: &[RepShare], k: u32) -> Result<Vec<RepShare>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("element-wise product of lengths {} and {}", x.len(), y.len())));
    }
    let cross = x.iter().zip(y).map(|(a, b)| a.piece * b.prime).collect();
    finish_product(p, cross, k)
}

/// Consecutive groups of element-wise products summed before the single
/// truncation, one output per group (lengths in `groups`).
pub fn mul_sum_raw(p: &mut Party, x: &[RepShare], y: &[RepShare], groups: &[usize], k: u32) -> Result<Vec<RepShare>> {
    let total: usize = groups.iter().sum();
    if x.len() != y.len() || x.len() != total {
        return Err(Error::Shape(format!(
            "grouped products of lengths {} and {} over {total} terms",
            x.len(),
            y.len()
        )));
    }
    let mut off = 0;
    let cross = groups
        .iter()
        .map(|&g| {
            let s = x[off..off + g].iter().zip(&y[off..off + g]).map(|(a, b)| a.piece * b.prime).sum();
            off += g;
            s
        })
        .collect();
    finish_product(p, cross, k)
}

/// Fixed-point product of two shared scalars.
pub fn mult(p: &mut Party, x: RepShare, y: RepShare) -> Result<RepShare> {
    let k = p.frac_bits();
    p.with_tag(tag::MULT, |p| Ok(mul_raw(p, &[x], &[y], k)?[0]))
}

/// Batched fixed-point products of shared vectors.
pub fn mult_vec(p: &mut Party, x: &[RepShare], y: &[RepShare]) -> Result<Vec<RepShare>> {
    let k = p.frac_bits();
    p.with_tag(tag::MULT, |p| mul_raw(p, x, y, k))
}

/// Element-wise fixed-point product of two tensors.
pub fn hadamard(p: &mut Party, x: &SecureTensor, y: &SecureTensor) -> Result<SecureTensor> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!("hadamard of {:?} and {:?}", x.shape(), y.shape())));
    }
    let k = p.frac_bits();
    let data = p.with_tag(tag::HAD, |p| mul_raw(p, &x.data, &y.data, k))?;
    SecureTensor::new(x.rows, x.cols, x.frac_bits, data)
}

/// Matrix product with the cross-term matrices accumulated at full ring
/// width and one truncation per output entry.
pub fn matmult_raw(p: &mut Party, x: &SecureTensor, y: &SecureTensor, k: u32) -> Result<SecureTensor> {
    if x.cols != y.rows {
        return Err(Error::Shape(format!("matmult of {:?} and {:?}", x.shape(), y.shape())));
    }
    let (a, b, c) = (x.rows, x.cols, y.cols);
    let mut cross = vec![Z64::ZERO; a * c];
    let yp: Vec<Z64> = y.data.iter().map(|s| s.prime).collect();
    for i in 0..a {
        let out = &mut cross[i * c..(i + 1) * c];
        for t in 0..b {
            let xv = x.data[i * b + t].piece;
            if xv == Z64::ZERO {
                continue;
            }
            let row = &yp[t * c..(t + 1) * c];
            for (o, yv) in out.iter_mut().zip(row) {
                *o += xv * *yv;
            }
        }
    }
    let data = finish_product(p, cross, k)?;
    SecureTensor::new(a, c, x.frac_bits, data)
}

pub fn matmult(p: &mut Party, x: &SecureTensor, y: &SecureTensor) -> Result<SecureTensor> {
    let k = p.frac_bits();
    p.with_tag(tag::MATMULT, |p| matmult_raw(p, x, y, k))
}

/// Truncates shared values by `k` bits (2 ring elements per value).
pub fn truncate(p: &mut Party, x: &[RepShare], k: u32) -> Result<Vec<RepShare>> {
    let r = role(p.id());
    let half: Vec<Z64> = x.iter().map(|s| trunc_prob(s.piece, k, r)).collect();
    p.with_tag(tag::TRUNC, |p| reshare_halves(p, &half))
}

/// Multiplies by a public fixed-point constant `c_raw` (scaled by 2^ℓt).
pub fn mul_public_fixed(p: &mut Party, x: &[RepShare], c_raw: Z64) -> Result<Vec<RepShare>> {
    let k = p.frac_bits();
    let r = role(p.id());
    let half: Vec<Z64> = x.iter().map(|s| trunc_prob(s.piece * c_raw, k, r)).collect();
    p.with_tag(tag::TRUNC, |p| reshare_halves(p, &half))
}

/// Opens shared values to all four parties (P0↔P1 and P2↔P3 swap pieces).
pub fn open(p: &mut Party, x: &[RepShare]) -> Result<Vec<Z64>> {
    let partner = PartyId::ALL[p.index() ^ 1];
    let mine: Vec<Z64> = x.iter().map(|s| s.piece).collect();
    p.with_tag(tag::REVEAL, |p| {
        p.send_ring(partner, &mine)?;
        let theirs = p.recv_ring(partner, mine.len())?;
        Ok(mine.iter().zip(theirs).map(|(a, b)| *a + b).collect())
    })
}

/// Additive → replicated conversion. P0/P1 pass their additive pieces,
/// P2/P3 pass an empty slice; `n` is the number of values.
pub fn add_to_rep(p: &mut Party, own: &[Z64], n: usize) -> Result<Vec<RepShare>> {
    match p.index() {
        0 | 1 => {
            if own.len() != n {
                return Err(Error::Shape(format!("{} additive pieces for {n} values", own.len())));
            }
            let rho = p.pair_prg().z64s(n);
            let p0 = p.index() == 0;
            let prime: Vec<Z64> = own.iter().zip(&rho).map(|(v, r)| if p0 { *v - *r } else { *v + *r }).collect();
            let (to_piece, to_prime) = if p0 { (PartyId::P3, PartyId::P2) } else { (PartyId::P2, PartyId::P3) };
            p.send_ring(to_piece, own)?;
            p.send_ring(to_prime, &prime)?;
            Ok(own.iter().zip(prime).map(|(v, q)| RepShare::new(*v, q)).collect())
        }
        2 => {
            let piece = p.recv_ring(PartyId::P1, n)?;
            let prime = p.recv_ring(PartyId::P0, n)?;
            Ok(piece.into_iter().zip(prime).map(|(a, b)| RepShare::new(a, b)).collect())
        }
        _ => {
            let piece = p.recv_ring(PartyId::P0, n)?;
            let prime = p.recv_ring(PartyId::P1, n)?;
            Ok(piece.into_iter().zip(prime).map(|(a, b)| RepShare::new(a, b)).collect())
        }
    }
}

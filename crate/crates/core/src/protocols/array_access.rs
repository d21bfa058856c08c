//! Oblivious access a[I] with a shared array and a shared index.
//!
//! P0 and P1 rotate their additive copies of the array by a common offset r,
//! mask them and send them (with the offset index) to P2 and P3 respectively.
//! P2 and P3 each pick one masked entry and return re-masked values, from
//! which all four parties assemble a fresh replicated sharing of a[I].
//! Rotation: a′[k] = a[(k + t − 1 − r) mod t], so a[I] sits at (I + r + 1) mod t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::party::Party;
use crate::ring::Z64;
use crate::sharing::RepShare;
use crate::transport::{tag, PartyId};

/// Shared array of `len` rows, each `width` shares wide.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedArray {
    pub len: usize,
    pub width: usize,
    pub data: Vec<RepShare>,
}

impl SharedArray {
    pub fn new(len: usize, width: usize, data: Vec<RepShare>) -> Result<Self> {
        if len == 0 || width == 0 || data.len() != len * width {
            return Err(Error::Shape(format!("{} shares for a {len}×{width} array", data.len())));
        }
        Ok(SharedArray { len, width, data })
    }

    pub fn scalars(data: Vec<RepShare>) -> Result<Self> {
        let n = data.len();
        SharedArray::new(n, 1, data)
    }

    fn row(&self, i: usize) -> &[RepShare] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Source row of rotated position `k` for rotation `r` over length `t`.
pub fn rotation_source(k: usize, r: usize, t: usize) -> usize {
    (k + t - 1 - r % t) % t
}

/// Position of a[i] after rotation by `r`.
pub fn rotated_position(i: u64, r: u64, t: usize) -> usize {
    ((i.wrapping_add(r) % t as u64) as usize + 1) % t
}

/// Message schedule variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// P0→P2 and P1→P3 proceed independently (2 phases).
    Async,
    /// P1 waits for P2's reply before contacting P3 (4 phases).
    Sync,
}

/// Accesses `arr[idx[q]]` for every q; returns `idx.len() × width` shares.
pub fn array_access(p: &mut Party, arr: &SharedArray, idx: &[RepShare]) -> Result<Vec<RepShare>> {
    let reqs: Vec<(&SharedArray, RepShare)> = idx.iter().map(|i| (arr, *i)).collect();
    p.with_tag(tag::AA, |p| access_batch(p, &reqs, Schedule::Async))
}

/// Same result as [`array_access`] with the serialized baseline schedule.
pub fn array_access_sync_baseline(p: &mut Party, arr: &SharedArray, idx: &[RepShare]) -> Result<Vec<RepShare>> {
    let reqs: Vec<(&SharedArray, RepShare)> = idx.iter().map(|i| (arr, *i)).collect();
    p.with_tag(tag::AA_SYNC, |p| access_batch(p, &reqs, Schedule::Sync))
}

/// Batched access over arbitrary (array, index) pairs, one envelope per edge.
pub fn access_batch(p: &mut Party, reqs: &[(&SharedArray, RepShare)], schedule: Schedule) -> Result<Vec<RepShare>> {
    let out_len: usize = reqs.iter().map(|(a, _)| a.width).sum();
    let send_len: usize = reqs.iter().map(|(a, _)| 1 + a.len * a.width).sum();
    match p.index() {
        0 | 1 => {
            let first = p.index() == 0;
            let mut msg = Vec::with_capacity(send_len);
            for (arr, i) in reqs {
                let t = arr.len;
                let w = arr.width;
                let prg = p.pair_prg();
                let ra = prg.below(t as u64) as usize;
                let conv = prg.z64s(t * w);
                let mask = prg.z64s(t * w);
                msg.push(i.piece + Z64(ra as u64));
                for k in 0..t {
                    let src = rotation_source(k, ra, t);
                    for (c, s) in arr.row(src).iter().enumerate() {
                        let j = src * w + c;
                        let m = mask[k * w + c];
                        msg.push(if first { s.piece + conv[j] + m } else { s.piece - conv[j] - m });
                    }
                }
            }
            let (helper, other) = if first { (PartyId::P2, PartyId::P3) } else { (PartyId::P3, PartyId::P2) };
            if first || schedule == Schedule::Async {
                p.send_ring(helper, &msg)?;
            }
            let from_other_helper;
            let from_helper;
            if first {
                from_helper = p.recv_ring(helper, out_len)?;
                from_other_helper = p.recv_ring(other, out_len)?;
            } else {
                from_other_helper = p.recv_ring(other, out_len)?;
                if schedule == Schedule::Sync {
                    p.send_ring(helper, &msg)?;
                }
                from_helper = p.recv_ring(helper, out_len)?;
            }
            // P0: piece s3 (from P3), prime s2′ (from P2).
            // P1: piece s2 (from P2), prime s3′ (from P3).
            Ok(from_other_helper.into_iter().zip(from_helper).map(|(a, b)| RepShare::new(a, b)).collect())
        }
        _ => {
            let is_p2 = p.index() == 2;
            let source = if is_p2 { PartyId::P0 } else { PartyId::P1 };
            let msg = p.recv_ring(source, send_len)?;
            let mut piece = Vec::with_capacity(out_len);
            let mut prime = Vec::with_capacity(out_len);
            let mut off = 0;
            for (arr, i) in reqs {
                let t = arr.len;
                let w = arr.width;
                // I + r as an integer: the index shares cancel to the plain value.
                let h = (msg[off] + i.piece).0;
                let pos = rotated_position(h, 0, t);
                let body = &msg[off + 1..off + 1 + t * w];
                let prg = p.pair_prg();
                let ra = prg.z64s(w);
                let rb = prg.z64s(w);
                for c in 0..w {
                    let e = body[pos * w + c];
                    if is_p2 {
                        let s = e + ra[c];
                        piece.push(s);
                        prime.push(s - rb[c]);
                    } else {
                        let s = e - ra[c];
                        piece.push(s);
                        prime.push(s + rb[c]);
                    }
                }
                off += 1 + t * w;
            }
            if is_p2 {
                p.send_ring(PartyId::P1, &piece)?;
                p.send_ring(PartyId::P0, &prime)?;
            } else {
                p.send_ring(PartyId::P0, &piece)?;
                p.send_ring(PartyId::P1, &prime)?;
            }
            Ok(piece.into_iter().zip(prime).map(|(a, b)| RepShare::new(a, b)).collect())
        }
    }
}

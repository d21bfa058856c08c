//! Payload encodings: little-endian 64-bit ring words and bit-packed field elements.

use crate::error::{Error, Result};
use crate::ring::Z64;

pub fn encode_ring(xs: &[Z64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_ring(b: &[u8]) -> Result<Vec<Z64>> {
    if !b.len().is_multiple_of(8) {
        return Err(Error::Parameter(format!("ring payload of {} bytes is not a multiple of 8", b.len())));
    }
    Ok(b.chunks_exact(8).map(|c| Z64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Packs `bits`-wide values LSB-first into ⌈n·bits/8⌉ bytes.
pub fn pack_bits(xs: &[u64], bits: u32) -> Vec<u8> {
    assert!((1..=64).contains(&bits));
    let mut out = Vec::with_capacity((xs.len() * bits as usize).div_ceil(8));
    let mut acc: u128 = 0;
    let mut fill = 0u32;
    for &x in xs {
        debug_assert!(bits == 64 || x >> bits == 0);
        acc |= (x as u128) << fill;
        fill += bits;
        while fill >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            fill -= 8;
        }
    }
    if fill > 0 {
        out.push(acc as u8);
    }
    out
}

pub fn unpack_bits(b: &[u8], n: usize, bits: u32) -> Result<Vec<u64>> {
    assert!((1..=64).contains(&bits));
    let need = (n * bits as usize).div_ceil(8);
    if b.len() != need {
        return Err(Error::Parameter(format!("packed payload has {} bytes, expected {need}", b.len())));
    }
    let mask: u128 = (1u128 << bits) - 1;
    let mut out = Vec::with_capacity(n);
    let mut acc: u128 = 0;
    let mut fill = 0u32;
    let mut bytes = b.iter();
    for _ in 0..n {
        while fill < bits {
            acc |= (*bytes.next().unwrap() as u128) << fill;
            fill += 8;
        }
        out.push((acc & mask) as u64);
        acc >>= bits;
        fill -= bits;
    }
    Ok(out)
}

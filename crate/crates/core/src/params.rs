//! Protocol parameters shared by all parties of a session.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{zp, RingParams};

/// Comparison (DReLU) parameters: a window of `key_bits` bits whose lowest
/// `key_frac_bits` bits are fractional, tested in Z_prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DreluParams {
    pub key_bits: u32,
    pub key_frac_bits: u32,
    pub prime: u64,
}

impl Default for DreluParams {
    fn default() -> Self {
        DreluParams { key_bits: 13, key_frac_bits: 2, prime: 16381 }
    }
}

impl DreluParams {
    /// Window of `key_bits` bits covering the full integer range of `ring`
    /// (the remaining bits are fractional), tested modulo the largest prime
    /// below 2^(key_bits+1). 13 bits give the default (2 fractional bits,
    /// p = 16381).
    pub fn for_key_bits(key_bits: u32, ring: &RingParams) -> Result<Self> {
        let int_bits = ring.value_bits - ring.frac_bits;
        if key_bits <= int_bits || key_bits > int_bits + ring.frac_bits || key_bits > 60 {
            return Err(Error::Parameter(format!(
                "key_bits must lie in {}..={} for a ring with {int_bits} integer bits",
                int_bits + 1,
                int_bits + ring.frac_bits
            )));
        }
        let mut prime = (1u64 << (key_bits + 1)) - 1;
        while !zp::is_prime(prime) {
            prime -= 2;
        }
        Ok(DreluParams { key_bits, key_frac_bits: key_bits - int_bits, prime })
    }
}

/// Iteration counts of the approximate nonlinear protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterParams {
    pub softmax_t: u32,
    pub invsqrt_r: u32,
}

impl Default for IterParams {
    fn default() -> Self {
        IterParams { softmax_t: 8, invsqrt_r: 4 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub ring: RingParams,
    pub drelu: DreluParams,
    pub iters: IterParams,
}

/// Bit window and field used by one comparison call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CmpWindow {
    /// Lowest compared bit of the 64-bit share.
    pub offset: u32,
    /// Number of compared bits; inputs must satisfy |x| < 2^(offset + width − 1).
    pub width: u32,
    pub prime: u64,
}

/// Mersenne prime used for full-width comparisons.
pub const WIDE_PRIME: u64 = (1 << 61) - 1;

impl CmpWindow {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.offset + self.width > 63 {
            return Err(Error::Parameter(format!(
                "comparison window offset {} width {} does not fit the ring",
                self.offset, self.width
            )));
        }
        let need = 3u128 * (1u128 << (self.width - 1)) + 4;
        if (self.prime as u128) <= need || !zp::is_prime(self.prime) || self.prime >= 1 << 62 {
            return Err(Error::Parameter(format!(
                "comparison prime {} must be prime and exceed {need} for a {}-bit window",
                self.prime, self.width
            )));
        }
        Ok(())
    }

    /// Exact comparison for every |x| < 2^(value_bits + 1).
    pub fn wide(value_bits: u32) -> Self {
        CmpWindow { offset: 0, width: value_bits + 2, prime: WIDE_PRIME }
    }
}

impl ProtocolParams {
    /// Key width used for GCN training and inference: 12 fractional key bits
    /// keep the ReLU sign exact down to 2^-12, where the 2-bit default leaves
    /// most hidden activations of small graphs in its unresolved band.
    pub const GNN_KEY_BITS: u32 = 23;

    pub fn gnn() -> Self {
        let ring = RingParams::default();
        ProtocolParams {
            ring,
            drelu: DreluParams::for_key_bits(Self::GNN_KEY_BITS, &ring).expect("valid preset"),
            iters: IterParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.ring;
        if r.frac_bits == 0 || r.frac_bits >= r.value_bits || r.value_bits > 60 {
            return Err(Error::Parameter(format!(
                "need 0 < frac_bits < value_bits ≤ 60, got {} / {}",
                r.frac_bits, r.value_bits
            )));
        }
        let d = &self.drelu;
        if d.key_bits > r.value_bits {
            return Err(Error::Parameter(format!("key_bits {} exceeds value_bits {}", d.key_bits, r.value_bits)));
        }
        if d.key_frac_bits > r.frac_bits || d.key_frac_bits >= d.key_bits {
            return Err(Error::Parameter(format!(
                "key_frac_bits {} must be ≤ frac_bits {} and < key_bits {}",
                d.key_frac_bits, r.frac_bits, d.key_bits
            )));
        }
        self.key_window().validate()?;
        if self.iters.softmax_t == 0 || self.iters.invsqrt_r == 0 {
            return Err(Error::Parameter("softmax_t and invsqrt_r must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Window used by ReLU-style sign tests.
    pub fn key_window(&self) -> CmpWindow {
        CmpWindow {
            offset: self.ring.frac_bits - self.drelu.key_frac_bits,
            width: self.drelu.key_bits,
            prime: self.drelu.prime,
        }
    }
}

//! Ring arithmetic over Z_{2^64}, small power-of-two rings and a prime field,
//! plus fixed-point encoding and the share truncation primitives.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring width of the main share ring.
pub const RING_BITS: u32 = 64;

/// Element of Z_{2^64} with wrapping arithmetic.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Z64(pub u64);

impl Z64 {
    pub const ZERO: Z64 = Z64(0);
    pub const ONE: Z64 = Z64(1);

    pub fn from_i64(v: i64) -> Self {
        Z64(v as u64)
    }

    /// Two's-complement signed view.
    pub fn as_i64(self) -> i64 {
        self.0 as i64
    }

    pub fn to_le_bytes(self) -> [u8; 8] {
        self.0.to_le_bytes()
    }

    pub fn from_le_bytes(b: [u8; 8]) -> Self {
        Z64(u64::from_le_bytes(b))
    }

    /// Multiplication by a public signed integer.
    pub fn scale(self, c: i64) -> Self {
        self * Z64::from_i64(c)
    }
}

impl fmt::Debug for Z64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z64({})", self.as_i64())
    }
}

impl Add for Z64 {
    type Output = Z64;
    fn add(self, o: Z64) -> Z64 {
        Z64(self.0.wrapping_add(o.0))
    }
}
impl Sub for Z64 {
    type Output = Z64;
    fn sub(self, o: Z64) -> Z64 {
        Z64(self.0.wrapping_sub(o.0))
    }
}
impl Mul for Z64 {
    type Output = Z64;
    fn mul(self, o: Z64) -> Z64 {
        Z64(self.0.wrapping_mul(o.0))
    }
}
impl Neg for Z64 {
    type Output = Z64;
    fn neg(self) -> Z64 {
        Z64(self.0.wrapping_neg())
    }
}
impl AddAssign for Z64 {
    fn add_assign(&mut self, o: Z64) {
        *self = *self + o;
    }
}
impl SubAssign for Z64 {
    fn sub_assign(&mut self, o: Z64) {
        *self = *self - o;
    }
}
impl MulAssign for Z64 {
    fn mul_assign(&mut self, o: Z64) {
        *self = *self * o;
    }
}
impl std::iter::Sum for Z64 {
    fn sum<I: Iterator<Item = Z64>>(iter: I) -> Z64 {
        iter.fold(Z64::ZERO, |a, b| a + b)
    }
}

/// Modulus tag of a [`RingValue`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulus {
    /// Z_{2^k}, 1 ≤ k ≤ 64.
    Pow2(u32),
    /// Z_p for a prime p < 2^63.
    Prime(u64),
}

impl Modulus {
    fn reduce(self, v: u128) -> u64 {
        match self {
            Modulus::Pow2(64) => v as u64,
            Modulus::Pow2(k) => (v as u64) & ((1u64 << k) - 1),
            Modulus::Prime(p) => (v % p as u128) as u64,
        }
    }

    /// Number of bits needed to carry any element on the wire.
    pub fn wire_bits(self) -> u32 {
        match self {
            Modulus::Pow2(k) => k,
            Modulus::Prime(p) => 64 - (p - 1).leading_zeros(),
        }
    }

    fn contains(self, raw: u64) -> bool {
        match self {
            Modulus::Pow2(64) => true,
            Modulus::Pow2(k) => raw >> k == 0,
            Modulus::Prime(p) => raw < p,
        }
    }

    /// Additive inverse of `raw`.
    fn neg(self, raw: u64) -> u64 {
        match self {
            Modulus::Pow2(_) => self.reduce(raw.wrapping_neg() as u128),
            Modulus::Prime(p) => {
                if raw == 0 {
                    0
                } else {
                    p - raw
                }
            }
        }
    }
}

/// A ring element carrying its modulus. Mixing moduli panics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingValue {
    raw: u64,
    modulus: Modulus,
}

impl RingValue {
    pub fn new(raw: u64, modulus: Modulus) -> Self {
        RingValue { raw: modulus.reduce(raw as u128), modulus }
    }

    /// Build from an already reduced raw value, rejecting out-of-range input.
    pub fn checked(raw: u64, modulus: Modulus) -> Result<Self> {
        if modulus.contains(raw) {
            Ok(RingValue { raw, modulus })
        } else {
            Err(Error::Parameter(format!("raw {raw} not reduced modulo {modulus:?}")))
        }
    }

    pub fn from_i64(v: i64, modulus: Modulus) -> Self {
        let r = RingValue::new(v.unsigned_abs(), modulus);
        if v < 0 {
            -r
        } else {
            r
        }
    }

    pub fn raw(self) -> u64 {
        self.raw
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    fn same(self, o: RingValue) -> Modulus {
        assert_eq!(self.modulus, o.modulus, "mixed ring moduli");
        self.modulus
    }
}

impl Add for RingValue {
    type Output = RingValue;
    fn add(self, o: RingValue) -> RingValue {
        let m = self.same(o);
        RingValue { raw: m.reduce(self.raw as u128 + o.raw as u128), modulus: m }
    }
}
impl Sub for RingValue {
    type Output = RingValue;
    fn sub(self, o: RingValue) -> RingValue {
        self + (-o)
    }
}
impl Mul for RingValue {
    type Output = RingValue;
    fn mul(self, o: RingValue) -> RingValue {
        let m = self.same(o);
        RingValue { raw: m.reduce(self.raw as u128 * o.raw as u128), modulus: m }
    }
}
impl Neg for RingValue {
    type Output = RingValue;
    fn neg(self) -> RingValue {
        RingValue { raw: self.modulus.neg(self.raw), modulus: self.modulus }
    }
}

impl From<Z64> for RingValue {
    fn from(z: Z64) -> Self {
        RingValue { raw: z.0, modulus: Modulus::Pow2(64) }
    }
}

/// Numeric parameters of the share ring and the fixed-point encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingParams {
    /// Fractional bits ℓt.
    pub frac_bits: u32,
    /// Magnitude bits ℓx: plaintext values satisfy |raw| < 2^ℓx.
    pub value_bits: u32,
    /// Prime used by the comparison protocol.
    pub prime: u64,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams { frac_bits: 20, value_bits: 31, prime: 16381 }
    }
}

impl RingParams {
    /// Largest representable magnitude, 2^(ℓx − ℓt).
    pub fn max_abs(&self) -> f64 {
        2f64.powi(self.value_bits as i32 - self.frac_bits as i32)
    }
}

/// Fixed-point number: a ring element scaled by 2^frac_bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPoint {
    pub raw: Z64,
    pub frac_bits: u32,
}

impl FixedPoint {
    pub fn decode(self) -> f64 {
        decode_fixed(self.raw, self.frac_bits)
    }
}

/// Rounds half away from zero.
fn round_away(v: f64) -> f64 {
    v.round()
}

/// Encodes `v` with `frac_bits` fractional bits; rejects |v| ≥ 2^(63 − frac_bits).
pub fn encode_fixed(v: f64, frac_bits: u32) -> Result<FixedPoint> {
    let bound = 2f64.powi(63 - frac_bits as i32);
    if !v.is_finite() || v.abs() >= bound {
        return Err(Error::Range { value: v, bound });
    }
    let scaled = round_away(v * 2f64.powi(frac_bits as i32));
    Ok(FixedPoint { raw: Z64::from_i64(scaled as i64), frac_bits })
}

/// Encodes within the configured ℓx range.
pub fn encode_checked(v: f64, params: &RingParams) -> Result<Z64> {
    let bound = params.max_abs();
    if !v.is_finite() || v.abs() >= bound {
        return Err(Error::Range { value: v, bound });
    }
    Ok(encode_fixed(v, params.frac_bits)?.raw)
}

/// Encoding that panics on overflow; for constants known to be in range.
pub fn enc(v: f64, frac_bits: u32) -> Z64 {
    encode_fixed(v, frac_bits).expect("constant out of fixed-point range").raw
}

pub fn decode_fixed(raw: Z64, frac_bits: u32) -> f64 {
    raw.as_i64() as f64 / 2f64.powi(frac_bits as i32)
}

/// Which additive share a truncation is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncRole {
    Share0,
    Share1,
}

/// Local probabilistic truncation of one additive share by `k` bits.
///
/// Share0 shifts right; share1 computes 2^ℓ − ((2^ℓ − x) >> k). The two results
/// sum to value/2^k up to one unit except with probability about |value|/2^64.
pub fn trunc_prob(x: Z64, k: u32, role: TruncRole) -> Z64 {
    if k == 0 {
        return x;
    }
    match role {
        TruncRole::Share0 => Z64(x.0 >> k),
        TruncRole::Share1 => -Z64((x.0.wrapping_neg()) >> k),
    }
}

/// Drops the lowest `k1` and highest `k2` bits of `x`, returning an element of
/// Z_{2^(ℓ − k1 − k2)} where ℓ is the width of `x`'s power-of-two ring.
pub fn trc_bar(x: RingValue, k1: u32, k2: u32) -> Result<RingValue> {
    let l = match x.modulus() {
        Modulus::Pow2(l) => l,
        Modulus::Prime(_) => return Err(Error::Parameter("trc_bar needs a power-of-two ring".into())),
    };
    if k1 + k2 > l {
        return Err(Error::Parameter(format!("k1 + k2 = {} exceeds ring width {l}", k1 + k2)));
    }
    let width = l - k1 - k2;
    if width == 0 {
        return Err(Error::Parameter("trc_bar leaves an empty bit window".into()));
    }
    let shifted = if k1 >= 64 { 0 } else { x.raw() >> k1 };
    Ok(RingValue::new(shifted, Modulus::Pow2(width)))
}

/// Modular helpers over a prime field (p < 2^62).
pub mod zp {
    pub const MERSENNE61: u64 = (1 << 61) - 1;

    #[inline]
    pub fn add(a: u64, b: u64, p: u64) -> u64 {
        let s = a + b;
        if s >= p {
            s - p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(a: u64, b: u64, p: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + p - b
        }
    }

    #[inline]
    pub fn mul(a: u64, b: u64, p: u64) -> u64 {
        if p < 1 << 32 {
            a * b % p
        } else if p == MERSENNE61 {
            let t = a as u128 * b as u128;
            let r = (t as u64 & MERSENNE61) + (t >> 61) as u64;
            let r = (r & MERSENNE61) + (r >> 61);
            if r >= MERSENNE61 {
                r - MERSENNE61
            } else {
                r
            }
        } else {
            ((a as u128 * b as u128) % p as u128) as u64
        }
    }

    /// Reduces a signed integer into [0, p).
    pub fn from_i128(v: i128, p: u64) -> u64 {
        v.rem_euclid(p as i128) as u64
    }

    fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
        let mut r = 1u64;
        b %= m;
        while e > 0 {
            if e & 1 == 1 {
                r = ((r as u128 * b as u128) % m as u128) as u64;
            }
            b = ((b as u128 * b as u128) % m as u128) as u64;
            e >>= 1;
        }
        r
    }

    /// Deterministic Miller–Rabin for 64-bit inputs.
    pub fn is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        for b in BASES {
            if n.is_multiple_of(b) {
                return n == b;
            }
        }
        let s = (n - 1).trailing_zeros();
        let d = (n - 1) >> s;
        'outer: for a in BASES {
            let mut x = pow_mod(a, d, n);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 1..s {
                x = ((x as u128 * x as u128) % n as u128) as u64;
                if x == n - 1 {
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn mersenne_mul_matches_wide() {
            let xs = [0u64, 1, 2, MERSENNE61 - 1, 1 << 60, 123456789123456789 % MERSENNE61];
            for &a in &xs {
                for &b in &xs {
                    let want = ((a as u128 * b as u128) % MERSENNE61 as u128) as u64;
                    assert_eq!(mul(a, b, MERSENNE61), want);
                }
            }
            assert!(is_prime(16381));
            assert!(!is_prime(16383));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode_fixed(1.5, 20).unwrap().raw, Z64(1572864));
        assert_eq!(encode_fixed(0.0, 20).unwrap().raw, Z64(0));
        assert_eq!(encode_fixed(-0.25, 20).unwrap().raw, Z64(0u64.wrapping_sub(262144)));
    }

    #[test]
    fn encode_rounds_half_away() {
        let half = 0.5 / 2f64.powi(20);
        assert_eq!(encode_fixed(half, 20).unwrap().raw, Z64(1));
        assert_eq!(encode_fixed(-half, 20).unwrap().raw, Z64::from_i64(-1));
    }

    #[test]
    fn encode_range_error() {
        let p = RingParams::default();
        assert!(matches!(encode_checked(2048.0, &p), Err(Error::Range { .. })));
        assert!(encode_checked(2047.9, &p).is_ok());
    }

    #[test]
    fn trc_bar_examples() {
        let x = RingValue::new(0b1101_0110, Modulus::Pow2(8));
        let y = trc_bar(x, 2, 3).unwrap();
        assert_eq!(y, RingValue::new(0b101, Modulus::Pow2(3)));
        let z = RingValue::new(12345, Modulus::Pow2(64));
        assert_eq!(trc_bar(z, 0, 0).unwrap(), z);
        assert!(trc_bar(x, 5, 4).is_err());
    }

    #[test]
    fn trunc_identity_at_zero_shift() {
        for v in [0u64, 1, u64::MAX, 1 << 63] {
            assert_eq!(trunc_prob(Z64(v), 0, TruncRole::Share0), Z64(v));
            assert_eq!(trunc_prob(Z64(v), 0, TruncRole::Share1), Z64(v));
        }
    }

    #[test]
    #[should_panic(expected = "mixed ring moduli")]
    fn mixing_moduli_panics() {
        let _ = RingValue::new(1, Modulus::Pow2(8)) + RingValue::new(1, Modulus::Prime(7));
    }

    #[test]
    fn prime_ring_wraps() {
        let m = Modulus::Prime(16381);
        let a = RingValue::new(16380, m);
        assert_eq!((a + RingValue::new(2, m)).raw(), 1);
        assert_eq!((-RingValue::new(1, m)).raw(), 16380);
        assert_eq!(RingValue::from_i64(-2, m).raw(), 16379);
        assert_eq!(m.wire_bits(), 14);
    }
}

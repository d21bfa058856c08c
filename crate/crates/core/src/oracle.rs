//! Plaintext arithmetic backends. [`FixedArith`] replays the secure protocols'
//! fixed-point schedule with round-to-nearest truncation; [`FloatArith`] is the
//! real-valued reference.

use crate::params::ProtocolParams;
use std::fmt::Debug;

/// Round-to-nearest arithmetic shift.
pub fn round_shift(v: i128, k: u32) -> i128 {
    if k == 0 {
        v
    } else {
        (v + (1i128 << (k - 1))) >> k
    }
}

/// Scalar operations shared by the plaintext GCN in both modes.
pub trait Arith: Sync {
    type T: Copy + Debug + PartialEq + Send + Sync;

    fn from_f64(&self, v: f64) -> Self::T;
    fn to_f64(&self, v: Self::T) -> f64;
    fn zero(&self) -> Self::T;
    fn add(&self, a: Self::T, b: Self::T) -> Self::T;
    fn sub(&self, a: Self::T, b: Self::T) -> Self::T;
    fn mul(&self, a: Self::T, b: Self::T) -> Self::T;
    /// Inner product with a single rounding at the end.
    fn dot(&self, a: &[Self::T], b: &[Self::T]) -> Self::T;
    fn positive(&self, a: Self::T) -> bool;
    fn mul_public(&self, a: Self::T, c: f64) -> Self::T;
    fn inv_sqrt(&self, a: Self::T) -> Self::T;
    fn softmax(&self, row: &[Self::T]) -> Vec<Self::T>;
}

/// Real arithmetic. `softmax_t: None` selects the exact softmax.
#[derive(Clone, Copy, Debug)]
pub struct FloatArith {
    pub softmax_t: Option<u32>,
}

impl FloatArith {
    pub const EXACT: FloatArith = FloatArith { softmax_t: None };
}

/// Exact softmax of one row.
pub fn softmax_exact(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Euler integration of f' = (x − ⟨x, f⟩)·f over [0, 1] in `t` steps.
pub fn softmax_ode(row: &[f64], t: u32) -> Vec<f64> {
    let d = row.len();
    let mut f = vec![1.0 / d as f64; d];
    for _ in 0..t {
        let c: Vec<f64> = row.iter().zip(&f).map(|(x, f)| x * f / t as f64).collect();
        let ip: f64 = c.iter().sum();
        for i in 0..d {
            f[i] += c[i] - ip * f[i];
        }
    }
    f
}

impl Arith for FloatArith {
    type T = f64;

    fn from_f64(&self, v: f64) -> f64 {
        v
    }
    fn to_f64(&self, v: f64) -> f64 {
        v
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
    fn positive(&self, a: f64) -> bool {
        a > 0.0
    }
    fn mul_public(&self, a: f64, c: f64) -> f64 {
        a * c
    }
    fn inv_sqrt(&self, a: f64) -> f64 {
        1.0 / a.sqrt()
    }
    fn softmax(&self, row: &[f64]) -> Vec<f64> {
        match self.softmax_t {
            None => softmax_exact(row),
            Some(t) => softmax_ode(row, t),
        }
    }
}

/// Fixed-point emulation of the secure protocols on raw signed integers.
#[derive(Clone, Copy, Debug)]
pub struct FixedArith {
    pub params: ProtocolParams,
}

impl FixedArith {
    pub fn new(params: ProtocolParams) -> Self {
        FixedArith { params }
    }

    fn fb(&self) -> u32 {
        self.params.ring.frac_bits
    }

    pub fn enc(&self, v: f64) -> i64 {
        (v * (1u64 << self.fb()) as f64).round() as i64
    }

    pub fn mul_k(&self, a: i64, b: i64, k: u32) -> i64 {
        round_shift(a as i128 * b as i128, k) as i64
    }

    /// α with 2^α ≤ x < 2^(α+1), clamped to the protocol's exponent range.
    pub fn pow_bound(&self, x: i64) -> i32 {
        let r = self.params.ring;
        let (k_min, k_max) = (-(r.frac_bits as i32), r.value_bits as i32 - r.frac_bits as i32 - 1);
        let mut a = k_min;
        for k in k_min + 1..=k_max {
            if x >= 1i64 << (k + r.frac_bits as i32) {
                a = k;
            }
        }
        a
    }

    fn pow2(&self, e: i32) -> i64 {
        1i64 << (e + self.fb() as i32)
    }

    /// Quotient a / b for b > 0, same step order as the secure protocol.
    pub fn divide(&self, a: i64, b: i64) -> i64 {
        let fb = self.fb();
        let alpha = self.pow_bound(b);
        let s = self.pow2(-(alpha + 1));
        let bn = self.mul_k(b, s, fb);
        let y0 = self.enc(2.9142) - 2 * bn;
        let one = self.enc(1.0);
        let beta0 = one - self.mul_k(bn, y0, fb);
        let beta1 = self.mul_k(beta0, beta0, fb);
        let y1 = self.mul_k(y0, beta0 + one, fb);
        let y2 = self.mul_k(y1, beta1 + one, fb);
        let q = self.mul_k(a, y2, fb);
        self.mul_k(q, s, fb)
    }

    /// 1/√x for x > 0, same step order as the secure protocol.
    pub fn inv_sqrt_raw(&self, x: i64) -> i64 {
        let fb = self.fb();
        let alpha = self.pow_bound(x);
        let h = (alpha + 1).div_euclid(2);
        let s = self.pow2(-h);
        let s2 = self.pow2(-2 * h);
        let xn = self.mul_k(x, s2, fb);
        let three = self.enc(3.0);
        let mut y = self.enc(1.0);
        for _ in 0..self.params.iters.invsqrt_r {
            let y2 = self.mul_k(y, y, fb);
            let hh = self.mul_k(xn, y2, fb);
            y = self.mul_k(y, three - hh, fb + 1);
        }
        self.mul_k(y, s, fb)
    }

    /// Softmax ODE on one row, same step order as the secure protocol.
    pub fn softmax_raw(&self, row: &[i64]) -> Vec<i64> {
        let fb = self.fb();
        let t = self.params.iters.softmax_t;
        let d = row.len();
        let (xs, k): (Vec<i64>, u32) = if t.is_power_of_two() {
            (row.to_vec(), fb + t.trailing_zeros())
        } else {
            let c = self.enc(1.0 / t as f64);
            (row.iter().map(|&x| self.mul_k(x, c, fb)).collect(), fb)
        };
        let mut f = vec![self.enc(1.0 / d as f64); d];
        for _ in 0..t {
            let c: Vec<i64> = xs.iter().zip(&f).map(|(&x, &f)| self.mul_k(x, f, k)).collect();
            let ip: i64 = c.iter().sum();
            for i in 0..d {
                let b = self.mul_k(ip, f[i], fb);
                f[i] += c[i] - b;
            }
        }
        f
    }
}

impl Arith for FixedArith {
    type T = i64;

    fn from_f64(&self, v: f64) -> i64 {
        self.enc(v)
    }
    fn to_f64(&self, v: i64) -> f64 {
        v as f64 / (1u64 << self.fb()) as f64
    }
    fn zero(&self) -> i64 {
        0
    }
    fn add(&self, a: i64, b: i64) -> i64 {
        a.wrapping_add(b)
    }
    fn sub(&self, a: i64, b: i64) -> i64 {
        a.wrapping_sub(b)
    }
    fn mul(&self, a: i64, b: i64) -> i64 {
        self.mul_k(a, b, self.fb())
    }
    fn dot(&self, a: &[i64], b: &[i64]) -> i64 {
        let s: i128 = a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum();
        round_shift(s, self.fb()) as i64
    }
    fn positive(&self, a: i64) -> bool {
        a > 0
    }
    fn mul_public(&self, a: i64, c: f64) -> i64 {
        self.mul_k(a, self.enc(c), self.fb())
    }
    fn inv_sqrt(&self, a: i64) -> i64 {
        self.inv_sqrt_raw(a)
    }
    fn softmax(&self, row: &[i64]) -> Vec<i64> {
        self.softmax_raw(row)
    }
}

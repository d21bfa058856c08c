#![allow(dead_code)]

use quadmpc::ring::{decode_fixed, encode_fixed};
use quadmpc::sharing::{deal_rep, reconstruct_all};
use quadmpc::{run_session, Party, RepShare, Result, SessionConfig, SessionOutput, Z64};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const FB: u32 = 20;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn enc(v: f64) -> Z64 {
    encode_fixed(v, FB).unwrap().raw
}

pub fn dec(z: Z64) -> f64 {
    decode_fixed(z, FB)
}

pub fn cfg(seed: u64) -> SessionConfig {
    SessionConfig::with_seed(seed)
}

/// Deals `vals` and runs `f` on every party with its own share vector.
pub fn run_on<T: Send>(
    seed: u64,
    vals: &[Z64],
    f: impl Fn(&mut Party, &[RepShare]) -> Result<T> + Sync,
) -> SessionOutput<T> {
    run_on_cfg(&cfg(seed), vals, f)
}

pub fn run_on_cfg<T: Send>(
    c: &SessionConfig,
    vals: &[Z64],
    f: impl Fn(&mut Party, &[RepShare]) -> Result<T> + Sync,
) -> SessionOutput<T> {
    let shares = deal_rep(vals, &mut rng(c.seed ^ 0xdea1));
    run_session(c, |p| f(p, &shares[p.index()])).expect("session failed")
}

/// Reconstructs per-party share vectors, asserting six-pair agreement.
pub fn open(outs: &[Vec<RepShare>]) -> Vec<Z64> {
    let n = outs[0].len();
    (0..n)
        .map(|i| reconstruct_all(&[outs[0][i], outs[1][i], outs[2][i], outs[3][i]]).expect("share structure"))
        .collect()
}

/// Chi-square p-value for uniformity of the top 8 bits.
pub fn chi2_top8(xs: &[u64]) -> f64 {
    let mut bins = [0u64; 256];
    for x in xs {
        bins[(x >> 56) as usize] += 1;
    }
    let e = xs.len() as f64 / 256.0;
    let stat: f64 = bins.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new(255.0).unwrap().cdf(stat)
}

/// Nearest-rounding shift used by the fixed-point oracle.
pub fn round_shift(v: i128, k: u32) -> i128 {
    if k == 0 {
        v
    } else {
        (v + (1i128 << (k - 1))) >> k
    }
}

pub fn ulp_diff(a: Z64, b: Z64) -> u64 {
    (a - b).as_i64().unsigned_abs()
}

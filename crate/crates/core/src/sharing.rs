//! (2,2)-additive and (2,4)-replicated sharing, seeded correlated randomness,
//! reconstruction and local linear operations.
//!
//! Replicated layout for a secret x with randomness r, r01:
//!
//! | party | piece   | prime          |
//! |-------|---------|----------------|
//! | P0    | r       | r − r01        |
//! | P1    | x − r   | x − r + r01    |
//! | P2    | x − r   | r − r01        |
//! | P3    | r       | x − r + r01    |

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::Z64;
use crate::transport::PartyId;

/// ChaCha20 keystream keyed by a 128-bit seed. Every draw advances the
/// counter by one 64-bit word, so holders of the same seed stay aligned.
#[derive(Clone, Debug)]
pub struct SeededPrg {
    rng: ChaCha20Rng,
    counter: u64,
}

impl SeededPrg {
    pub fn new(seed: [u8; 16]) -> Self {
        let mut key = [0u8; 32];
        key[..16].copy_from_slice(&seed);
        SeededPrg { rng: ChaCha20Rng::from_seed(key), counter: 0 }
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    pub fn next_z64(&mut self) -> Z64 {
        Z64(self.next_u64())
    }

    pub fn z64s(&mut self, n: usize) -> Vec<Z64> {
        (0..n).map(|_| self.next_z64()).collect()
    }

    /// Uniform in [0, n) by rejection sampling on full words.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform permutation of 0..n (Fisher–Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}

/// One party's piece of a (2,2)-additive sharing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddShare {
    pub piece: Z64,
    pub owner: PartyId,
}

/// One party's pair of pieces of a (2,4)-replicated sharing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepShare {
    pub piece: Z64,
    pub prime: Z64,
}

impl RepShare {
    pub const ZERO: RepShare = RepShare { piece: Z64::ZERO, prime: Z64::ZERO };

    pub fn new(piece: Z64, prime: Z64) -> Self {
        RepShare { piece, prime }
    }

    /// Multiplication by a public integer.
    pub fn scale(self, c: i64) -> RepShare {
        RepShare { piece: self.piece.scale(c), prime: self.prime.scale(c) }
    }

    /// Multiplication by a public ring element (no truncation).
    pub fn mul_public(self, c: Z64) -> RepShare {
        RepShare { piece: self.piece * c, prime: self.prime * c }
    }

    /// Adds a public constant; the constant lands on the pieces that play the
    /// role of r in the layout (P0 piece and prime, P2 prime, P3 piece).
    pub fn add_public(self, party: PartyId, c: Z64) -> RepShare {
        match party.index() {
            0 => RepShare { piece: self.piece + c, prime: self.prime + c },
            1 => self,
            2 => RepShare { piece: self.piece, prime: self.prime + c },
            _ => RepShare { piece: self.piece + c, prime: self.prime },
        }
    }

    /// Sharing of a public constant as held by `party`.
    pub fn public(party: PartyId, c: Z64) -> RepShare {
        RepShare::ZERO.add_public(party, c)
    }
}

impl std::ops::Add for RepShare {
    type Output = RepShare;
    fn add(self, o: RepShare) -> RepShare {
        RepShare { piece: self.piece + o.piece, prime: self.prime + o.prime }
    }
}
impl std::ops::Sub for RepShare {
    type Output = RepShare;
    fn sub(self, o: RepShare) -> RepShare {
        RepShare { piece: self.piece - o.piece, prime: self.prime - o.prime }
    }
}
impl std::ops::Neg for RepShare {
    type Output = RepShare;
    fn neg(self) -> RepShare {
        RepShare { piece: -self.piece, prime: -self.prime }
    }
}
impl std::ops::AddAssign for RepShare {
    fn add_assign(&mut self, o: RepShare) {
        *self = *self + o;
    }
}
impl std::ops::SubAssign for RepShare {
    fn sub_assign(&mut self, o: RepShare) {
        *self = *self - o;
    }
}
impl std::iter::Sum for RepShare {
    fn sum<I: Iterator<Item = RepShare>>(iter: I) -> RepShare {
        iter.fold(RepShare::ZERO, |a, b| a + b)
    }
}

/// Additive sharing with an explicit mask `r`: ([x]_0, [x]_1) = (r, x − r).
pub fn share_add_with(x: Z64, r: Z64) -> [AddShare; 2] {
    [AddShare { piece: r, owner: PartyId::P0 }, AddShare { piece: x - r, owner: PartyId::P1 }]
}

pub fn share_add<R: Rng + ?Sized>(x: Z64, rng: &mut R) -> [AddShare; 2] {
    share_add_with(x, Z64(rng.gen()))
}

/// Replicated sharing with explicit randomness.
pub fn share_rep_with(x: Z64, r: Z64, r01: Z64) -> [RepShare; 4] {
    let a = r;
    let b = x - r;
    [RepShare::new(a, a - r01), RepShare::new(b, b + r01), RepShare::new(b, a - r01), RepShare::new(a, b + r01)]
}

pub fn share_rep<R: Rng + ?Sized>(x: Z64, rng: &mut R) -> [RepShare; 4] {
    share_rep_with(x, Z64(rng.gen()), Z64(rng.gen()))
}

/// Shares every element of `xs`; returns one vector per party.
pub fn deal_rep<R: Rng + ?Sized>(xs: &[Z64], rng: &mut R) -> [Vec<RepShare>; 4] {
    let mut out: [Vec<RepShare>; 4] = Default::default();
    for &x in xs {
        let s = share_rep(x, rng);
        for (o, v) in out.iter_mut().zip(s) {
            o.push(v);
        }
    }
    out
}

/// Which element a pair of parties combine to reconstruct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairRule {
    Pieces,
    Primes,
}

pub fn pair_rule(a: PartyId, b: PartyId) -> Result<PairRule> {
    let (lo, hi) = if a.index() < b.index() { (a.index(), b.index()) } else { (b.index(), a.index()) };
    match (lo, hi) {
        (0, 3) | (1, 2) => Ok(PairRule::Primes),
        (x, y) if x != y => Ok(PairRule::Pieces),
        _ => Err(Error::Parameter(format!("reconstruction needs two distinct parties, got {a} twice"))),
    }
}

/// Reconstructs x from the shares of two distinct parties.
pub fn reconstruct_pair(a: PartyId, sa: RepShare, b: PartyId, sb: RepShare) -> Result<Z64> {
    Ok(match pair_rule(a, b)? {
        PairRule::Pieces => sa.piece + sb.piece,
        PairRule::Primes => sa.prime + sb.prime,
    })
}

pub fn reconstruct_add(s: &[AddShare; 2]) -> Z64 {
    s[0].piece + s[1].piece
}

/// Checks the full Table-3 layout and that all six pairs agree; returns x.
pub fn reconstruct_all(s: &[RepShare; 4]) -> Result<Z64> {
    if s[2].piece != s[1].piece || s[3].piece != s[0].piece || s[2].prime != s[0].prime || s[3].prime != s[1].prime {
        return Err(Error::Integrity(format!("replicated layout violated: {s:?}")));
    }
    let x = s[0].piece + s[1].piece;
    for i in 0..4 {
        for j in i + 1..4 {
            let y = reconstruct_pair(PartyId::ALL[i], s[i], PartyId::ALL[j], s[j])?;
            if y != x {
                return Err(Error::Integrity(format!("pair P{i}-P{j} reconstructs {y:?}, P0-P1 gives {x:?}")));
            }
        }
    }
    Ok(x)
}

/// Reconstructs element-wise from four per-party vectors.
pub fn reconstruct_vec(parts: &[Vec<RepShare>; 4]) -> Result<Vec<Z64>> {
    let n = parts[0].len();
    if parts.iter().any(|p| p.len() != n) {
        return Err(Error::Shape("per-party share vectors differ in length".into()));
    }
    (0..n).map(|i| reconstruct_all(&[parts[0][i], parts[1][i], parts[2][i], parts[3][i]])).collect()
}

/// Non-interactive replicated → additive conversion; `r01p` is the shared
/// re-randomizer drawn from seed01.
pub fn convert_rep_to_add(party: PartyId, share: RepShare, r01p: Z64) -> Result<AddShare> {
    match party.index() {
        0 => Ok(AddShare { piece: share.piece + r01p, owner: party }),
        1 => Ok(AddShare { piece: share.piece - r01p, owner: party }),
        _ => Err(Error::Role { expected: "P0 or P1", actual: party }),
    }
}

//! Per-party execution context: identity, correlated randomness, network view.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::params::ProtocolParams;
use crate::ring::Z64;
use crate::sharing::SeededPrg;
use crate::transport::{CommStats, Net, PartyId, TranscriptEntry};

/// Seeds handed to the parties by the orchestrator before a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSeeds {
    pub seed01: [u8; 16],
    pub seed23: [u8; 16],
    pub private: [[u8; 16]; 4],
    /// Known to all four parties; keys the re-randomization of truncated halves.
    pub common: [u8; 16],
}

impl SessionSeeds {
    /// Derives all session seeds from one master value.
    pub fn derive(master: u64) -> Self {
        use rand::RngCore;
        let mut rng = ChaCha20Rng::seed_from_u64(master);
        let mut next = || {
            let mut b = [0u8; 16];
            rng.fill_bytes(&mut b);
            b
        };
        let (seed01, seed23) = (next(), next());
        let private = [next(), next(), next(), next()];
        SessionSeeds { seed01, seed23, private, common: next() }
    }
}

pub struct Party {
    id: PartyId,
    params: ProtocolParams,
    net: Net,
    pair_prg: SeededPrg,
    common_prg: SeededPrg,
    private: ChaCha20Rng,
    tags: Vec<u8>,
    tester_turn: u64,
}

impl Party {
    pub fn new(id: PartyId, params: ProtocolParams, seeds: &SessionSeeds, net: Net) -> Self {
        let pair = if id.index() < 2 { seeds.seed01 } else { seeds.seed23 };
        let mut key = [0u8; 32];
        key[..16].copy_from_slice(&seeds.private[id.index()]);
        Party {
            id,
            params,
            net,
            pair_prg: SeededPrg::new(pair),
            common_prg: SeededPrg::new(seeds.common),
            private: ChaCha20Rng::from_seed(key),
            tags: Vec::new(),
            tester_turn: 0,
        }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn index(&self) -> usize {
        self.id.index()
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn frac_bits(&self) -> u32 {
        self.params.ring.frac_bits
    }

    /// Generator keyed by seed01 on P0/P1 and seed23 on P2/P3.
    pub fn pair_prg(&mut self) -> &mut SeededPrg {
        &mut self.pair_prg
    }

    /// Generator keyed by the seed all four parties share.
    pub fn common_prg(&mut self) -> &mut SeededPrg {
        &mut self.common_prg
    }

    pub fn private_rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.private
    }

    /// Delegate for the next zero test: alternates P2, P3 across calls.
    pub fn next_tester(&mut self) -> PartyId {
        let t = if self.tester_turn.is_multiple_of(2) { PartyId::P2 } else { PartyId::P3 };
        self.tester_turn += 1;
        t
    }

    /// Runs `f` under `tag`; nested scopes keep the outermost tag.
    pub fn with_tag<R>(&mut self, tag: u8, f: impl FnOnce(&mut Party) -> Result<R>) -> Result<R> {
        self.tags.push(tag);
        let r = f(self);
        self.tags.pop();
        r
    }

    pub fn current_tag(&self) -> u8 {
        self.tags.first().copied().unwrap_or(0)
    }

    pub fn require(&self, allowed: &[PartyId], what: &'static str) -> Result<()> {
        if allowed.contains(&self.id) {
            Ok(())
        } else {
            Err(Error::Role { expected: what, actual: self.id })
        }
    }

    pub fn send_ring(&mut self, to: PartyId, xs: &[Z64]) -> Result<()> {
        let tag = self.current_tag();
        self.net.send(to, tag, codec::encode_ring(xs), xs.len() as u64 * 64)
    }

    pub fn recv_ring(&mut self, from: PartyId, n: usize) -> Result<Vec<Z64>> {
        let tag = self.current_tag();
        let b = self.net.recv(from, tag)?;
        let v = codec::decode_ring(&b)?;
        if v.len() != n {
            return Err(Error::Desync {
                party: self.id,
                from,
                msg: format!("expected {n} ring elements, got {}", v.len()),
            });
        }
        Ok(v)
    }

    /// Sends field elements packed at `bits` bits each.
    pub fn send_packed(&mut self, to: PartyId, xs: &[u64], bits: u32) -> Result<()> {
        let tag = self.current_tag();
        self.net.send(to, tag, codec::pack_bits(xs, bits), xs.len() as u64 * bits as u64)
    }

    pub fn recv_packed(&mut self, from: PartyId, n: usize, bits: u32) -> Result<Vec<u64>> {
        let tag = self.current_tag();
        let b = self.net.recv(from, tag)?;
        codec::unpack_bits(&b, n, bits).map_err(|e| Error::Desync { party: self.id, from, msg: e.to_string() })
    }

    /// Virtual time in seconds.
    pub fn clock(&self) -> f64 {
        self.net.clock()
    }

    pub fn stats(&self) -> CommStats {
        self.net.stats()
    }

    pub fn take_transcript(&mut self) -> Vec<TranscriptEntry> {
        self.net.take_transcript()
    }
}

//! Four-party message passing with per-tag byte, message and phase accounting.

mod net;
mod sim;
mod tcp;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use net::{Net, TranscriptEntry};
pub use sim::sim_links;
pub use tcp::{tcp_connect, tcp_links_local};

/// Party index in {0, 1, 2, 3}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PartyId(u8);

impl PartyId {
    pub const P0: PartyId = PartyId(0);
    pub const P1: PartyId = PartyId(1);
    pub const P2: PartyId = PartyId(2);
    pub const P3: PartyId = PartyId(3);
    pub const ALL: [PartyId; 4] = [PartyId::P0, PartyId::P1, PartyId::P2, PartyId::P3];

    pub fn new(i: u8) -> Result<Self> {
        if i < 4 {
            Ok(PartyId(i))
        } else {
            Err(Error::Parameter(format!("party index {i} out of range 0..4")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for PartyId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        PartyId::new(v)
    }
}

impl From<PartyId> for u8 {
    fn from(p: PartyId) -> u8 {
        p.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Protocol tags carried in every envelope header.
pub mod tag {
    pub const MULT: u8 = 1;
    pub const HAD: u8 = 2;
    pub const MATMULT: u8 = 3;
    pub const DRELU: u8 = 4;
    pub const RELU: u8 = 5;
    pub const SOFTMAX: u8 = 6;
    pub const POW: u8 = 7;
    pub const DIV: u8 = 8;
    pub const INVSQRT: u8 = 9;
    pub const AA: u8 = 10;
    pub const AA_SYNC: u8 = 11;
    pub const SHARE: u8 = 12;
    pub const REVEAL: u8 = 13;
    pub const TRUNC: u8 = 14;

    pub fn name(t: u8) -> &'static str {
        match t {
            MULT => "mult",
            HAD => "hadamard",
            MATMULT => "matmult",
            DRELU => "drelu",
            RELU => "relu",
            SOFTMAX => "softmax",
            POW => "pow",
            DIV => "div",
            INVSQRT => "invsqrt",
            AA => "aa",
            AA_SYNC => "aa_sync",
            SHARE => "share",
            REVEAL => "reveal",
            TRUNC => "trunc",
            _ => "unknown",
        }
    }
}

/// Envelope header: tag (1 byte), sequence (4 bytes LE), payload length (4 bytes LE).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub tag: u8,
    pub seq: u32,
    pub len: u32,
}

impl Header {
    pub const SIZE: usize = 9;

    pub fn encode(&self) -> [u8; Self::SIZE] {
        let mut b = [0u8; Self::SIZE];
        b[0] = self.tag;
        b[1..5].copy_from_slice(&self.seq.to_le_bytes());
        b[5..9].copy_from_slice(&self.len.to_le_bytes());
        b
    }

    pub fn decode(b: &[u8; Self::SIZE]) -> Header {
        Header {
            tag: b[0],
            seq: u32::from_le_bytes(b[1..5].try_into().unwrap()),
            len: u32::from_le_bytes(b[5..9].try_into().unwrap()),
        }
    }
}

/// Simulation metadata that travels beside an envelope in the in-process
/// backend only (never on the wire).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimMeta {
    pub arrival: f64,
    pub phase: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub tag: u8,
    pub seq: u32,
    pub payload: Vec<u8>,
    pub meta: SimMeta,
}

impl Envelope {
    pub fn header(&self) -> Header {
        Header { tag: self.tag, seq: self.seq, len: self.payload.len() as u32 }
    }
}

/// Symmetric link characteristics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetProfile {
    pub latency_ms: f64,
    pub bandwidth_bits_per_s: f64,
}

impl NetProfile {
    pub fn lan() -> Self {
        NetProfile { latency_ms: 0.3, bandwidth_bits_per_s: 10e9 }
    }

    pub fn wan() -> Self {
        NetProfile { latency_ms: 40.0, bandwidth_bits_per_s: 400e6 }
    }

    /// Zero latency, unlimited bandwidth.
    pub fn ideal() -> Self {
        NetProfile { latency_ms: 0.0, bandwidth_bits_per_s: f64::INFINITY }
    }

    pub fn custom(latency_ms: f64, bandwidth_bits_per_s: f64) -> Result<Self> {
        if !(latency_ms >= 0.0) || !(bandwidth_bits_per_s > 0.0) {
            return Err(Error::Parameter(format!(
                "net profile needs latency ≥ 0 and bandwidth > 0, got {latency_ms} ms / {bandwidth_bits_per_s} bit/s"
            )));
        }
        Ok(NetProfile { latency_ms, bandwidth_bits_per_s })
    }

    /// `lan`, `wan`, `ideal` or `custom:<latency_ms>:<bits_per_s>`.
    pub fn by_name(name: &str) -> Result<Self> {
        let bad = || {
            Error::Parameter(format!(
                "unknown net profile {name:?} (expected lan, wan, ideal or custom:<latency_ms>:<bits_per_s>)"
            ))
        };
        match name {
            "lan" => Ok(Self::lan()),
            "wan" => Ok(Self::wan()),
            "ideal" => Ok(Self::ideal()),
            other => {
                let rest = other.strip_prefix("custom:").ok_or_else(bad)?;
                let (lat, bw) = rest.split_once(':').ok_or_else(bad)?;
                let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
                let bw: f64 = bw.trim().parse().map_err(|_| bad())?;
                Self::custom(lat, bw)
            }
        }
    }

    pub fn transfer_secs(&self, bytes: usize) -> f64 {
        if self.bandwidth_bits_per_s.is_infinite() {
            0.0
        } else {
            bytes as f64 * 8.0 / self.bandwidth_bits_per_s
        }
    }
}

/// Counters for one (party, tag) cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagStats {
    pub payload_bits: u64,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub messages: u64,
}

impl TagStats {
    pub fn wire_bytes(&self) -> u64 {
        self.payload_bytes + self.header_bytes
    }

    fn absorb(&mut self, o: &TagStats) {
        self.payload_bits += o.payload_bits;
        self.payload_bytes += o.payload_bytes;
        self.header_bytes += o.header_bytes;
        self.messages += o.messages;
    }
}

/// Communication statistics for a session or a set of parties.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommStats {
    /// Sent traffic keyed by (sender, tag).
    pub sent: BTreeMap<(u8, u8), TagStats>,
    /// Distinct causal phases observed per tag.
    pub phases: BTreeMap<u8, BTreeSet<u32>>,
    /// Bytes seen by the channel layer, headers included.
    pub channel_bytes: u64,
    /// Deepest causal phase reached by any party.
    pub max_depth: u32,
}

impl CommStats {
    pub fn merge(&mut self, o: &CommStats) {
        for (k, v) in &o.sent {
            self.sent.entry(*k).or_default().absorb(v);
        }
        for (t, s) in &o.phases {
            self.phases.entry(*t).or_default().extend(s.iter().copied());
        }
        self.channel_bytes += o.channel_bytes;
        self.max_depth = self.max_depth.max(o.max_depth);
    }

    pub fn by_tag(&self, tag: u8) -> TagStats {
        let mut t = TagStats::default();
        for ((_, tg), v) in &self.sent {
            if *tg == tag {
                t.absorb(v);
            }
        }
        t
    }

    pub fn by_party(&self, party: PartyId) -> TagStats {
        let mut t = TagStats::default();
        for ((p, _), v) in &self.sent {
            if *p as usize == party.index() {
                t.absorb(v);
            }
        }
        t
    }

    pub fn total(&self) -> TagStats {
        let mut t = TagStats::default();
        for v in self.sent.values() {
            t.absorb(v);
        }
        t
    }

    pub fn tags(&self) -> BTreeSet<u8> {
        self.sent.keys().map(|(_, t)| *t).collect()
    }

    pub fn phase_count(&self, tag: u8) -> usize {
        self.phases.get(&tag).map_or(0, |s| s.len())
    }

    pub fn payload_bits(&self, tag: u8) -> u64 {
        self.by_tag(tag).payload_bits
    }

    pub fn is_empty(&self) -> bool {
        self.sent.is_empty() && self.channel_bytes == 0
    }
}

/// Raw message mover between one party and its three peers.
pub trait Link: Send {
    fn send(&mut self, to: PartyId, env: Envelope) -> Result<()>;
    /// Next envelope from `from`; `None` on timeout.
    fn recv(&mut self, from: PartyId, timeout: std::time::Duration) -> Result<Option<Envelope>>;
    /// Bytes pushed into the channel layer so far (headers included).
    fn channel_bytes(&self) -> u64;
    /// Whether the backend carries simulation metadata.
    fn simulated(&self) -> bool;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip() {
        let h = Header { tag: tag::AA, seq: 0x01020304, len: 1648 };
        let b = h.encode();
        assert_eq!(b[0], 10);
        assert_eq!(&b[1..5], &[4, 3, 2, 1]);
        assert_eq!(Header::decode(&b), h);
    }

    #[test]
    fn profiles() {
        assert_eq!(NetProfile::lan().latency_ms, 0.3);
        assert_eq!(NetProfile::wan().bandwidth_bits_per_s, 400e6);
        assert!(NetProfile::custom(-1.0, 1.0).is_err());
        assert!(NetProfile::by_name("moon").is_err());
        assert_eq!(NetProfile::by_name("custom:5:1e8").unwrap(), NetProfile::custom(5.0, 1e8).unwrap());
        assert!(NetProfile::by_name("custom:5").is_err());
        assert!(NetProfile::by_name("custom:5:0").is_err());
    }

    #[test]
    fn party_ids() {
        assert!(PartyId::new(4).is_err());
        assert_eq!(PartyId::P3.to_string(), "P3");
    }
}

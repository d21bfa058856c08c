use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{CommStats, Envelope, Header, Link, NetProfile, PartyId, SimMeta};
use crate::error::{Error, Result};

/// One sent message as recorded for transcript comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub from: PartyId,
    pub to: PartyId,
    pub tag: u8,
    pub seq: u32,
    pub payload: Vec<u8>,
}

/// A party's view of the network: sequencing, accounting, virtual clock and
/// causal-phase tracking on top of a raw [`Link`].
pub struct Net {
    me: PartyId,
    link: Box<dyn Link>,
    profile: NetProfile,
    watchdog: Duration,
    clock: f64,
    depth: u32,
    link_free: [f64; 4],
    seq_out: HashMap<(usize, u8), u32>,
    seq_in: HashMap<(usize, u8), u32>,
    pending: [VecDeque<Envelope>; 4],
    stats: CommStats,
    transcript: Option<Vec<TranscriptEntry>>,
}

impl Net {
    pub fn new(me: PartyId, link: Box<dyn Link>, profile: NetProfile, watchdog: Duration, record: bool) -> Self {
        Net {
            me,
            link,
            profile,
            watchdog,
            clock: 0.0,
            depth: 0,
            link_free: [0.0; 4],
            seq_out: HashMap::new(),
            seq_in: HashMap::new(),
            pending: Default::default(),
            stats: CommStats::default(),
            transcript: record.then(Vec::new),
        }
    }

    pub fn me(&self) -> PartyId {
        self.me
    }

    /// Virtual time in seconds (simulated backend only).
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Sends `payload` to `to`; `payload_bits` is the information content used
    /// for complexity accounting (bit-packed payloads round up to bytes).
    pub fn send(&mut self, to: PartyId, tag: u8, payload: Vec<u8>, payload_bits: u64) -> Result<()> {
        if to == self.me {
            return Err(Error::Parameter(format!("{} tried to send to itself", self.me)));
        }
        let seq = {
            let s = self.seq_out.entry((to.index(), tag)).or_insert(0);
            let v = *s;
            *s += 1;
            v
        };
        let wire = Header::SIZE + payload.len();
        let start = self.clock.max(self.link_free[to.index()]);
        let done = start + self.profile.transfer_secs(wire);
        self.link_free[to.index()] = done;
        let meta = SimMeta { arrival: done + self.profile.latency_ms / 1000.0, phase: self.depth + 1 };

        let cell = self.stats.sent.entry((self.me.index() as u8, tag)).or_default();
        cell.payload_bits += payload_bits;
        cell.payload_bytes += payload.len() as u64;
        cell.header_bytes += Header::SIZE as u64;
        cell.messages += 1;
        if self.link.simulated() {
            self.stats.phases.entry(tag).or_default().insert(meta.phase);
        }
        if let Some(t) = self.transcript.as_mut() {
            t.push(TranscriptEntry { from: self.me, to, tag, seq, payload: payload.clone() });
        }
        self.link.send(to, Envelope { tag, seq, payload, meta })
    }

    /// Receives the next envelope with `tag` from `from`.
    pub fn recv(&mut self, from: PartyId, tag: u8) -> Result<Vec<u8>> {
        let started = Instant::now();
        let env = loop {
            if let Some(pos) = self.pending[from.index()].iter().position(|e| e.tag == tag) {
                break self.pending[from.index()].remove(pos).unwrap();
            }
            let left = self.watchdog.saturating_sub(started.elapsed());
            match self.link.recv(from, left)? {
                Some(e) if e.tag == tag => break e,
                Some(e) => self.pending[from.index()].push_back(e),
                None => {
                    return Err(Error::Watchdog { party: self.me, from, tag, secs: started.elapsed().as_secs_f64() })
                }
            }
        };
        let expect = self.seq_in.entry((from.index(), tag)).or_insert(0);
        if env.seq != *expect {
            return Err(Error::Desync {
                party: self.me,
                from,
                msg: format!("tag {tag}: expected sequence {expect}, got {}", env.seq),
            });
        }
        *expect += 1;
        if self.link.simulated() {
            self.clock = self.clock.max(env.meta.arrival);
            self.depth = self.depth.max(env.meta.phase);
        }
        Ok(env.payload)
    }

    /// Statistics gathered so far, including channel-layer byte count.
    pub fn stats(&self) -> CommStats {
        let mut s = self.stats.clone();
        s.channel_bytes = self.link.channel_bytes();
        s.max_depth = self.depth;
        s
    }

    pub fn take_transcript(&mut self) -> Vec<TranscriptEntry> {
        self.transcript.take().unwrap_or_default()
    }
}

//! JSON-lines metrics. Every field whose name contains `wall` is wall-clock
//! time; everything else is a deterministic function of the seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use quadmpc::transport::TagStats;
use quadmpc::{tag, CommStats};

/// Traffic of one protocol tag during one segment of a run, summed over parties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRecord {
    pub payload_bits: u64,
    pub payload_bytes: u64,
    pub wire_bytes: u64,
    pub messages: u64,
    pub phases: u64,
}

pub type TagTable = BTreeMap<String, TagRecord>;

pub fn total_of(tags: &TagTable) -> TagRecord {
    tags.values().fold(TagRecord::default(), |a, t| TagRecord {
        payload_bits: a.payload_bits + t.payload_bits,
        payload_bytes: a.payload_bytes + t.payload_bytes,
        wire_bytes: a.wire_bytes + t.wire_bytes,
        messages: a.messages + t.messages,
        phases: a.phases + t.phases,
    })
}

/// One party's cumulative counters at a point of its program.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub clock: f64,
    pub wall_secs: f64,
    pub sent: BTreeMap<u8, TagStats>,
    pub phases: BTreeMap<u8, BTreeSet<u32>>,
}

impl Snapshot {
    pub fn of(stats: &CommStats, clock: f64, wall_secs: f64) -> Self {
        let mut sent: BTreeMap<u8, TagStats> = BTreeMap::new();
        for ((_, t), v) in &stats.sent {
            let e = sent.entry(*t).or_default();
            e.payload_bits += v.payload_bits;
            e.payload_bytes += v.payload_bytes;
            e.header_bytes += v.header_bytes;
            e.messages += v.messages;
        }
        Snapshot { clock, wall_secs, sent, phases: stats.phases.clone() }
    }
}

/// Per-tag traffic between snapshots `from` and `to`, over all parties.
pub fn segment(parties: &[Vec<Snapshot>], from: usize, to: usize) -> TagTable {
    let mut tags: BTreeSet<u8> = BTreeSet::new();
    for p in parties {
        tags.extend(p[to].sent.keys());
    }
    let mut out = TagTable::new();
    for t in tags {
        let mut r = TagRecord::default();
        let mut phases = BTreeSet::new();
        for p in parties {
            let a = p[from].sent.get(&t).copied().unwrap_or_default();
            let b = p[to].sent.get(&t).copied().unwrap_or_default();
            r.payload_bits += b.payload_bits - a.payload_bits;
            r.payload_bytes += b.payload_bytes - a.payload_bytes;
            r.wire_bytes += b.wire_bytes() - a.wire_bytes();
            r.messages += b.messages - a.messages;
            let empty = BTreeSet::new();
            let before = p[from].phases.get(&t).unwrap_or(&empty);
            phases.extend(p[to].phases.get(&t).unwrap_or(&empty).difference(before).copied());
        }
        r.phases = phases.len() as u64;
        if r.messages > 0 {
            out.insert(tag::name(t).to_string(), r);
        }
    }
    out
}

fn span(parties: &[Vec<Snapshot>], from: usize, to: usize, f: impl Fn(&Snapshot) -> f64) -> f64 {
    let at = |i: usize| parties.iter().map(|p| f(&p[i])).fold(0.0, f64::max);
    at(to) - at(from)
}

/// Growth of the latest party clock between two snapshots.
pub fn virtual_span(parties: &[Vec<Snapshot>], from: usize, to: usize) -> f64 {
    span(parties, from, to, |s| s.clock)
}

pub fn wall_span(parties: &[Vec<Snapshot>], from: usize, to: usize) -> f64 {
    span(parties, from, to, |s| s.wall_secs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub command: String,
    pub mode: String,
    pub dataset: String,
    pub nodes: usize,
    pub edges: usize,
    pub feature_dim: usize,
    pub classes: usize,
    pub max_degree: usize,
    pub padded_entries: usize,
    pub graph_hash: String,
    pub net: String,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub frac_bits: u32,
    pub key_bits: u32,
    pub prime: u64,
    pub softmax_t: u32,
    pub invsqrt_r: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub train: Option<f64>,
    pub val: Option<f64>,
    pub test: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub name: String,
    pub virtual_secs: f64,
    pub wall_secs: f64,
    pub tags: TagTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Training-mask cross-entropy of the forward pass taken this epoch.
    pub loss: Option<f64>,
    pub accuracy: Accuracy,
    pub virtual_secs: f64,
    pub wall_secs: f64,
    pub tags: TagTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub accuracy: Accuracy,
    pub oracle_accuracy: Accuracy,
    /// Fraction of nodes whose predicted class matches the fixed-point oracle.
    pub oracle_agreement: f64,
    pub loss_curve: Vec<f64>,
    pub oracle_loss_curve: Vec<f64>,
    pub virtual_secs: f64,
    pub wall_secs: f64,
    pub payload_bytes: u64,
    pub wire_bytes: u64,
    pub tags: TagTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricsRecord {
    Start(StartRecord),
    Phase(PhaseRecord),
    Epoch(EpochRecord),
    Report(ReportRecord),
}

pub fn write_jsonl(w: &mut impl Write, records: &[MetricsRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// The metrics schema shipped with the binary.
pub const SCHEMA: &str = include_str!("../schema/metrics.schema.json");

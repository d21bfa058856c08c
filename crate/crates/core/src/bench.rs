//! Per-protocol measurements on random inputs: virtual time under a network
//! profile, payload bytes and causal phases.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProtocolParams;
use crate::protocols::array_access::{array_access, array_access_sync_baseline, SharedArray};
use crate::protocols::linear::{hadamard, matmult, mult_vec};
use crate::protocols::nonlinear::{divide, drelu, inv_sqrt, relu, softmax};
use crate::ring::{enc, Z64};
use crate::session::{run_session, SessionConfig};
use crate::sharing::{deal_rep, RepShare};
use crate::tensor::SecureTensor;
use crate::transport::{tag, CommStats, NetProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Mult,
    Hadamard,
    Matmult,
    Drelu,
    Relu,
    Div,
    Invsqrt,
    Softmax,
    Aa,
}

impl Protocol {
    pub const ALL: [Protocol; 9] = [
        Protocol::Mult,
        Protocol::Hadamard,
        Protocol::Matmult,
        Protocol::Drelu,
        Protocol::Relu,
        Protocol::Div,
        Protocol::Invsqrt,
        Protocol::Softmax,
        Protocol::Aa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Mult => "mult",
            Protocol::Hadamard => "hadamard",
            Protocol::Matmult => "matmult",
            Protocol::Drelu => "drelu",
            Protocol::Relu => "relu",
            Protocol::Div => "div",
            Protocol::Invsqrt => "invsqrt",
            Protocol::Softmax => "softmax",
            Protocol::Aa => "aa",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Protocol::Mult => tag::MULT,
            Protocol::Hadamard => tag::HAD,
            Protocol::Matmult => tag::MATMULT,
            Protocol::Drelu => tag::DRELU,
            Protocol::Relu => tag::RELU,
            Protocol::Div => tag::DIV,
            Protocol::Invsqrt => tag::INVSQRT,
            Protocol::Softmax => tag::SOFTMAX,
            Protocol::Aa => tag::AA,
        }
    }

    /// Payload bits listed in the reference complexity table, where one is
    /// given: 4ℓ per product, 4ℓ per matrix-product output, (6+2t)ℓ per
    /// access and 12ntℓ for softmax over n elements.
    pub fn reference_bits(self, size: usize, params: &ProtocolParams) -> Option<u64> {
        let l = 64u64;
        let n = size as u64;
        match self {
            Protocol::Mult | Protocol::Hadamard => Some(4 * n * l),
            Protocol::Matmult => Some(4 * n * n * l),
            Protocol::Aa => Some((6 + 2 * n) * l),
            Protocol::Softmax => Some(12 * n * params.iters.softmax_t as u64 * l),
            _ => None,
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Protocol::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Protocol::ALL.iter().map(|p| p.name()).collect();
            Error::Parameter(format!("unknown protocol {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured configuration. For `aa`, `sync_*` holds the serialized
/// baseline on the same inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub protocol: Protocol,
    pub size: usize,
    pub profile: String,
    pub virtual_secs: f64,
    pub wall_secs: f64,
    pub payload_bits: u64,
    pub payload_bytes: u64,
    pub wire_bytes: u64,
    pub phases: usize,
    pub reference_bits: Option<u64>,
    pub sync_virtual_secs: Option<f64>,
    pub sync_payload_bytes: Option<u64>,
    pub sync_phases: Option<usize>,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str = "protocol,size,profile,virtual_secs,wall_secs,payload_bits,payload_bytes,wire_bytes,phases,reference_bits,sync_virtual_secs,sync_payload_bytes,sync_phases";

    pub fn csv(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{:.6},{:.6},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.size,
            self.profile,
            self.virtual_secs,
            self.wall_secs,
            self.payload_bits,
            self.payload_bytes,
            self.wire_bytes,
            self.phases,
            opt(self.reference_bits),
            opt(self.sync_virtual_secs.map(|v| format!("{v:.6}"))),
            opt(self.sync_payload_bytes),
            opt(self.sync_phases)
        )
    }
}

struct Measured {
    stats: CommStats,
    virtual_secs: f64,
    wall_secs: f64,
}

fn measure(cfg: &SessionConfig, protocol: Protocol, size: usize, sync: bool) -> Result<Measured> {
    let fb = cfg.params.ring.frac_bits;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0xbe7c);
    let n = match protocol {
        Protocol::Matmult => 2 * size * size,
        Protocol::Aa => size + 1,
        Protocol::Div => 2 * size,
        _ => size,
    };
    let vals: Vec<Z64> = (0..n)
        .map(|i| match protocol {
            Protocol::Invsqrt => enc(rng.gen_range(0.01..100.0), fb),
            Protocol::Div if i >= size => enc(rng.gen_range(0.01..100.0), fb),
            Protocol::Aa if i == size => Z64(rng.gen_range(0..size as u64)),
            _ => enc(rng.gen_range(-4.0..4.0), fb),
        })
        .collect();
    let shares = deal_rep(&vals, &mut rng);
    let out = run_session(cfg, |p| {
        let x: &[RepShare] = &shares[p.index()];
        match protocol {
            Protocol::Mult => mult_vec(p, x, x).map(drop),
            Protocol::Hadamard => {
                let t = SecureTensor::new(1, size, fb, x.to_vec())?;
                hadamard(p, &t, &t).map(drop)
            }
            Protocol::Matmult => {
                let a = SecureTensor::new(size, size, fb, x[..size * size].to_vec())?;
                let b = SecureTensor::new(size, size, fb, x[size * size..].to_vec())?;
                matmult(p, &a, &b).map(drop)
            }
            Protocol::Drelu => drelu(p, x).map(drop),
            Protocol::Relu => relu(p, x).map(drop),
            Protocol::Div => divide(p, &x[..size], &x[size..]).map(drop),
            Protocol::Invsqrt => inv_sqrt(p, x).map(drop),
            Protocol::Softmax => softmax(p, &SecureTensor::new(1, size, fb, x.to_vec())?).map(drop),
            Protocol::Aa => {
                let arr = SharedArray::scalars(x[..size].to_vec())?;
                let idx = [x[size]];
                if sync {
                    array_access_sync_baseline(p, &arr, &idx).map(drop)
                } else {
                    array_access(p, &arr, &idx).map(drop)
                }
            }
        }
    })?;
    let virtual_secs = out.virtual_time();
    Ok(Measured { stats: out.stats, virtual_secs, wall_secs: out.wall.as_secs_f64() })
}

/// Runs one protocol at one size. Sizes are element counts, the matrix
/// side for `matmult` and the array length for `aa`.
pub fn run_bench(
    protocol: Protocol,
    size: usize,
    profile_name: &str,
    seed: u64,
    params: ProtocolParams,
) -> Result<BenchRow> {
    if size == 0 {
        return Err(Error::Parameter("benchmark size must be positive".into()));
    }
    let profile = NetProfile::by_name(profile_name)?;
    let cfg = SessionConfig { profile, seed, params, ..SessionConfig::default() };
    let m = measure(&cfg, protocol, size, false)?;
    let t = protocol.tag();
    let total = m.stats.total();
    let mut row = BenchRow {
        protocol,
        size,
        profile: profile_name.to_string(),
        virtual_secs: m.virtual_secs,
        wall_secs: m.wall_secs,
        payload_bits: total.payload_bits,
        payload_bytes: total.payload_bytes,
        wire_bytes: total.wire_bytes(),
        phases: m.stats.phase_count(t),
        reference_bits: protocol.reference_bits(size, &params),
        sync_virtual_secs: None,
        sync_payload_bytes: None,
        sync_phases: None,
    };
    if protocol == Protocol::Aa {
        let s = measure(&cfg, protocol, size, true)?;
        row.sync_virtual_secs = Some(s.virtual_secs);
        row.sync_payload_bytes = Some(s.stats.total().payload_bytes);
        row.sync_phases = Some(s.stats.phase_count(tag::AA_SYNC));
    }
    Ok(row)
}

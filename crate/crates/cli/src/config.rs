//! Run configuration: a flat `key = value` file whose entries the command
//! line flags override.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use quadmpc::{DreluParams, NetProfile, ProtocolParams};

use crate::error::{io_at, CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// All four parties as threads of this process, virtual-time network.
    #[default]
    LocalSim,
    /// One process per party over TCP.
    Sockets,
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-sim" => Ok(Mode::LocalSim),
            "sockets" => Ok(Mode::Sockets),
            other => Err(CliError::Config(format!("unknown mode {other:?} (expected local-sim or sockets)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::LocalSim => "local-sim",
            Mode::Sockets => "sockets",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Set on the party processes of sockets mode.
    pub party: Option<u8>,
    pub peers: Option<[SocketAddr; 4]>,
    pub net: String,
    pub seed: u64,
    pub dataset: String,
    pub epochs: usize,
    pub lr: f64,
    pub softmax_t: Option<u32>,
    pub invsqrt_r: Option<u32>,
    pub key_bits: Option<u32>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub watchdog_secs: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::LocalSim,
            party: None,
            peers: None,
            net: "lan".into(),
            seed: 0,
            dataset: "karate".into(),
            epochs: 50,
            lr: 0.15,
            softmax_t: None,
            invsqrt_r: None,
            key_bits: None,
            out: None,
            cache: None,
            watchdog_secs: 30.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| CliError::Config(format!("invalid value {value:?} for {key}")))
}

impl RunConfig {
    pub const KEYS: [&'static str; 14] = [
        "mode",
        "party",
        "peers",
        "net",
        "seed",
        "dataset",
        "epochs",
        "lr",
        "softmax_t",
        "invsqrt_r",
        "key_bits",
        "out",
        "cache",
        "watchdog_secs",
    ];

    /// Sets one entry. Dashes in `key` are read as underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "mode" => self.mode = value.parse()?,
            "party" => {
                let p: u8 = parse(&key, value)?;
                if p > 3 {
                    return Err(CliError::Config(format!("party must be 0..=3, got {p}")));
                }
                self.party = Some(p);
            }
            "peers" => {
                let addrs: Vec<SocketAddr> = value.split(',').map(|a| parse(&key, a.trim())).collect::<Result<_>>()?;
                let n = addrs.len();
                self.peers = Some(
                    addrs
                        .try_into()
                        .map_err(|_| CliError::Config(format!("peers needs four host:port entries, got {n}")))?,
                );
            }
            "net" => self.net = value.to_string(),
            "seed" => self.seed = parse(&key, value)?,
            "dataset" => self.dataset = value.to_string(),
            "epochs" => self.epochs = parse(&key, value)?,
            "lr" => self.lr = parse(&key, value)?,
            "softmax_t" => self.softmax_t = Some(parse(&key, value)?),
            "invsqrt_r" => self.invsqrt_r = Some(parse(&key, value)?),
            "key_bits" => self.key_bits = Some(parse(&key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "cache" => self.cache = Some(PathBuf::from(value)),
            "watchdog_secs" => self.watchdog_secs = parse(&key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}; known keys: {}", Self::KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin} line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| CliError::Config(format!("{origin} line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        let mut c = RunConfig::default();
        c.apply_text(&text, &path.display().to_string())?;
        Ok(c)
    }

    /// Serializes back to the file format, omitting `party` and `peers`.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "mode = {}\nnet = {}\nseed = {}\ndataset = {}\nepochs = {}\nlr = {}\nwatchdog_secs = {}\n",
            self.mode, self.net, self.seed, self.dataset, self.epochs, self.lr, self.watchdog_secs
        );
        let opt = [("softmax_t", self.softmax_t), ("invsqrt_r", self.invsqrt_r), ("key_bits", self.key_bits)];
        for (k, v) in opt {
            if let Some(v) = v {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        if let Some(c) = &self.cache {
            s.push_str(&format!("cache = {}\n", c.display()));
        }
        s
    }

    /// Protocol parameters: the GCN preset with any iteration or key-width
    /// overrides applied.
    pub fn params(&self) -> Result<ProtocolParams> {
        let mut p = ProtocolParams::gnn();
        if let Some(k) = self.key_bits {
            p.drelu = DreluParams::for_key_bits(k, &p.ring)?;
        }
        if let Some(t) = self.softmax_t {
            p.iters.softmax_t = t;
        }
        if let Some(r) = self.invsqrt_r {
            p.iters.invsqrt_r = r;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn profile(&self) -> Result<NetProfile> {
        Ok(NetProfile::by_name(&self.net)?)
    }

    pub fn watchdog(&self) -> Result<Duration> {
        if !(self.watchdog_secs > 0.0 && self.watchdog_secs.is_finite()) {
            return Err(CliError::Config(format!("watchdog_secs must be positive, got {}", self.watchdog_secs)));
        }
        Ok(Duration::from_secs_f64(self.watchdog_secs))
    }

    /// Checks every field that can be checked before loading the dataset.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.profile()?;
        self.watchdog()?;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(CliError::Config(format!("lr must be a nonnegative number, got {}", self.lr)));
        }
        if self.party.is_some() && self.peers.is_none() {
            return Err(CliError::Config("party processes need peers = four host:port entries".into()));
        }
        if self.party.is_some() && self.mode != Mode::Sockets {
            return Err(CliError::Config("party is only meaningful with mode = sockets".into()));
        }
        Ok(())
    }
}

//! Runs the four party programs of one session and gathers their results.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::params::ProtocolParams;
use crate::party::{Party, SessionSeeds};
use crate::transport::{sim_links, tcp_links_local, CommStats, Link, Net, NetProfile, PartyId, TranscriptEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// In-process channels with virtual time.
    Sim,
    /// Real sockets over loopback, one thread per party.
    TcpLoopback,
}

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub profile: NetProfile,
    pub seed: u64,
    pub params: ProtocolParams,
    pub watchdog: Duration,
    pub record_transcript: bool,
    pub backend: Backend,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            profile: NetProfile::lan(),
            seed: 0,
            params: ProtocolParams::default(),
            watchdog: Duration::from_secs(30),
            record_transcript: false,
            backend: Backend::Sim,
        }
    }
}

impl SessionConfig {
    pub fn with_seed(seed: u64) -> Self {
        SessionConfig { seed, ..Default::default() }
    }
}

#[derive(Debug)]
pub struct SessionOutput<T> {
    pub outputs: Vec<T>,
    pub stats: CommStats,
    pub party_stats: Vec<CommStats>,
    /// Virtual completion time of each party in seconds.
    pub clocks: [f64; 4],
    pub transcripts: Vec<Vec<TranscriptEntry>>,
    pub wall: Duration,
}

impl<T> SessionOutput<T> {
    /// Virtual time until the last party finished.
    pub fn virtual_time(&self) -> f64 {
        self.clocks.iter().copied().fold(0.0, f64::max)
    }
}

/// Result of one party's share of a session.
#[derive(Debug)]
pub struct PartyRun<T> {
    pub output: T,
    pub stats: CommStats,
    pub clock: f64,
    pub transcript: Vec<TranscriptEntry>,
}

/// Runs `program` as party `id` over an already connected link. Sockets
/// mode calls this once per process; `run_session` once per thread.
pub fn run_party<T, F>(
    cfg: &SessionConfig,
    id: PartyId,
    link: Box<dyn Link>,
    seeds: &SessionSeeds,
    program: F,
) -> Result<PartyRun<T>>
where
    F: FnOnce(&mut Party) -> Result<T>,
{
    let net = Net::new(id, link, cfg.profile, cfg.watchdog, cfg.record_transcript);
    let mut party = Party::new(id, cfg.params, seeds, net);
    let output = program(&mut party)?;
    let stats = party.stats();
    let clock = party.clock();
    let transcript = party.take_transcript();
    Ok(PartyRun { output, stats, clock, transcript })
}

/// Runs the same program on all four parties.
pub fn run_session<T, F>(cfg: &SessionConfig, program: F) -> Result<SessionOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    cfg.params.validate()?;
    let links: Vec<Box<dyn Link>> = match cfg.backend {
        Backend::Sim => sim_links().into_iter().map(|l| Box::new(l) as Box<dyn Link>).collect(),
        Backend::TcpLoopback => {
            tcp_links_local(cfg.watchdog)?.into_iter().map(|l| Box::new(l) as Box<dyn Link>).collect()
        }
    };
    let seeds = SessionSeeds::derive(cfg.seed);
    let start = Instant::now();
    let results: Vec<Result<(T, CommStats, f64, Vec<TranscriptEntry>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = links
            .into_iter()
            .enumerate()
            .map(|(i, link)| {
                let program = &program;
                let seeds = &seeds;
                s.spawn(move || {
                    run_party(cfg, PartyId::ALL[i], link, seeds, program)
                        .map(|r| (r.output, r.stats, r.clock, r.transcript))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|p| {
                    let msg = p
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_default();
                    Err(Error::Panic(msg))
                })
            })
            .collect()
    });
    let wall = start.elapsed();

    // Report the root cause rather than the disconnects it triggers in peers.
    if results.iter().any(|r| r.is_err()) {
        let mut errs: Vec<Error> = results.into_iter().filter_map(|r| r.err()).collect();
        let pos = errs.iter().position(|e| !matches!(e, Error::Transport { .. })).unwrap_or(0);
        return Err(errs.swap_remove(pos));
    }
    let mut outputs = Vec::with_capacity(4);
    let mut stats = CommStats::default();
    let mut party_stats = Vec::with_capacity(4);
    let mut clocks = [0.0; 4];
    let mut transcripts = Vec::with_capacity(4);
    for (i, r) in results.into_iter().enumerate() {
        let (o, st, c, tr) = r?;
        outputs.push(o);
        stats.merge(&st);
        party_stats.push(st);
        clocks[i] = c;
        transcripts.push(tr);
    }
    Ok(SessionOutput { outputs, stats, party_stats, clocks, transcripts, wall })
}

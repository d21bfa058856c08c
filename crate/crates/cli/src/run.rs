//! GCN runs: the data owner's setup, the program every party executes and
//! the assembly of the parties' counters into metrics records.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use quadmpc::gnn::{deal_labels, forward, ingest, prepare, train_epoch, PrepareCache, SecureGraphState, SecureModel};
use quadmpc::graph::gcn::{argmax_rows, evaluate, kaiming, Mat, PlainGcn, HIDDEN};
use quadmpc::graph::{load_graph, pad_neighbors, GraphFormat, PaddedGraph, PlainGraph, Split};
use quadmpc::oracle::{Arith, FixedArith, FloatArith};
use quadmpc::session::{run_party, run_session, Backend, SessionConfig};
use quadmpc::tensor::open_fixed;
use quadmpc::transport::tcp_connect;
use quadmpc::{Party, PartyId, ProtocolParams, SecureTensor, SessionSeeds};

use crate::config::{Mode, RunConfig};
use crate::error::{io_at, CliError, Result};
use crate::metrics::{
    segment, total_of, virtual_span, wall_span, Accuracy, EpochRecord, MetricsRecord, PhaseRecord, ReportRecord,
    Snapshot, StartRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Secure training from random weights.
    Train,
    /// Secure inference with weights trained in plaintext for `epochs` epochs.
    Infer,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Train => "run",
            Task::Infer => "infer",
        }
    }
}

/// Directory holding the bundled fixtures; `QUADMPC_FIXTURES` overrides it.
pub fn fixtures_dir() -> PathBuf {
    std::env::var_os("QUADMPC_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")))
}

/// A dataset is an existing path or the name of a bundled fixture.
pub fn resolve_dataset(name: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.exists() {
        return Ok(direct);
    }
    let dir = fixtures_dir();
    for cand in [dir.join(name), dir.join(format!("{name}.json"))] {
        if cand.exists() {
            return Ok(cand);
        }
    }
    let mut known: Vec<String> = std::fs::read_dir(&dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().trim_end_matches(".json").to_string())
                .collect()
        })
        .unwrap_or_default();
    known.sort();
    Err(CliError::Config(format!(
        "dataset {name:?} is neither a path nor a bundled fixture; fixtures in {}: {}",
        dir.display(),
        known.join(", ")
    )))
}

pub fn load_dataset(name: &str) -> Result<PlainGraph> {
    let path = resolve_dataset(name)?;
    let g = load_graph(&path, GraphFormat::detect(&path)?)?;
    Ok(g.normalized().0)
}

fn features(g: &PlainGraph) -> Result<Mat<f64>> {
    Ok(Mat::new(g.num_nodes, g.feature_dim, g.features.clone())?)
}

/// Everything the data owner derives from the seed before a session.
pub struct Setup {
    pub graph: PlainGraph,
    pub padded: PaddedGraph,
    pub w0: Mat<f64>,
    pub w1: Mat<f64>,
    pub states: [SecureGraphState; 4],
    pub models: [SecureModel; 4],
    pub labels: [SecureTensor; 4],
    pub params: ProtocolParams,
    pub session_seed: u64,
}

impl Setup {
    pub fn new(cfg: &RunConfig, task: Task) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.params()?;
        let fb = params.ring.frac_bits;
        let graph = load_dataset(&cfg.dataset)?;
        let mut master = ChaCha20Rng::seed_from_u64(cfg.seed);
        let mut sub = || ChaCha20Rng::seed_from_u64(master.gen());
        let (mut pad_rng, mut w_rng, mut x_rng, mut m_rng, mut y_rng) = (sub(), sub(), sub(), sub(), sub());
        let session_seed = master.gen();
        let padded = pad_neighbors(&graph, &mut pad_rng);
        let mut w0 = kaiming(graph.feature_dim, HIDDEN, &mut w_rng);
        let mut w1 = kaiming(HIDDEN, graph.num_classes, &mut w_rng);
        if task == Task::Infer {
            let mut gcn = PlainGcn::new(FloatArith::EXACT, &padded, &features(&graph)?, &w0, &w1, cfg.lr)?;
            let mask = graph.mask(Split::Train);
            for _ in 0..cfg.epochs {
                gcn.step(&graph.labels, &mask)?;
            }
            (w0, w1) = gcn.weights();
        }
        let states = ingest(&padded, &graph.features, graph.feature_dim, fb, &mut x_rng)?;
        let models = SecureModel::deal(&w0, &w1, cfg.lr, fb, &mut m_rng)?;
        let labels = deal_labels(&graph, fb, &mut y_rng)?;
        Ok(Setup { graph, padded, w0, w1, states, models, labels, params, session_seed })
    }

    fn session(&self, cfg: &RunConfig, backend: Backend) -> Result<SessionConfig> {
        Ok(SessionConfig {
            profile: cfg.profile()?,
            seed: self.session_seed,
            params: self.params,
            watchdog: cfg.watchdog()?,
            record_transcript: false,
            backend,
        })
    }
}

/// What one party hands back: counter snapshots after setup, preparation
/// and every pass, plus its shares of each pass's output probabilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartyReport {
    pub party: u8,
    pub snapshots: Vec<Snapshot>,
    pub z: Vec<SecureTensor>,
}

fn party_program(
    p: &mut Party,
    setup: &Setup,
    task: Task,
    epochs: usize,
    cache: &PrepareCache,
) -> quadmpc::Result<PartyReport> {
    let start = Instant::now();
    let i = p.index();
    let snap = |p: &Party| Snapshot::of(&p.stats(), p.clock(), start.elapsed().as_secs_f64());
    let mut snapshots = vec![snap(p)];
    let mut state = setup.states[i].clone();
    prepare(p, &mut state, cache)?;
    snapshots.push(snap(p));
    let mut model = setup.models[i].clone();
    let mut z = Vec::new();
    if task == Task::Train {
        let mask = setup.graph.mask(Split::Train);
        for _ in 0..epochs {
            z.push(train_epoch(p, &state, &mut model, &setup.labels[i], &mask)?.z);
            snapshots.push(snap(p));
        }
    }
    z.push(forward(p, &state, &model)?.z);
    snapshots.push(snap(p));
    Ok(PartyReport { party: i as u8, snapshots, z })
}

fn accuracy(g: &PlainGraph, z: &Mat<f64>) -> Accuracy {
    let on = |s: Split| {
        let mask = g.mask(s);
        mask.iter().any(|&b| b).then(|| evaluate(z, &g.labels, &mask).accuracy)
    };
    Accuracy { train: on(Split::Train), val: on(Split::Val), test: on(Split::Test) }
}

fn train_loss(g: &PlainGraph, z: &Mat<f64>) -> Option<f64> {
    let mask = g.mask(Split::Train);
    mask.iter().any(|&b| b).then(|| evaluate(z, &g.labels, &mask).loss).filter(|l| l.is_finite())
}

fn cache_of(cfg: &RunConfig) -> PrepareCache {
    cfg.cache.as_ref().map_or_else(PrepareCache::disabled, PrepareCache::at)
}

/// Fixed-point plaintext run on the same weights: per-epoch losses and final probabilities.
fn oracle_run(cfg: &RunConfig, setup: &Setup, task: Task) -> Result<(Vec<f64>, Mat<f64>)> {
    let g = &setup.graph;
    let mut gcn =
        PlainGcn::new(FixedArith::new(setup.params), &setup.padded, &features(g)?, &setup.w0, &setup.w1, cfg.lr)?;
    let mut losses = Vec::new();
    if task == Task::Train {
        let mask = g.mask(Split::Train);
        for _ in 0..cfg.epochs {
            losses.push(gcn.step(&g.labels, &mask)?.loss);
        }
    }
    Ok((losses, gcn.predict()?))
}

/// Turns the four party reports into the metrics stream.
pub fn assemble(
    cfg: &RunConfig,
    setup: &Setup,
    task: Task,
    mut reports: Vec<PartyReport>,
) -> Result<Vec<MetricsRecord>> {
    reports.sort_by_key(|r| r.party);
    let g = &setup.graph;
    let snaps: Vec<Vec<Snapshot>> = reports.iter().map(|r| r.snapshots.clone()).collect();
    let passes = reports[0].z.len();
    let open = |k: usize| -> Result<Mat<f64>> {
        let parts: Vec<SecureTensor> = reports.iter().map(|r| r.z[k].clone()).collect();
        Ok(Mat::new(g.num_nodes, g.num_classes, open_fixed(&parts)?)?)
    };
    let p = &setup.params;
    let mut records = vec![MetricsRecord::Start(StartRecord {
        command: task.name().into(),
        mode: cfg.mode.to_string(),
        dataset: cfg.dataset.clone(),
        nodes: g.num_nodes,
        edges: g.edges.len(),
        feature_dim: g.feature_dim,
        classes: g.num_classes,
        max_degree: g.max_degree(),
        padded_entries: setup.padded.total_added(),
        graph_hash: setup.states[0].hash.clone(),
        net: cfg.net.clone(),
        seed: cfg.seed,
        epochs: cfg.epochs,
        lr: cfg.lr,
        frac_bits: p.ring.frac_bits,
        key_bits: p.drelu.key_bits,
        prime: p.drelu.prime,
        softmax_t: p.iters.softmax_t,
        invsqrt_r: p.iters.invsqrt_r,
    })];
    let phase = |name: &str, k: usize| {
        MetricsRecord::Phase(PhaseRecord {
            name: name.into(),
            virtual_secs: virtual_span(&snaps, k - 1, k),
            wall_secs: wall_span(&snaps, k - 1, k),
            tags: segment(&snaps, k - 1, k),
        })
    };
    records.push(phase("prepare", 1));
    let mut loss_curve = Vec::new();
    for e in 0..passes - 1 {
        let z = open(e)?;
        let loss = train_loss(g, &z);
        loss_curve.push(loss.unwrap_or(f64::NAN));
        records.push(MetricsRecord::Epoch(EpochRecord {
            epoch: e + 1,
            loss,
            accuracy: accuracy(g, &z),
            virtual_secs: virtual_span(&snaps, e + 1, e + 2),
            wall_secs: wall_span(&snaps, e + 1, e + 2),
            tags: segment(&snaps, e + 1, e + 2),
        }));
    }
    let last = passes + 1;
    records.push(phase(if task == Task::Train { "evaluate" } else { "inference" }, last));
    let z = open(passes - 1)?;
    let (oracle_loss_curve, oracle_z) = oracle_run(cfg, setup, task)?;
    let (ours, theirs) = (argmax_rows(&z), argmax_rows(&oracle_z));
    let agree = ours.iter().zip(&theirs).filter(|(a, b)| a == b).count() as f64 / g.num_nodes.max(1) as f64;
    let tags = segment(&snaps, 0, last);
    let total = total_of(&tags);
    records.push(MetricsRecord::Report(ReportRecord {
        accuracy: accuracy(g, &z),
        oracle_accuracy: accuracy(g, &oracle_z),
        oracle_agreement: agree,
        loss_curve,
        oracle_loss_curve,
        virtual_secs: virtual_span(&snaps, 0, last),
        wall_secs: wall_span(&snaps, 0, last),
        payload_bytes: total.payload_bytes,
        wire_bytes: total.wire_bytes,
        tags,
    }));
    Ok(records)
}

/// All four parties in this process.
pub fn run_local(cfg: &RunConfig, task: Task) -> Result<Vec<MetricsRecord>> {
    let setup = Setup::new(cfg, task)?;
    let session = setup.session(cfg, Backend::Sim)?;
    let cache = cache_of(cfg);
    let out = run_session(&session, |p| party_program(p, &setup, task, cfg.epochs, &cache))?;
    assemble(cfg, &setup, task, out.outputs)
}

/// Body of one party process in sockets mode. Each process re-derives the
/// dealt shares from the seed and keeps only its own.
pub fn run_party_process(cfg: &RunConfig, task: Task, report: &Path) -> Result<()> {
    let (Some(party), Some(peers)) = (cfg.party, cfg.peers) else {
        return Err(CliError::Config("party processes need party and peers".into()));
    };
    let setup = Setup::new(cfg, task)?;
    let me = PartyId::new(party)?;
    let session = setup.session(cfg, Backend::TcpLoopback)?;
    let listener = TcpListener::bind(peers[me.index()])
        .map_err(|e| CliError::Config(format!("bind {}: {e}", peers[me.index()])))?;
    let link = tcp_connect(me, listener, &peers, session.watchdog)?;
    let seeds = SessionSeeds::derive(setup.session_seed);
    let cache = cache_of(cfg);
    let run = run_party(&session, me, Box::new(link), &seeds, |p| party_program(p, &setup, task, cfg.epochs, &cache))?;
    let text = serde_json::to_string(&run.output)?;
    std::fs::write(report, text).map_err(io_at(report))?;
    Ok(())
}

/// Spawns four party processes of `exe` over loopback sockets and merges
/// their reports.
pub fn run_sockets(cfg: &RunConfig, task: Task, exe: &Path) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let nonce = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos());
    let dir = std::env::temp_dir().join(format!("quadmpc-{}-{nonce}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(io_at(&dir))?;
    let result = spawn_parties(cfg, task, exe, &dir);
    let _ = std::fs::remove_dir_all(&dir);
    let reports = result?;
    let setup = Setup::new(cfg, task)?;
    assemble(cfg, &setup, task, reports)
}

fn spawn_parties(cfg: &RunConfig, task: Task, exe: &Path, dir: &Path) -> Result<Vec<PartyReport>> {
    let conf = dir.join("run.conf");
    let mut child_cfg = cfg.clone();
    child_cfg.mode = Mode::Sockets;
    std::fs::write(&conf, child_cfg.to_text()).map_err(io_at(&conf))?;
    let listeners: Vec<TcpListener> = (0..4)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<std::io::Result<_>>()
        .map_err(io_at("127.0.0.1:0"))?;
    let peers: Vec<String> = listeners
        .iter()
        .map(|l| l.local_addr().map(|a| a.to_string()))
        .collect::<std::io::Result<_>>()
        .map_err(io_at("127.0.0.1:0"))?;
    drop(listeners);
    let peers = peers.join(",");
    let mut children = Vec::new();
    for i in 0..4u8 {
        let report = dir.join(format!("P{i}.json"));
        let child = Process::new(exe)
            .arg(task.name())
            .arg("--config")
            .arg(&conf)
            .args(["--party", &i.to_string(), "--peers", &peers])
            .arg("--party-report")
            .arg(&report)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(io_at(exe))?;
        children.push((i, child, report));
    }
    let mut reports = Vec::new();
    let mut failure = None;
    for (i, child, report) in children {
        let out = child.wait_with_output().map_err(io_at(exe))?;
        if !out.status.success() {
            let msg = String::from_utf8_lossy(&out.stderr).trim().to_string();
            failure.get_or_insert(CliError::Child { party: i, msg: format!("{} ({msg})", out.status) });
            continue;
        }
        let text = std::fs::read_to_string(&report).map_err(io_at(&report))?;
        reports.push(serde_json::from_str(&text)?);
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(reports),
    }
}

/// Plaintext training: per-epoch loss and accuracy with no parties involved.
pub fn run_oracle(cfg: &RunConfig, fixed: bool) -> Result<Vec<MetricsRecord>> {
    let setup = Setup::new(cfg, Task::Train)?;
    let g = &setup.graph;
    let x = features(g)?;
    let mask = g.mask(Split::Train);
    let mut records = Vec::new();
    let mut curve = Vec::new();
    let mut epoch = |e: usize, z: &Mat<f64>, wall: f64| {
        let loss = train_loss(g, z);
        curve.push(loss.unwrap_or(f64::NAN));
        MetricsRecord::Epoch(EpochRecord {
            epoch: e,
            loss,
            accuracy: accuracy(g, z),
            virtual_secs: 0.0,
            wall_secs: wall,
            tags: Default::default(),
        })
    };
    let start = Instant::now();
    let z = if fixed {
        let a = FixedArith::new(setup.params);
        let mut gcn = PlainGcn::new(a, &setup.padded, &x, &setup.w0, &setup.w1, cfg.lr)?;
        for e in 0..cfg.epochs {
            let t = Instant::now();
            let z = gcn.forward()?.z.map(|v| a.to_f64(v));
            gcn.step(&g.labels, &mask)?;
            records.push(epoch(e + 1, &z, t.elapsed().as_secs_f64()));
        }
        gcn.predict()?
    } else {
        let mut gcn = PlainGcn::new(FloatArith::EXACT, &setup.padded, &x, &setup.w0, &setup.w1, cfg.lr)?;
        for e in 0..cfg.epochs {
            let t = Instant::now();
            let z = gcn.predict()?;
            gcn.step(&g.labels, &mask)?;
            records.push(epoch(e + 1, &z, t.elapsed().as_secs_f64()));
        }
        gcn.predict()?
    };
    let acc = accuracy(g, &z);
    records.push(MetricsRecord::Report(ReportRecord {
        accuracy: acc.clone(),
        oracle_accuracy: acc,
        oracle_agreement: 1.0,
        oracle_loss_curve: curve.clone(),
        loss_curve: curve,
        virtual_secs: 0.0,
        wall_secs: start.elapsed().as_secs_f64(),
        payload_bytes: 0,
        wire_bytes: 0,
        tags: Default::default(),
    }));
    Ok(records)
}

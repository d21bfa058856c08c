use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadmpc::bench::{run_bench, BenchRow, Protocol};
use quadmpc::cost::{estimate, Plan, PricingTable, Usage};
use quadmpc::{DreluParams, ProtocolParams};
use quadmpc_cli::config::{Mode, RunConfig};
use quadmpc_cli::error::{CliError, Result};
use quadmpc_cli::metrics::{write_jsonl, MetricsRecord};
use quadmpc_cli::run::{run_local, run_oracle, run_party_process, run_sockets, Task};

#[derive(Parser)]
#[command(name = "quadmpc", version, about = "Four-party secure GCN training and inference")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Secure training; writes one JSON metrics record per line.
    Run(RunArgs),
    /// Secure inference with weights trained in plaintext for --epochs epochs.
    Infer(RunArgs),
    /// Plaintext training of the same model.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        /// `fixed` emulates the secure arithmetic bit for bit, `float` uses f64.
        #[arg(long, default_value = "fixed")]
        arith: String,
    },
    /// Protocol microbenchmarks as CSV.
    Bench(BenchArgs),
    /// Cloud cost of a run.
    Cost(CostArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// local-sim or sockets.
    #[arg(long)]
    mode: Option<String>,
    /// Run only this party (sockets mode, with --peers).
    #[arg(long)]
    party: Option<u8>,
    /// Four comma-separated host:port endpoints, P0 first.
    #[arg(long)]
    peers: Option<String>,
    /// lan, wan, ideal or custom:<latency_ms>:<bits_per_s>.
    #[arg(long)]
    net: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Path to a dataset or the name of a bundled fixture.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    softmax_t: Option<u32>,
    #[arg(long)]
    invsqrt_r: Option<u32>,
    #[arg(long)]
    key_bits: Option<u32>,
    /// Metrics file (JSON lines); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory caching prepared aggregation shares.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    watchdog_secs: Option<f64>,
    #[arg(long, hide = true)]
    party_report: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        fn text<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(T::to_string)
        }
        let path = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("mode", text(&self.mode)),
            ("party", text(&self.party)),
            ("peers", text(&self.peers)),
            ("net", text(&self.net)),
            ("seed", text(&self.seed)),
            ("dataset", text(&self.dataset)),
            ("epochs", text(&self.epochs)),
            ("lr", text(&self.lr)),
            ("softmax_t", text(&self.softmax_t)),
            ("invsqrt_r", text(&self.invsqrt_r)),
            ("key_bits", text(&self.key_bits)),
            ("out", path(&self.out)),
            ("cache", path(&self.cache)),
            ("watchdog_secs", text(&self.watchdog_secs)),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated protocols, or `all`.
    #[arg(long, default_value = "all")]
    protocol: String,
    /// Comma-separated sizes.
    #[arg(long, default_value = "1,10,100")]
    sizes: String,
    #[arg(long, default_value = "lan")]
    net: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    softmax_t: Option<u32>,
    #[arg(long)]
    invsqrt_r: Option<u32>,
    #[arg(long)]
    key_bits: Option<u32>,
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Take hours and egress from the report record of a metrics file.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// With --metrics: bill wall-clock instead of virtual time.
    #[arg(long)]
    wall: bool,
    #[arg(long, default_value_t = 4)]
    instances: u32,
    #[arg(long)]
    hours: Option<f64>,
    #[arg(long)]
    egress_gb: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    disk_gb: f64,
    #[arg(long, default_value = "gcp")]
    provider: String,
    #[arg(long, default_value = "A")]
    plan: String,
    /// JSON pricing table replacing the built-in one.
    #[arg(long)]
    pricing: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, records: &[MetricsRecord]) -> Result<()> {
    match out {
        Some(p) => {
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(p).map_err(|e| CliError::Io { path: p.clone(), source: e })?,
            );
            write_jsonl(&mut f, records).map_err(|e| CliError::Io { path: p.clone(), source: e })
        }
        None => write_jsonl(&mut std::io::stdout().lock(), records)
            .map_err(|e| CliError::Io { path: "stdout".into(), source: e }),
    }
}

fn summarize(records: &[MetricsRecord]) {
    if let Some(MetricsRecord::Report(r)) = records.last() {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.1}%", 100.0 * v));
        eprintln!(
            "accuracy train {} / test {} (oracle train {} / test {}), argmax agreement {:.1}%, {:.2} MB sent, {:.3} s virtual, {:.2} s wall",
            pct(r.accuracy.train),
            pct(r.accuracy.test),
            pct(r.oracle_accuracy.train),
            pct(r.oracle_accuracy.test),
            100.0 * r.oracle_agreement,
            r.wire_bytes as f64 / 1e6,
            r.virtual_secs,
            r.wall_secs
        );
    }
}

fn cmd_run(args: &RunArgs, task: Task) -> Result<()> {
    let cfg = args.config()?;
    if cfg.party.is_some() {
        let report =
            args.party_report.clone().unwrap_or_else(|| PathBuf::from(format!("party{}.json", cfg.party.unwrap_or(0))));
        return run_party_process(&cfg, task, &report);
    }
    let records = match cfg.mode {
        Mode::LocalSim => run_local(&cfg, task)?,
        Mode::Sockets => {
            let exe =
                std::env::current_exe().map_err(|e| CliError::Io { path: "current executable".into(), source: e })?;
            run_sockets(&cfg, task, &exe)?
        }
    };
    emit(cfg.out.as_ref(), &records)?;
    summarize(&records);
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let protocols: Vec<Protocol> = if a.protocol.trim() == "all" {
        Protocol::ALL.to_vec()
    } else {
        a.protocol.split(',').map(|s| s.parse()).collect::<quadmpc::Result<_>>()?
    };
    let sizes: Vec<usize> = a
        .sizes
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::Config(format!("invalid size {s:?}"))))
        .collect::<Result<_>>()?;
    let mut params = ProtocolParams::default();
    if let Some(k) = a.key_bits {
        params.drelu = DreluParams::for_key_bits(k, &params.ring)?;
    }
    if let Some(t) = a.softmax_t {
        params.iters.softmax_t = t;
    }
    if let Some(r) = a.invsqrt_r {
        params.iters.invsqrt_r = r;
    }
    params.validate()?;
    let mut text = String::from(BenchRow::CSV_HEADER);
    text.push('\n');
    for p in &protocols {
        for &n in &sizes {
            text.push_str(&run_bench(*p, n, &a.net, a.seed, params)?.csv());
            text.push('\n');
        }
    }
    match &a.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io { path: path.clone(), source: e }),
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io { path: "stdout".into(), source: e })
        }
    }
}

fn cmd_cost(a: &CostArgs) -> Result<()> {
    let table = match &a.pricing {
        Some(p) => PricingTable::from_json(
            &std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.clone(), source: e })?,
        )?,
        None => PricingTable::default(),
    };
    let plan: Plan = a.plan.parse()?;
    let (mut hours, mut egress) = (a.hours, a.egress_gb);
    if let Some(path) = &a.metrics {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        let report = text
            .lines()
            .filter_map(|l| serde_json::from_str::<MetricsRecord>(l).ok())
            .find_map(|r| match r {
                MetricsRecord::Report(r) => Some(r),
                _ => None,
            })
            .ok_or_else(|| CliError::Config(format!("{} holds no report record", path.display())))?;
        let secs = if a.wall { report.wall_secs } else { report.virtual_secs };
        hours = hours.or(Some(secs / 3600.0));
        egress = egress.or(Some(report.wire_bytes as f64 / 1e9));
    }
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Config(format!("--{name} is required without --metrics")))
    };
    let usage = Usage {
        instances: a.instances,
        hours: need(hours, "hours")?,
        egress_gb: need(egress, "egress-gb")?,
        disk_gb: a.disk_gb,
    };
    let dollars = estimate(&usage, &table, &a.provider, plan)?;
    let line = serde_json::json!({
        "provider": a.provider,
        "plan": plan.to_string(),
        "instances": usage.instances,
        "hours": usage.hours,
        "egress_gb": usage.egress_gb,
        "disk_gb": usage.disk_gb,
        "cost_usd": dollars,
    });
    println!("{line}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(a) => cmd_run(a, Task::Train),
        Cmd::Infer(a) => cmd_run(a, Task::Infer),
        Cmd::Oracle { run, arith } => (|| {
            let fixed = match arith.as_str() {
                "fixed" => true,
                "float" => false,
                other => {
                    return Err(CliError::Config(format!("unknown arithmetic {other:?} (expected fixed or float)")))
                }
            };
            let cfg = run.config()?;
            let records = run_oracle(&cfg, fixed)?;
            emit(cfg.out.as_ref(), &records)?;
            summarize(&records);
            Ok(())
        })(),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Cost(a) => cmd_cost(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `hubcast` command-line driver.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use hubcast::ann::TrainConfig;
use hubcast::destshare::{AlphaConvention, DEFAULT_ALPHA};
use hubcast::eval::{write_report, MasePooling, Method, RecordSet};
use hubcast::pipeline::{destination_shares, run, RunConfig, Split};
use hubcast::simnet::{build_network, simulate, Network, NetworkSpec, ParcelLog, SimConfig};
use hubcast::unordered::HorizonModel;
use hubcast::{Error, ErrorKind};

const AFTER_HELP: &str = "\
Event log format (one parcel per line after a version header and a column line):
  parcel_id,order_time,origin,destination,HUB|HUB|...,[LOC,ARR,DEP];[LOC,ARR,DEP];...
  LOC is a hub id or a route `A-B`; times are minutes since the log start; an
  empty DEP marks a stay still open when the log ends.

Report files (each starts with `#hubcast-report v1`):
  summary.csv       method,mase,mae,mase_1_4h,mase_5_8h,mase_9_16h,mase_17_24h
  horizon_mase.csv  horizon, then one MASE column per method
  series.csv        method,t_o,horizon,forecast,actual,lower,upper

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training error.";

#[derive(Parser)]
#[command(name = "hubcast", version, about = "Parcel arrival forecasting for logistics hubs", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event log.
    Simulate(SimulateArgs),
    /// Train all methods, replay the test days and write the report.
    Run(RunArgs),
    /// Forecast destination shares of the unordered volume.
    Destshare(DestshareArgs),
    /// Recompute the report files from a run's saved records.
    Report(ReportArgs),
}

#[derive(Args)]
struct NetworkArg {
    /// Network spec (TOML); the bundled demo network when omitted.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, env = "HUBCAST_OUT_DIR", default_value = "hubcast-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    network: NetworkArg,
    /// Simulation config (TOML); the bundled demo scenario when omitted.
    #[arg(long)]
    sim: Option<PathBuf>,
    /// Overrides the config's number of days.
    #[arg(long)]
    days: Option<u32>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pooling {
    Pooled,
    PerObservation,
}

#[derive(Args)]
struct LogArgs {
    #[command(flatten)]
    network: NetworkArg,
    /// Event log written by `simulate`.
    #[arg(long)]
    log: PathBuf,
    /// Hub whose arrivals are forecast.
    #[arg(long, default_value = "GH1")]
    hub: String,
    /// Interval length in minutes.
    #[arg(long, default_value_t = 15)]
    interval: u32,
    /// Last forecast index; the horizon has this many periods plus one.
    #[arg(long, default_value_t = 95)]
    last_index: usize,
    /// Base seed for every trained model.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Comma-separated subset of naive, holt_winters, ann_direct, ensemble_sum, ensemble_ann.
    #[arg(long, value_delimiter = ',', default_value = "naive,holt_winters,ann_direct,ensemble_sum,ensemble_ann")]
    methods: Vec<String>,
    /// Training epochs for the volume networks.
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate for the volume networks.
    #[arg(long)]
    volume_lr: Option<f64>,
    /// Training epochs for the ensemble network.
    #[arg(long)]
    ensemble_epochs: Option<usize>,
    /// Learning rate for the ensemble network.
    #[arg(long)]
    ensemble_lr: Option<f64>,
    /// Trees per dwell or travel forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Days between dwell and travel model refits.
    #[arg(long, default_value_t = 1)]
    retrain_days: u32,
    /// Nominal coverage of the residual bands.
    #[arg(long, default_value_t = 0.95)]
    band_level: f64,
    #[arg(long, value_enum, default_value_t = Pooling::Pooled)]
    pooling: Pooling,
    /// Print the resolved plan and exit without writing anything.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    /// The smoothing constant weights the new observation.
    Observation,
    /// The smoothing constant weights the previous shares.
    Prior,
}

#[derive(Args)]
struct DestshareArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Smoothing constant in [0, 1].
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Convention::Observation)]
    convention: Convention,
    /// Directory holding a trained `unordered` model to allocate.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `run`.
    #[arg(long)]
    run: PathBuf,
    /// Nominal coverage of the residual bands.
    #[arg(long, default_value_t = 0.95)]
    band_level: f64,
    #[arg(long, value_enum, default_value_t = Pooling::Pooled)]
    pooling: Pooling,
    #[command(flatten)]
    out: OutArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Run(a) => cmd_run(a),
        Command::Destshare(a) => cmd_destshare(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()).map(Error::kind) {
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Training) => 4,
        Some(ErrorKind::Data) | None => 3,
    }
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
        .map_err(Into::into)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_network(arg: &NetworkArg) -> Result<(Network, String)> {
    let (spec, text) = match &arg.network {
        Some(p) => {
            let text = read_config(p)?;
            (NetworkSpec::from_toml(&text).with_context(|| format!("network spec {}", p.display()))?, text)
        }
        None => (NetworkSpec::demo(), "demo".to_string()),
    };
    Ok((build_network(&spec)?, text))
}

fn load_log(network: &Network, path: &Path) -> Result<ParcelLog> {
    let file = File::open(path).map_err(|e| Error::Config(format!("cannot open log {}: {e}", path.display())))?;
    ParcelLog::read(network, BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_manifest(dir: &Path, manifest: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let (network, network_text) = load_network(&a.network)?;
    let (mut cfg, sim_text) = match &a.sim {
        Some(p) => {
            let text = read_config(p)?;
            (SimConfig::from_toml(&text).with_context(|| format!("simulation config {}", p.display()))?, text)
        }
        None => (SimConfig::demo(), "demo".to_string()),
    };
    if let Some(d) = a.days {
        cfg.horizon_days = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let parcels = simulate(&network, &cfg)?;
    let log = ParcelLog::new(parcels, cfg.end_minute());
    let mut bytes = Vec::new();
    log.write(&network, &mut bytes)?;

    let dir = &a.out.out;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("events.log"), &bytes)?;
    let config_hash = sha256_hex(
        format!("{network_text}\n--\n{sim_text}\n--\ndays={} seed={}", cfg.horizon_days, cfg.seed).as_bytes(),
    );
    write_manifest(
        dir,
        &json!({
            "command": "simulate",
            "network": a.network.network.as_ref().map(|p| p.display().to_string()),
            "sim": a.sim.as_ref().map(|p| p.display().to_string()),
            "days": cfg.horizon_days,
            "interval": cfg.interval_minutes,
            "seed": cfg.seed,
            "config_hash": config_hash,
            "parcels": log.parcels.len(),
            "log_sha256": sha256_hex(&bytes),
        }),
    )?;
    println!("wrote {} parcels over {} days to {}", log.parcels.len(), cfg.horizon_days, dir.join("events.log").display());
    Ok(())
}

fn pooling(p: Pooling) -> MasePooling {
    match p {
        Pooling::Pooled => MasePooling::Pooled,
        Pooling::PerObservation => MasePooling::PerObservation,
    }
}

fn pooling_name(p: MasePooling) -> &'static str {
    match p {
        MasePooling::Pooled => "pooled",
        MasePooling::PerObservation => "per-observation",
    }
}

fn run_config(log: &ParcelLog, a: &RunArgs) -> Result<RunConfig> {
    let days = log.end / hubcast::MINUTES_PER_DAY;
    let mut cfg = RunConfig::standard(&a.log.hub, days, a.log.seed)?;
    cfg.interval = a.log.interval;
    cfg.last_index = a.log.last_index;
    cfg.methods = a.methods.iter().map(|m| m.trim().parse()).collect::<hubcast::Result<Vec<Method>>>()?;
    cfg.methods.sort();
    cfg.methods.dedup();
    let tweak = |t: &mut TrainConfig, epochs: Option<usize>, lr: Option<f64>| {
        if let Some(e) = epochs {
            t.epochs = e;
        }
        if let Some(l) = lr {
            t.learning_rate = l;
        }
    };
    tweak(&mut cfg.volume_train, a.epochs, a.volume_lr);
    tweak(&mut cfg.ensemble_train, a.ensemble_epochs, a.ensemble_lr);
    if let Some(t) = a.trees {
        cfg.forest.trees = t;
    }
    cfg.retrain_days = a.retrain_days;
    cfg.band_level = a.band_level;
    cfg.pooling = pooling(a.pooling);
    cfg.validate(log)?;
    Ok(cfg)
}

fn days(r: &std::ops::Range<u32>) -> Value {
    json!([r.start, r.end])
}

fn plan_json(cfg: &RunConfig, log_path: &Path, network: &Option<PathBuf>) -> Value {
    let train = |t: &TrainConfig| {
        json!({"learning_rate": t.learning_rate, "epochs": t.epochs, "weight_decay": t.weight_decay, "seed": t.seed})
    };
    let Split { train: tr, validation, test } = &cfg.split;
    json!({
        "log": log_path.display().to_string(),
        "network": network.as_ref().map(|p| p.display().to_string()),
        "target_hub": cfg.target_hub,
        "interval": cfg.interval,
        "last_index": cfg.last_index,
        "methods": cfg.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "days": {"train": days(tr), "validation": days(validation), "test": days(test)},
        "volume_train": train(&cfg.volume_train),
        "ensemble_train": train(&cfg.ensemble_train),
        "forest": {
            "trees": cfg.forest.trees,
            "min_leaf": cfg.forest.min_leaf,
            "seed": cfg.forest.seed,
            "retrain_days": cfg.retrain_days,
        },
        "band_level": cfg.band_level,
        "pooling": pooling_name(cfg.pooling),
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let (network, _) = load_network(&a.log.network)?;
    let log = load_log(&network, &a.log.log)?;
    let cfg = run_config(&log, &a)?;
    let plan = plan_json(&cfg, &a.log.log, &a.log.network.network);
    if a.dry_run {
        println!("{}", serde_json::to_string_pretty(&plan)?);
        println!("output directory: {}", a.out.out.display());
        return Ok(());
    }
    let out = run(&network, &log, &cfg)?;
    let dir = &a.out.out;
    out.save(&network, &cfg, dir)?;
    let log_bytes = fs::read(&a.log.log)?;
    let mut manifest = plan;
    manifest["command"] = json!("run");
    manifest["config_hash"] = json!(sha256_hex(serde_json::to_string(&manifest)?.as_bytes()));
    manifest["log_sha256"] = json!(sha256_hex(&log_bytes));
    write_manifest(dir, &manifest)?;
    for m in &out.report.methods {
        println!("{:<14} MASE {:.4}  MAE {:.4}", m.method.as_str(), m.mase, m.mae);
    }
    println!("report written to {}", dir.display());
    Ok(())
}

fn cmd_destshare(a: DestshareArgs) -> Result<()> {
    let (network, _) = load_network(&a.log.network)?;
    let log = load_log(&network, &a.log.log)?;
    let days = log.end / hubcast::MINUTES_PER_DAY;
    let mut cfg = RunConfig::standard(&a.log.hub, days, a.log.seed)?;
    cfg.interval = a.log.interval;
    cfg.last_index = a.log.last_index;
    let model = match &a.model {
        Some(dir) => Some(HorizonModel::load(dir, "unordered").with_context(|| format!("loading model from {}", dir.display()))?),
        None => None,
    };
    let convention = match a.convention {
        Convention::Observation => AlphaConvention::NewObservation,
        Convention::Prior => AlphaConvention::Prior,
    };
    let result = destination_shares(&network, &log, &cfg, a.alpha, convention, model.as_ref())?;

    let dir = &a.out.out;
    fs::create_dir_all(dir)?;
    result.initial.export(&network, BufWriter::new(File::create(dir.join("shares_initial.csv"))?))?;
    result.state.export(&network, BufWriter::new(File::create(dir.join("shares_final.csv"))?))?;
    if !result.allocations.is_empty() {
        let mut w = BufWriter::new(File::create(dir.join("allocation.csv"))?);
        write!(w, "t_o,horizon")?;
        for &d in &result.state.destinations {
            write!(w, ",{}", network.name(d))?;
        }
        writeln!(w)?;
        for (t_o, rows) in &result.allocations {
            for (t, row) in rows.iter().enumerate() {
                write!(w, "{t_o},{t}")?;
                for v in row {
                    write!(w, ",{v:.6}")?;
                }
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    write_manifest(
        dir,
        &json!({
            "command": "destshare",
            "log": a.log.log.display().to_string(),
            "target_hub": cfg.target_hub,
            "alpha": a.alpha,
            "convention": match convention { AlphaConvention::NewObservation => "observation", AlphaConvention::Prior => "prior" },
            "updates": result.updates,
            "max_row_error": result.max_row_error,
            "model": a.model.as_ref().map(|p| p.display().to_string()),
        }),
    )?;
    println!(
        "{} destinations, {} updates, max row-sum error {:.3e}; shares written to {}",
        result.state.destinations.len(),
        result.updates,
        result.max_row_error,
        dir.display()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let manifest_path = a.run.join("manifest.json");
    let manifest: Value = serde_json::from_str(&read_config(&manifest_path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
    let (Some(interval), Some(last_index)) = (manifest["interval"].as_u64(), manifest["last_index"].as_u64()) else {
        bail!(Error::Config(format!("{} lacks interval or last_index", manifest_path.display())));
    };
    let file = File::open(a.run.join("records.csv"))
        .map_err(|e| Error::Data(format!("cannot open records in {}: {e}", a.run.display())))?;
    let records = RecordSet::read(BufReader::new(file))?;
    let periods = last_index as usize + 1;
    let report = records.evaluate(interval as u32, periods, a.band_level, pooling(a.pooling))?;
    write_report(&report, &records, periods, &a.out.out)?;
    for m in &report.methods {
        println!("{:<14} MASE {:.4}  MAE {:.4}", m.method.as_str(), m.mase, m.mae);
    }
    println!("report written to {}", a.out.out.display());
    Ok(())
}

//! `musca` — Monte Carlo experiments for slotted random access with
//! successive interference cancellation.
//!
//! Exit codes: 0 success, 2 invalid configuration or input files,
//! 3 filesystem I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use musca::harness::{
    default_load_grid, default_snr_grid, emit_results, metrics_csv_string, parse_scheme,
    peak_throughput, run_trial, sweep_load, sweep_snr, ExperimentConfig, MetricsRecord,
    OutputFormat, PhyChoice, StopRule,
};
use musca::phy::{default_esn0_grid, default_table_patterns, fit_margin, DEFAULT_SLOPE};
use musca::protocols::{payload_partition, CodeRegistry, Scheme};
use musca::receiver::write_trace_jsonl;
use musca::{Error, FerTable, Result};

#[derive(Parser)]
#[command(
    name = "musca",
    version,
    about = "Monte Carlo simulator for slotted random access with SIC",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one fully traced frame and report per-user outcomes.
    Trial(TrialArgs),
    /// Sweep offered load G at a fixed operating point.
    SweepLoad(SweepLoadArgs),
    /// Sweep the operating point Es/N0 at a fixed load.
    SweepSnr(SweepSnrArgs),
    /// Fit the decoding margin implied by a FER table.
    Calibrate(CalibrateArgs),
    /// Check a FER table file and report structural problems.
    ValidateFer(ValidateFerArgs),
    /// Write a synthesized FER table for a registered code.
    ExportFer(ExportFerArgs),
}

/// Flags shared by every experiment-running subcommand. Values omitted
/// here fall back to `--config`, then to built-in defaults.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment TOML file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Access scheme: sa, dsa, crdsa, crdsa++, irsa, csa, musca.
    #[arg(long)]
    scheme: Option<String>,
    /// Code id from the registry (default turbo-1-6).
    #[arg(long)]
    code: Option<String>,
    /// Slots per frame.
    #[arg(long)]
    slots: Option<usize>,
    /// Bursts per user (replicas or fragments, scheme-dependent).
    #[arg(long)]
    nb: Option<usize>,
    /// IRSA repetition distribution, e.g. "2:0.5,3:0.28,8:0.22".
    #[arg(long)]
    distribution: Option<String>,
    /// Operating point Es/N0 in dB.
    #[arg(long)]
    esno: Option<f64>,
    /// Offered normalized load G.
    #[arg(long)]
    load: Option<f64>,
    /// Fixed frame count per point (disables adaptive stopping).
    #[arg(long)]
    frames: Option<u64>,
    /// Base seed; every frame and point derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Decode-outcome model: collision, sinr-mi, fer-table.
    #[arg(long)]
    phy: Option<String>,
    /// Decoding margin for sinr-mi (also the fer-table fallback).
    #[arg(long)]
    margin: Option<f64>,
    /// FER table CSV; implies `--phy fer-table`.
    #[arg(long)]
    fer_table: Option<PathBuf>,
    /// Signaling read-through degree.
    #[arg(long)]
    d_sig: Option<usize>,
    /// Extra code catalog TOML merged over the built-in registry.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Directory for result files; stdout only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result file format: csv, structured, both.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Frame index to reproduce out of a sweep.
    #[arg(long, default_value_t = 0)]
    frame: u64,
}

#[derive(Args)]
struct SweepLoadArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated loads; default 0.05..=2.0 in 0.05 steps.
    #[arg(long)]
    loads: Option<String>,
}

#[derive(Args)]
struct SweepSnrArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated Es/N0 values in dB; default 0..=10 integers.
    #[arg(long)]
    esnos: Option<String>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// FER table CSV to fit.
    #[arg(long)]
    fer_table: PathBuf,
    /// Code the table describes (default: the table's own code id).
    #[arg(long)]
    code: Option<String>,
    /// Fragments per block used for the burst geometry.
    #[arg(long, default_value_t = 3)]
    nb: usize,
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateFerArgs {
    /// FER table CSV to check.
    #[arg(long)]
    fer_table: PathBuf,
}

#[derive(Args)]
struct ExportFerArgs {
    /// Code id from the registry.
    #[arg(long)]
    code: String,
    /// Fragments per block.
    #[arg(long, default_value_t = 3)]
    nb: usize,
    /// Decoding margin of the synthesized waterfall.
    #[arg(long)]
    margin: Option<f64>,
    /// Waterfall steepness (Q-function argument per unit margin).
    #[arg(long, default_value_t = DEFAULT_SLOPE)]
    slope: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Trial(args) => trial(args),
        Command::SweepLoad(args) => sweep_load_cmd(args),
        Command::SweepSnr(args) => sweep_snr_cmd(args),
        Command::Calibrate(args) => calibrate(args),
        Command::ValidateFer(args) => validate_fer(args),
        Command::ExportFer(args) => export_fer(args),
    }
}

fn load_registry(path: Option<&Path>) -> Result<CodeRegistry> {
    let mut registry = CodeRegistry::builtin();
    if let Some(p) = path {
        registry.load_into(p)?;
    }
    Ok(registry)
}

/// Builds the experiment from `--config` (or defaults) plus overrides.
fn build_config(args: &CommonArgs) -> Result<(ExperimentConfig, CodeRegistry)> {
    let registry = load_registry(args.registry.as_deref())?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let name = args.scheme.as_deref().ok_or_else(|| {
                Error::InvalidConfiguration(
                    "no --scheme given and no --config file to take one from".into(),
                )
            })?;
            let scheme = parse_scheme(name, args.nb, args.distribution.as_deref())?;
            ExperimentConfig::new(scheme, "turbo-1-6")
        }
    };
    if args.config.is_some()
        && (args.scheme.is_some() || args.nb.is_some() || args.distribution.is_some())
    {
        let name = args
            .scheme
            .clone()
            .unwrap_or_else(|| cfg.scheme.name().to_string());
        // keep the configured distribution unless overridden
        let kept_dist = match &cfg.scheme {
            Scheme::Irsa { distribution } if name == "irsa" && args.distribution.is_none() => {
                Some(
                    distribution
                        .entries
                        .iter()
                        .map(|(d, p)| format!("{d}:{p}"))
                        .collect::<Vec<_>>()
                        .join(","),
                )
            }
            _ => None,
        };
        let dist = args.distribution.clone().or(kept_dist);
        cfg.scheme = parse_scheme(&name, args.nb, dist.as_deref())?;
    }
    if let Some(code) = &args.code {
        cfg.code_id = code.clone();
    }
    if let Some(slots) = args.slots {
        cfg.num_slots = slots;
    }
    if let Some(esno) = args.esno {
        cfg.esn0_db = esno;
    }
    if let Some(load) = args.load {
        cfg.load = load;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d_sig) = args.d_sig {
        cfg.d_sig = d_sig;
    }
    if let Some(frames) = args.frames {
        cfg.stop = StopRule::exactly(frames);
    }
    if let Some(name) = &args.phy {
        let mut phy = PhyChoice::parse(name)?;
        if let Some(m) = args.margin {
            phy = match phy {
                PhyChoice::Collision => PhyChoice::Collision,
                PhyChoice::SinrMi { .. } => PhyChoice::SinrMi { margin: m },
                PhyChoice::FerTable { path, .. } => PhyChoice::FerTable {
                    path,
                    fallback_margin: m,
                },
            };
        }
        cfg.phy = phy;
    } else if let Some(m) = args.margin {
        cfg.phy = match cfg.phy.clone() {
            PhyChoice::Collision => PhyChoice::Collision,
            PhyChoice::SinrMi { .. } => PhyChoice::SinrMi { margin: m },
            PhyChoice::FerTable { path, .. } => PhyChoice::FerTable {
                path,
                fallback_margin: m,
            },
        };
    }
    if let Some(table) = &args.fer_table {
        cfg.phy = match cfg.phy.clone() {
            PhyChoice::FerTable {
                fallback_margin, ..
            } => PhyChoice::FerTable {
                path: Some(table.clone()),
                fallback_margin,
            },
            PhyChoice::SinrMi { margin } => PhyChoice::FerTable {
                path: Some(table.clone()),
                fallback_margin: margin,
            },
            PhyChoice::Collision => PhyChoice::FerTable {
                path: Some(table.clone()),
                fallback_margin: musca::phy::DEFAULT_MARGIN,
            },
        };
    }
    cfg.validate()?;
    // resolve the code early for a clean error before any simulation
    registry.get(&cfg.code_id)?;
    Ok((cfg, registry))
}

fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidConfiguration(format!("bad {what} value '{s}'")))
        })
        .collect()
}

fn output_format(args: &CommonArgs) -> Result<OutputFormat> {
    args.format.parse()
}

fn emit(records: &[MetricsRecord], args: &CommonArgs, basename: &str) -> Result<()> {
    print!("{}", metrics_csv_string(records));
    if let Some(dir) = &args.out {
        let written = emit_results(records, dir, basename, output_format(args)?)?;
        for path in written {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn trial(args: TrialArgs) -> Result<()> {
    let (cfg, registry) = build_config(&args.common)?;
    let out = run_trial(&cfg, &registry, args.frame)?;
    let s = &out.summary;
    println!(
        "scheme={} slots={} users={} esn0_db={} frame={}",
        cfg.scheme.name(),
        cfg.num_slots,
        out.plans.len(),
        cfg.esn0_db,
        args.frame
    );
    println!(
        "decoded {}/{} located {} iterations {} deadlock {}",
        s.decoded_count(),
        s.decoded.len(),
        s.located.iter().filter(|&&l| l).count(),
        s.iterations,
        s.deadlock
    );
    for (u, plan) in out.plans.iter().enumerate() {
        println!(
            "user {u}: slots {:?} located {} decoded {}",
            plan.placement.slots, s.located[u], s.decoded[u]
        );
    }
    if let Some(dir) = &args.common.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let path = dir.join("trace.jsonl");
        let file = fs::File::create(&path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        write_trace_jsonl(&out.trace, file)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep_load_cmd(args: SweepLoadArgs) -> Result<()> {
    let (cfg, registry) = build_config(&args.common)?;
    let loads = match &args.loads {
        Some(text) => parse_grid(text, "load")?,
        None => default_load_grid(),
    };
    let records = sweep_load(&cfg, &registry, &loads, cfg.esn0_db)?;
    emit(&records, &args.common, "sweep_load")?;
    if let Some(peak) = peak_throughput(&records) {
        eprintln!(
            "peak throughput {} at G={} (plr {})",
            peak.throughput, peak.load, peak.plr
        );
    }
    Ok(())
}

fn sweep_snr_cmd(args: SweepSnrArgs) -> Result<()> {
    let (cfg, registry) = build_config(&args.common)?;
    let esnos = match &args.esnos {
        Some(text) => parse_grid(text, "esn0")?,
        None => default_snr_grid(),
    };
    let records = sweep_snr(&cfg, &registry, &esnos, cfg.load)?;
    emit(&records, &args.common, "sweep_snr")
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let registry = load_registry(args.registry.as_deref())?;
    let table: FerTable = FerTable::load_csv(&args.fer_table)?;
    let code_id = args.code.as_deref().unwrap_or(&table.code_id);
    let code = registry.get(code_id)?;
    let geometry = payload_partition(&code, args.nb)?;
    let margin = fit_margin(&table, &code, geometry.symbols_per_burst)?;
    println!("code={} nb={} margin={margin}", code.code_id, args.nb);
    Ok(())
}

fn validate_fer(args: ValidateFerArgs) -> Result<()> {
    let table: FerTable = FerTable::load_csv(&args.fer_table)?;
    let patterns = table.patterns();
    let points: usize = patterns
        .iter()
        .map(|p| table.points(p).map_or(0, |v| v.len()))
        .sum();
    let notes = table.quality_report();
    println!(
        "ok: code={} patterns={} points={} warnings={}",
        table.code_id,
        patterns.len(),
        points,
        notes.len()
    );
    for note in notes {
        println!("warning: {note}");
    }
    Ok(())
}

fn export_fer(args: ExportFerArgs) -> Result<()> {
    let registry = load_registry(args.registry.as_deref())?;
    let code = registry.get(&args.code)?;
    let geometry = payload_partition(&code, args.nb)?;
    let margin = args.margin.unwrap_or(musca::phy::DEFAULT_MARGIN);
    let patterns = default_table_patterns(args.nb, code.erasure_degree_threshold);
    let grid = default_esn0_grid();
    let table = FerTable::synthesized(
        &code,
        geometry.symbols_per_burst,
        margin,
        args.slope,
        &patterns,
        &grid,
    );
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    table.save_csv(&args.out)?;
    eprintln!(
        "wrote {} ({} patterns, margin {margin}, slope {})",
        args.out.display(),
        patterns.len(),
        args.slope
    );
    Ok(())
}

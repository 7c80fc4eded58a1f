//! `ntnsim`: command-line frontend for the GEO bent-pipe NTN link simulator.
//!
//! Exit codes are a stable contract:
//!
//! * 0 - command succeeded (for `run`: access succeeded and traffic completed)
//! * 2 - invalid input: scenario file, SIB19 text or hex, run directory contents
//! * 3 - the simulated UE failed random access
//! * 4 - runtime error: I/O, malformed artifacts, internal failures

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ntnsim_core::phy::{select_mcs, theoretical_throughput_bps, MCS_TABLE_QAM64};
use ntnsim_core::report::{render_report, render_summary, ReportError, RunStatus, RunSummary};
use ntnsim_core::scenario::{parse_scenario, ScenarioConfig, ScenarioError};
use ntnsim_core::sib19;
use ntnsim_core::sim::{geometry_summary, link_budgets, run_scenario, write_outputs, SimError};

const EXIT_CONFIG: u8 = 2;
const EXIT_ACCESS: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Environment variable naming the default output root for run artifacts.
const OUT_ENV: &str = "NTNSIM_OUT";

#[derive(Parser)]
#[command(name = "ntnsim", version, about = "Deterministic GEO NTN link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its artifacts to <out>/<scenario name>/.
    Run {
        scenario: PathBuf,
        /// Override the seed pinned in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root; defaults to $NTNSIM_OUT, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.toml scenario in a directory, one thread per scenario.
    RunAll {
        dir: PathBuf,
        /// Output root; defaults to $NTNSIM_OUT, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the human-readable report of a completed run directory.
    Report { run_dir: PathBuf },
    /// Print the nominal link budget chain of both traffic directions.
    Linkbudget { scenario: PathBuf },
    /// Print slant ranges, propagation delays, and look angles.
    Geometry { scenario: PathBuf },
    /// SIB19 codec utilities.
    #[command(subcommand)]
    Sib19(Sib19Cmd),
}

#[derive(Subcommand)]
enum Sib19Cmd {
    /// Encode a readable field file (`name: value` lines) into wire hex.
    Encode { file: PathBuf },
    /// Decode wire hex into the readable field form.
    Decode { hex: String },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Io(_) => EXIT_RUNTIME,
            _ => EXIT_CONFIG,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::Scenario(ScenarioError::Io(_)) => EXIT_RUNTIME,
            SimError::Io(_) | SimError::Serialize(_) => EXIT_RUNTIME,
            _ => EXIT_CONFIG,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Io(_) => EXIT_RUNTIME,
            _ => EXIT_CONFIG,
        };
        Self::new(code, e.to_string())
    }
}

impl From<sib19::Sib19Error> for CliError {
    fn from(e: sib19::Sib19Error) -> Self {
        Self::new(EXIT_CONFIG, e.to_string())
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ntnsim: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Run { scenario, seed, out } => cmd_run(&scenario, seed, out),
        Cmd::RunAll { dir, out } => cmd_run_all(&dir, out),
        Cmd::Report { run_dir } => {
            print!("{}", render_report(&run_dir)?);
            Ok(0)
        }
        Cmd::Linkbudget { scenario } => cmd_linkbudget(&scenario),
        Cmd::Geometry { scenario } => cmd_geometry(&scenario),
        Cmd::Sib19(Sib19Cmd::Encode { file }) => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::new(EXIT_RUNTIME, format!("{}: {e}", file.display())))?;
            let msg = sib19::parse_readable(&text)?;
            println!("{}", sib19::encode(&msg)?.to_hex());
            Ok(0)
        }
        Cmd::Sib19(Sib19Cmd::Decode { hex }) => {
            let bytes = hex::decode(hex.trim())
                .map_err(|e| CliError::new(EXIT_CONFIG, format!("bad hex: {e}")))?;
            print!("{}", sib19::render_readable(&sib19::decode(&bytes)?));
            Ok(0)
        }
    }
}

/// Output root: flag, then environment, then ./runs.
fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Runs one parsed scenario to its run directory. Shared by `run` and
/// `run-all`; returns the exit code for this run alone.
fn execute(
    cfg: &ScenarioConfig,
    seed: Option<u64>,
    root: &Path,
) -> Result<(u8, PathBuf, RunSummary), CliError> {
    let out = run_scenario(cfg, seed)?;
    let dir = root.join(&cfg.name);
    write_outputs(&dir, &out)?;
    let code = match out.summary.status {
        RunStatus::Ok => 0,
        RunStatus::AccessFailure => EXIT_ACCESS,
    };
    Ok((code, dir, out.summary))
}

fn cmd_run(scenario: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<u8, CliError> {
    let cfg = parse_scenario(scenario)?;
    let root = out_root(out);
    let (code, dir, summary) = execute(&cfg, seed, &root)?;
    print!("{}", render_summary(&summary));
    println!("run directory: {}", dir.display());
    if code == EXIT_ACCESS {
        eprintln!("ntnsim: access failure after {} attempts", summary.access.rach_attempts);
    }
    Ok(code)
}

fn cmd_run_all(dir: &Path, out: Option<PathBuf>) -> Result<u8, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::new(EXIT_RUNTIME, format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!("no *.toml scenarios in {}", dir.display()),
        ));
    }

    let root = out_root(out);
    // Each run owns its config, RNG, and output directory; nothing is shared.
    type RunOutcome = Result<(u8, PathBuf, RunSummary), CliError>;
    let results: Vec<(String, RunOutcome)> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| {
                let root = &root;
                scope.spawn(move || {
                    let label = path.display().to_string();
                    let run = parse_scenario(path)
                        .map_err(CliError::from)
                        .and_then(|cfg| execute(&cfg, None, root));
                    (label, run)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("runner thread panicked")).collect()
    });

    let mut worst = 0u8;
    for (label, run) in &results {
        match run {
            Ok((0, dir, _)) => println!("{label}: ok ({})", dir.display()),
            Ok((code, dir, _)) => {
                println!("{label}: access failure ({})", dir.display());
                worst = worst.max(*code);
            }
            Err(e) => {
                println!("{label}: error: {}", e.message);
                worst = worst.max(e.code);
            }
        }
    }
    Ok(worst)
}

fn cmd_linkbudget(scenario: &Path) -> Result<u8, CliError> {
    let cfg = parse_scenario(scenario)?;
    let budgets = link_budgets(&cfg)?;
    println!("scenario: {}", cfg.name);
    for b in &budgets {
        println!("{}:", b.label);
        for leg in &b.legs {
            println!("  {}", leg.name);
            println!(
                "    carrier {:.4} GHz over {:.1} km: fspl {:.2} dB",
                leg.carrier_hz / 1e9,
                leg.distance_m / 1e3,
                leg.fspl_db
            );
            println!(
                "    eirp {:.2} dBW, g/t {:.2} dB/K, extra losses {:.2} dB -> c/n0 {:.2} dB-Hz",
                leg.eirp_dbw, leg.g_over_t_dbk, leg.extra_losses_db, leg.cn0_dbhz
            );
        }
        println!(
            "  cascade c/n0 {:.2} dB-Hz, snr {:.2} dB in {:.3} MHz",
            b.cascade_cn0_dbhz,
            b.snr_db,
            cfg.carrier.bandwidth_hz / 1e6
        );
        let mcs = select_mcs(b.snr_db, &MCS_TABLE_QAM64, cfg.channel.mcs_backoff_db);
        let tput = theoretical_throughput_bps(&cfg.carrier, &mcs)
            .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
        println!(
            "  mcs {} (order {}, rate {:.3}) -> {:.3} Mbps theoretical",
            mcs.index,
            mcs.modulation_order,
            mcs.code_rate,
            tput / 1e6
        );
    }
    Ok(0)
}

fn cmd_geometry(scenario: &Path) -> Result<u8, CliError> {
    let cfg = parse_scenario(scenario)?;
    let g = geometry_summary(&cfg);
    println!("scenario: {}", cfg.name);
    println!("service range: {:.3} km", g.service_range_m / 1e3);
    println!("feeder range: {:.3} km", g.feeder_range_m / 1e3);
    println!("service one-way delay: {:.6} ms", g.service_delay_s * 1e3);
    println!("feeder one-way delay: {:.6} ms", g.feeder_delay_s * 1e3);
    println!("bent-pipe rtt: {:.6} ms", g.propagation_rtt_s * 1e3);
    println!(
        "ue look: elevation {:.2} deg, azimuth {:.2} deg",
        g.ue_elevation_deg, g.ue_azimuth_deg
    );
    println!(
        "gateway look: elevation {:.2} deg, azimuth {:.2} deg",
        g.gw_elevation_deg, g.gw_azimuth_deg
    );
    Ok(0)
}

//! `polymerlab`: reproducible experiment driver over `polymerlab-core`.
//!
//! Every run is determined by its command, parameters, replicate count and
//! seed. The thread count only changes wall time. Results go to a JSON
//! [`ResultRecord`](record::ResultRecord) and, for series, a CSV file next
//! to it; `replay` re-runs a record and reports drift.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

use std::ffi::OsString;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{resolve, resolve_replay, Command, ExperimentConfig, Overrides};
use error::{CliError, CliResult, INTERNAL_EXIT};
use record::{metric_drift, read_record, write_record, ResultRecord, RECORD_VERSION};

/// Relative tolerance for floating accumulations on replay.
pub const REPLAY_TOLERANCE: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "polymerlab", version, about = "Moments of 2D directed polymers: exact kernels, Monte Carlo and asymptotic checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Monte Carlo estimate of E[W_N^q].
    Moments(RunArgs),
    /// Exact E[W_N^2] over a list of horizons.
    SecondMomentScan(RunArgs),
    /// Block schedule, parameter constraints and lemma checks.
    Schedule(RunArgs),
    /// Chen-Stein experiment for the all-pairs intersection count.
    Poisson(RunArgs),
    /// Pair meeting probability in a schedule window.
    PairProb(RunArgs),
    /// Planar Brownian disc hitting: formulas and simulation.
    Hitting(RunArgs),
    /// Local limit theorem error scan.
    Lclt(RunArgs),
    /// Large-q lower bound against a Monte Carlo moment.
    Qlarge(RunArgs),
    /// Confinement of the walks at the block boundaries.
    Confinement(RunArgs),
    /// Re-run a result record and report drift.
    Replay {
        record: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override, repeatable. Values are read as JSON when possible.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "POLYMERLAB_THREADS")]
    threads: Option<usize>,
    /// Output path for the JSON record; series go to the same path with a .csv extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// desk-small, desk-large or paper-scale-validate.
    #[arg(long)]
    preset: Option<String>,
}

impl RunArgs {
    fn overrides(self) -> Overrides {
        Overrides {
            preset: self.preset,
            config: self.config,
            set: self.set,
            seed: self.seed,
            replicates: self.replicates,
            threads: self.threads,
            out: self.out,
        }
    }
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(format!("cannot start {threads:?} threads: {e}")))
}

/// Runs one experiment and wraps the result in a record. Writes nothing.
pub fn execute(config: &ExperimentConfig) -> CliResult<(ResultRecord, Option<String>, String)> {
    let started = Instant::now();
    let outcome = pool(config.threads)?.install(|| commands::dispatch(config))?;
    let record = ResultRecord {
        version: RECORD_VERSION.to_string(),
        config: config.clone(),
        metrics: outcome.metrics,
        constraint_report: outcome.constraint_report,
        details: outcome.details,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok((record, outcome.csv, outcome.summary))
}

#[derive(Debug, Serialize)]
pub struct ReplayReport {
    pub record: PathBuf,
    /// `match`, `drift` or `different-config`.
    pub status: &'static str,
    pub max_relative_drift: f64,
    pub bit_identical: bool,
    pub details_identical: bool,
}

/// Re-runs `path` with optional overrides. A changed config is reported as
/// such and never as drift.
pub fn replay(path: &std::path::Path, o: &Overrides) -> CliResult<(ReplayReport, ResultRecord)> {
    let old = read_record(path)?;
    let config = resolve_replay(&old.config, o)?;
    let (new, _, _) = execute(&config)?;
    let (drift, identical) = metric_drift(&old.metrics, &new.metrics);
    let status = if !old.config.same_experiment(&config) {
        "different-config"
    } else if drift <= REPLAY_TOLERANCE && old.details == new.details {
        "match"
    } else {
        "drift"
    };
    Ok((
        ReplayReport {
            record: path.to_path_buf(),
            status,
            max_relative_drift: drift,
            bit_identical: identical,
            details_identical: old.details == new.details,
        },
        new,
    ))
}

fn emit(out: &mut dyn Write, text: &str) {
    let _ = writeln!(out, "{text}");
}

fn run_command(command: Command, args: RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = resolve(command, &args.overrides())?;
    let (record, csv, summary) = execute(&config)?;
    match &config.output_path {
        Some(path) => {
            write_record(&record, csv.as_deref(), path)?;
            emit(out, &format!("{}: {summary} ({:.2}s) -> {}", command.name(), record.wall_time, path.display()));
        }
        None => emit(out, &serde_json::to_string_pretty(&record).expect("records serialize")),
    }
    Ok(())
}

fn run_replay(path: PathBuf, args: RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let o = args.overrides();
    let (report, new) = replay(&path, &o)?;
    if let Some(p) = &o.out {
        write_record(&new, None, p)?;
    }
    emit(out, &serde_json::to_string(&report).expect("reports serialize"));
    match report.status {
        "match" => Ok(()),
        "drift" => Err(CliError::Drift(format!(
            "{}: metrics moved by up to {:.3e} (tolerance {REPLAY_TOLERANCE:.0e})",
            path.display(),
            report.max_relative_drift
        ))),
        _ => Err(CliError::DifferentConfig(format!(
            "{}: overrides change the experiment, so differences are not drift",
            path.display()
        ))),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let (command, args) = match cli.command {
        Sub::Replay { record, args } => return run_replay(record, args, out),
        Sub::Moments(a) => (Command::Moments, a),
        Sub::SecondMomentScan(a) => (Command::SecondMomentScan, a),
        Sub::Schedule(a) => (Command::Schedule, a),
        Sub::Poisson(a) => (Command::Poisson, a),
        Sub::PairProb(a) => (Command::PairProb, a),
        Sub::Hitting(a) => (Command::Hitting, a),
        Sub::Lclt(a) => (Command::Lclt, a),
        Sub::Qlarge(a) => (Command::Qlarge, a),
        Sub::Confinement(a) => (Command::Confinement, a),
    };
    run_command(command, args, out)
}

/// Entry point. Returns the process exit code; errors go to `err` as one
/// JSON line `{"error": category, "message": ...}`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match catch_unwind(AssertUnwindSafe(|| dispatch(cli, out))) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            let line = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            emit(err, &line.to_string());
            e.exit_code()
        }
        Err(_) => {
            emit(err, r#"{"error":"internal","message":"command panicked"}"#);
            INTERNAL_EXIT
        }
    }
}

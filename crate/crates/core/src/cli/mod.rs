//! Command-line front end: config files in, result directories out.
//!
//! Each run writes the result CSVs, their long-format `*.plot.csv`
//! companions, `summary.json` and `resolved_config.toml` into the output
//! directory. Exit status is 0 on success, 2 for an invalid config (nothing
//! is written) and 3 for a numerical failure (only `diagnostic.json`).

pub mod config;
pub mod plot;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{ExperimentConfig, ExperimentKind};
pub use plot::{emit_plot_data, from_long, to_long, Table};
pub use run::{run_experiment, Artifacts};

use crate::error::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "transmon-lru", version, about = "Leakage reduction unit simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `results/<subcommand>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// f-transition spectroscopy sweep.
    Spectroscopy(CommonArgs),
    /// Removal-fraction map over two pulse parameters.
    CalibrateLru(CommonArgs),
    /// Process tomography and Stark-phase series of an LRU pulse.
    LruTomography(CommonArgs),
    /// Per-round leakage recursion with and without LRU.
    RepeatedLru(CommonArgs),
    /// Repeated weight-2 parity checks for each LRU setting.
    ParityRounds(CommonArgs),
    /// Parity assignment and Bell-state benchmarks.
    BellBench(CommonArgs),
    /// IQ readout simulation and classification.
    ReadoutSim(CommonArgs),
    /// Fit of the measurement backaction tensor.
    FitMeasurementModel(CommonArgs),
}

impl Command {
    pub fn split(&self) -> (ExperimentKind, &CommonArgs) {
        use ExperimentKind as K;
        match self {
            Command::Spectroscopy(a) => (K::Spectroscopy, a),
            Command::CalibrateLru(a) => (K::CalibrateLru, a),
            Command::LruTomography(a) => (K::LruTomography, a),
            Command::RepeatedLru(a) => (K::RepeatedLru, a),
            Command::ParityRounds(a) => (K::ParityRounds, a),
            Command::BellBench(a) => (K::BellBench, a),
            Command::ReadoutSim(a) => (K::ReadoutSim, a),
            Command::FitMeasurementModel(a) => (K::FitMeasurementModel, a),
        }
    }
}

/// Outcome of one CLI invocation.
#[derive(Debug)]
pub struct RunReport {
    pub exit_code: u8,
    pub out_dir: PathBuf,
    pub error: Option<Error>,
}

/// Loads and resolves the config for `kind`, applying flag overrides.
pub fn prepare(kind: ExperimentKind, args: &CommonArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    if args.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    let resolved = cfg.resolve(kind)?;
    let out = resolved
        .output
        .clone()
        .unwrap_or_else(|| Path::new("results").join(kind.name()));
    Ok((resolved, out))
}

fn write_artifacts(dir: &Path, cfg: &ExperimentConfig, art: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &art.files {
        std::fs::write(dir.join(name), bytes)?;
        if plot::has_schema(name) {
            let stem = name.trim_end_matches(".csv");
            std::fs::write(dir.join(format!("{stem}.plot.csv")), emit_plot_data(name, bytes)?)?;
        }
    }
    let summary = serde_json::to_string_pretty(&art.summary).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), summary + "\n")?;
    std::fs::write(dir.join("resolved_config.toml"), cfg.to_toml()?)?;
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::Truncation { .. } => "truncation",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::OutOfWindow { .. } => "out_of_window",
        Error::NonConvergent(_) => "non_convergent",
        Error::Singular(_) => "singular",
        Error::MissingLabel(_) => "missing_label",
        Error::NotCptp(_) => "not_cptp",
        Error::Undefined(_) => "undefined",
        Error::InsufficientData(_) => "insufficient_data",
        Error::Config(_) => "config",
        Error::UnknownSchema(_) => "unknown_schema",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
    }
}

/// Runs one subcommand end to end.
pub fn execute(command: &Command) -> RunReport {
    let (kind, args) = command.split();
    let (cfg, out_dir) = match prepare(kind, args) {
        Ok(v) => v,
        Err(e) => {
            return RunReport {
                exit_code: EXIT_CONFIG,
                out_dir: args.out.clone().unwrap_or_default(),
                error: Some(e),
            }
        }
    };
    let result = match args.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_experiment(&cfg, kind)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => run_experiment(&cfg, kind),
    };
    let art = match result {
        Ok(a) => a,
        Err(e) => {
            let code = match e {
                Error::Io(_) | Error::Csv(_) => EXIT_IO,
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            };
            if code == EXIT_NUMERICAL {
                let diag = json!({
                    "subcommand": kind.name(),
                    "seed": cfg.seed,
                    "kind": error_kind(&e),
                    "error": e.to_string(),
                });
                let _ = std::fs::create_dir_all(&out_dir).and_then(|_| {
                    std::fs::write(
                        out_dir.join("diagnostic.json"),
                        serde_json::to_string_pretty(&diag).unwrap_or_default() + "\n",
                    )
                });
            }
            return RunReport {
                exit_code: code,
                out_dir,
                error: Some(e),
            };
        }
    };
    match write_artifacts(&out_dir, &cfg, &art) {
        Ok(()) => RunReport {
            exit_code: EXIT_OK,
            out_dir,
            error: None,
        },
        Err(e) => RunReport {
            exit_code: EXIT_IO,
            out_dir,
            error: Some(e),
        },
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let report = execute(&cli.command);
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    } else {
        eprintln!("results written to {}", report.out_dir.display());
    }
    report.exit_code
}

//! Command-line front end: `run`, `sweep`, `verify` and `plot-data`.
//!
//! Exit codes: 0 on success, 1 when an invariant or validation check fails,
//! 2 on I/O or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::experiment::{parse_horizons, plot_data, run_and_write, sweep_and_write};
use crate::verify::run_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_IO_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lipbandit", version, about = "Multiplayer Lipschitz bandit simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Experiment config file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output root; overrides `output_dir` from the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root seed; overrides `seed` from the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Trials per horizon; overrides `trials` from the config.
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write traces plus a summary.
    Run(Overrides),
    /// Run the experiment at several horizons and fit the regret slope.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated horizons, e.g. `2^12,2^13,2^14`.
        #[arg(long, value_name = "LIST")]
        horizons: String,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, value_name = "U64", default_value_t = 1)]
        seed: u64,
    },
    /// Write downsampled mean/std regret curves for a run directory.
    PlotData {
        /// Run directory holding `trace_trial_*.csv` files.
        #[arg(value_name = "DIR")]
        dir: PathBuf,
        /// Where to write `regret_curve.csv`; defaults to the run directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Pairing { .. } | Error::Io(_) | Error::Trace { .. } | Error::Domain(_) => {
            EXIT_IO_CONFIG
        }
        Error::Protocol(_) | Error::Analysis(_) => EXIT_INVARIANT,
    }
}

fn load(o: &Overrides) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(&o.config).map_err(|e| Error::Io(format!("{}: {e}", o.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = o.trials {
        if trials == 0 {
            return Err(Error::Config { line: 0, field: "trials".into(), message: "--trials must be positive".into() });
        }
        cfg.trials = trials;
    }
    if let Some(out) = &o.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn cmd_run(o: &Overrides) -> Result<i32, Error> {
    let cfg = load(o)?;
    let (dir, summary) = run_and_write(&cfg, &cfg.output_dir)?;
    println!("wrote {}", dir.display());
    for (k, v) in summary.entries() {
        println!("{k}={v}");
    }
    Ok(if summary.protocol_clean() { EXIT_OK } else { EXIT_INVARIANT })
}

fn cmd_sweep(o: &Overrides, horizons: &str) -> Result<i32, Error> {
    let cfg = load(o)?;
    let horizons = parse_horizons(horizons)?;
    if horizons.len() < 3 {
        return Err(Error::Config { line: 0, field: "horizons".into(), message: "at least 3 horizons are required".into() });
    }
    let (dir, result) = sweep_and_write(&cfg, &horizons, &cfg.output_dir)?;
    println!("wrote {}", dir.display());
    for r in &result.rows {
        let k = r.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        println!("T={} K={} mean_R_T={:.3} std_R_T={:.3}", r.horizon, k, r.mean_regret, r.std_regret);
    }
    println!("cross_T_slope={:.4} (stderr {:.4})", result.fit.slope, result.fit.slope_stderr);
    Ok(if result.rows.iter().all(|r| r.protocol_clean()) { EXIT_OK } else { EXIT_INVARIANT })
}

fn cmd_verify(seed: u64) -> i32 {
    let outcomes = run_suite(seed);
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        eprintln!("failed: {}", failed.join(", "));
        EXIT_INVARIANT
    }
}

fn cmd_plot_data(dir: &Path, out: Option<&Path>) -> Result<i32, Error> {
    let csv = plot_data(dir)?;
    let target = out.unwrap_or(dir);
    fs::create_dir_all(target)?;
    let path = target.join("regret_curve.csv");
    fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(o) => cmd_run(o),
        Command::Sweep { overrides, horizons } => cmd_sweep(overrides, horizons),
        Command::Verify { seed } => Ok(cmd_verify(*seed)),
        Command::PlotData { dir, out } => cmd_plot_data(dir, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

//! Multi-trial experiments and their on-disk outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::aggregate::{aggregate_trials, cross_horizon_slope, downsample_curves, Fit};
use crate::harness::trace_io::{parse_trace_csv, summary_to_text, trace_to_csv};
use crate::harness::{run_episode, Episode};
use crate::rng::trial_seed;

pub const MAX_CURVE_POINTS: usize = 1000;

/// Run every trial of `cfg` at `horizon`, in parallel. Trial `i` uses
/// `trial_seed(cfg.seed, i)`, so results do not depend on scheduling.
pub fn run_trials(cfg: &ExperimentConfig, horizon: u64) -> Result<Vec<Episode>> {
    let env = cfg.env.build()?;
    let spec = cfg.policy();
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_episode(&env, cfg.variant, &spec, horizon, trial_seed(cfg.seed, i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub algorithm: String,
    pub horizon: u64,
    pub trials: u64,
    pub k: Option<u32>,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub fit: Fit,
    pub good_event_frequency: f64,
    pub miscoordination_count: u64,
    pub coordination_failures: u64,
    pub desired_set_mismatches: u64,
}

impl ExperimentSummary {
    pub fn entries(&self) -> Vec<(String, String)> {
        let k = self.k.map_or_else(|| "none".to_string(), |k| k.to_string());
        [
            ("config_hash", self.config_hash.clone()),
            ("algorithm", self.algorithm.clone()),
            ("T", self.horizon.to_string()),
            ("trials", self.trials.to_string()),
            ("K", k),
            ("mean_R_T", self.mean_regret.to_string()),
            ("std_R_T", self.std_regret.to_string()),
            ("slope", self.fit.slope.to_string()),
            ("slope_stderr", self.fit.slope_stderr.to_string()),
            ("good_event_frequency", self.good_event_frequency.to_string()),
            ("miscoordination_count", self.miscoordination_count.to_string()),
            ("coordination_failures", self.coordination_failures.to_string()),
            ("desired_set_mismatches", self.desired_set_mismatches.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Whether every runtime monitor other than the good event stayed clean.
    pub fn protocol_clean(&self) -> bool {
        self.coordination_failures == 0 && self.desired_set_mismatches == 0
    }
}

pub fn summarize(cfg: &ExperimentConfig, horizon: u64, episodes: &[Episode]) -> Result<ExperimentSummary> {
    let curves: Vec<&[f64]> = episodes.iter().map(|e| e.trace.cumulative.as_slice()).collect();
    let agg = aggregate_trials(&curves)?;
    let n = episodes.len() as f64;
    Ok(ExperimentSummary {
        config_hash: cfg.hash(),
        algorithm: cfg.algorithm.to_string(),
        horizon,
        trials: episodes.len() as u64,
        k: episodes[0].diagnostics.k,
        mean_regret: agg.mean_final,
        std_regret: agg.std_final,
        fit: agg.fit,
        good_event_frequency: episodes.iter().filter(|e| e.good_event.held).count() as f64 / n,
        miscoordination_count: episodes.iter().map(|e| e.diagnostics.miscoordination).sum(),
        coordination_failures: episodes.iter().map(|e| e.diagnostics.coordination_failures).sum(),
        desired_set_mismatches: episodes.iter().map(|e| e.diagnostics.desired_set_mismatches).sum(),
    })
}

/// Create a fresh `run-<hash>-<unix seconds>` directory under `root`,
/// never reusing an existing one.
pub fn fresh_run_dir(root: &Path, hash: &str) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let base = format!("run-{hash}-{now}");
    for n in 0u32.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("u32 suffixes exhausted")
}

pub fn trace_file_name(trial: usize) -> String {
    format!("trace_trial_{trial:04}.csv")
}

/// Run `cfg` and write its config, traces and summary into a new run
/// directory under `root`. Returns the directory and the summary.
pub fn run_and_write(cfg: &ExperimentConfig, root: &Path) -> Result<(PathBuf, ExperimentSummary)> {
    let episodes = run_trials(cfg, cfg.horizon)?;
    let summary = summarize(cfg, cfg.horizon, &episodes)?;
    let dir = fresh_run_dir(root, &summary.config_hash)?;
    fs::write(dir.join("config.txt"), cfg.to_text())?;
    for (i, ep) in episodes.iter().enumerate() {
        fs::write(dir.join(trace_file_name(i)), trace_to_csv(&ep.trace))?;
    }
    fs::write(dir.join("summary.txt"), summary_to_text(&summary.entries()))?;
    Ok((dir, summary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<ExperimentSummary>,
    pub fit: Fit,
}

pub fn sweep(cfg: &ExperimentConfig, horizons: &[u64]) -> Result<SweepResult> {
    if horizons.len() < 3 {
        return Err(Error::Analysis("a sweep needs at least 3 horizons".into()));
    }
    let mut rows = vec![];
    for &t in horizons {
        let episodes = run_trials(cfg, t)?;
        rows.push(summarize(cfg, t, &episodes)?);
    }
    let fit = cross_horizon_slope(&rows.iter().map(|r| (r.horizon, r.mean_regret)).collect::<Vec<_>>())?;
    Ok(SweepResult { rows, fit })
}

pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut out = String::from("T,K,mean_R_T,std_R_T,slope,good_event_frequency\n");
    for r in &result.rows {
        let k = r.k.map_or_else(String::new, |k| k.to_string());
        out += &format!(
            "{},{},{},{},{},{}\n",
            r.horizon, k, r.mean_regret, r.std_regret, r.fit.slope, r.good_event_frequency
        );
    }
    out
}

/// Run the sweep and write `sweep.csv` plus `sweep_summary.txt` into a new
/// run directory under `root`.
pub fn sweep_and_write(cfg: &ExperimentConfig, horizons: &[u64], root: &Path) -> Result<(PathBuf, SweepResult)> {
    let result = sweep(cfg, horizons)?;
    let dir = fresh_run_dir(root, &cfg.hash())?;
    fs::write(dir.join("config.txt"), cfg.to_text())?;
    fs::write(dir.join("sweep.csv"), sweep_to_csv(&result))?;
    let entries = vec![
        ("config_hash".to_string(), cfg.hash()),
        ("horizons".to_string(), horizons.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        ("cross_T_slope".to_string(), result.fit.slope.to_string()),
        ("cross_T_slope_stderr".to_string(), result.fit.slope_stderr.to_string()),
    ];
    fs::write(dir.join("sweep_summary.txt"), summary_to_text(&entries))?;
    Ok((dir, result))
}

/// Parse a horizon list such as `4096,8192,16384` or `2^12,2^13,2^14`.
/// Values must be at least 3 and strictly increasing.
pub fn parse_horizons(text: &str) -> Result<Vec<u64>> {
    let bad = |msg: String| Error::config(0, "horizons", msg);
    let mut out: Vec<u64> = vec![];
    for part in text.split(',') {
        let part = part.trim();
        let value = match part.split_once('^') {
            Some((base, exp)) => {
                let base: u64 = base.trim().parse().map_err(|_| bad(format!("`{part}` is not an integer power")))?;
                let exp: u32 = exp.trim().parse().map_err(|_| bad(format!("`{part}` is not an integer power")))?;
                base.checked_pow(exp).ok_or_else(|| bad(format!("`{part}` overflows")))?
            }
            None => part.parse().map_err(|_| bad(format!("`{part}` is not an integer")))?,
        };
        if value < 3 {
            return Err(bad(format!("horizon {value} is below 3")));
        }
        if out.last().is_some_and(|&prev| prev >= value) {
            return Err(bad("horizons must be strictly increasing".into()));
        }
        out.push(value);
    }
    Ok(out)
}

/// Trace files of a run directory, in trial order.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trace_trial_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Io(format!("no trace files in {}", dir.display())));
    }
    Ok(files)
}

/// Mean and standard deviation regret curves of a run directory as CSV
/// with at most [`MAX_CURVE_POINTS`] rows.
pub fn plot_data(dir: &Path) -> Result<String> {
    let mut curves = vec![];
    for path in trace_files(dir)? {
        let text = fs::read_to_string(&path)?;
        let rows = parse_trace_csv(&text).map_err(|e| match e {
            Error::Trace { line, message } => Error::Trace { line, message: format!("{}: {message}", path.display()) },
            other => other,
        })?;
        curves.push(rows.into_iter().map(|r| r.cum_regret).collect::<Vec<f64>>());
    }
    let stats = downsample_curves(&curves, MAX_CURVE_POINTS)
        .map_err(|e| Error::Trace { line: 0, message: e.to_string() })?;
    let mut out = String::from("t,mean,std\n");
    for s in stats {
        out += &format!("{},{},{}\n", s.t, s.mean, s.std);
    }
    Ok(out)
}

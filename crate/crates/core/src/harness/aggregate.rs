//! Multi-trial statistics: mean and spread of cumulative regret at
//! checkpoints, and least-squares slopes in log-log space.

use crate::error::{Error, Result};

/// Ordinary least-squares line with the slope's standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

/// Fit `y = a + b·x`.
pub fn least_squares(points: &[(f64, f64)]) -> Result<Fit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Analysis(format!("need at least 2 points for a fit, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Analysis("all x values coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit { slope, intercept, slope_stderr, points: n })
}

/// Fit `ln y` against `ln x`, skipping points with a non-positive coordinate.
pub fn log_log_fit(points: &[(f64, f64)]) -> Result<Fit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    least_squares(&logs)
}

/// Up to 17 log-spaced rounds in `[T/16, T]`, deduplicated, ascending.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let lo = (horizon / 16).max(1) as f64;
    let hi = horizon as f64;
    let mut out: Vec<u64> = (0..17)
        .map(|i| (lo * (hi / lo).powf(i as f64 / 16.0)).round() as u64)
        .map(|t| t.clamp(1, horizon))
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointStat {
    pub t: u64,
    pub mean: f64,
    /// Population standard deviation across trials.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub horizon: u64,
    pub checkpoints: Vec<CheckpointStat>,
    pub mean_final: f64,
    pub std_final: f64,
    /// Slope of log mean regret against log t over the checkpoints.
    pub fit: Fit,
}

/// Mean and population standard deviation of the values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    (mean, (m2 / values.len() as f64).sqrt())
}

/// Summarize cumulative-regret curves of equal length.
pub fn aggregate_trials<C: AsRef<[f64]>>(curves: &[C]) -> Result<TrialSummary> {
    let first = curves.first().ok_or_else(|| Error::Analysis("no trials to aggregate".into()))?;
    let horizon = first.as_ref().len() as u64;
    if horizon == 0 || curves.iter().any(|c| c.as_ref().len() as u64 != horizon) {
        return Err(Error::Analysis("trials must share a positive horizon".into()));
    }
    let stat = |t: u64| {
        let values: Vec<f64> = curves.iter().map(|c| c.as_ref()[(t - 1) as usize]).collect();
        let (mean, std) = mean_std(&values);
        CheckpointStat { t, mean, std }
    };
    let points = checkpoints(horizon);
    if points.len() < 2 {
        return Err(Error::Analysis("horizon too short for two checkpoints".into()));
    }
    let stats: Vec<CheckpointStat> = points.into_iter().map(stat).collect();
    let fit = log_log_fit(&stats.iter().map(|s| (s.t as f64, s.mean)).collect::<Vec<_>>())?;
    let last = stat(horizon);
    Ok(TrialSummary {
        trials: curves.len(),
        horizon,
        checkpoints: stats,
        mean_final: last.mean,
        std_final: last.std,
        fit,
    })
}

/// Slope of log mean `R_T` against log `T` across horizons.
pub fn cross_horizon_slope(rows: &[(u64, f64)]) -> Result<Fit> {
    log_log_fit(&rows.iter().map(|&(t, r)| (t as f64, r)).collect::<Vec<_>>())
}

/// Mean and standard deviation curves at no more than `max_points` rounds,
/// always including the final round.
pub fn downsample_curves<C: AsRef<[f64]>>(curves: &[C], max_points: usize) -> Result<Vec<CheckpointStat>> {
    let first = curves.first().ok_or_else(|| Error::Analysis("no curves".into()))?;
    let len = first.as_ref().len();
    if len == 0 || curves.iter().any(|c| c.as_ref().len() != len) {
        return Err(Error::Analysis("curves must share a positive length".into()));
    }
    if max_points == 0 {
        return Err(Error::Analysis("max_points must be positive".into()));
    }
    let step = len.div_ceil(max_points);
    let mut rounds: Vec<usize> = (step..=len).step_by(step).collect();
    if rounds.last() != Some(&len) {
        if rounds.len() == max_points {
            rounds.pop();
        }
        rounds.push(len);
    }
    Ok(rounds
        .into_iter()
        .map(|t| {
            let values: Vec<f64> = curves.iter().map(|c| c.as_ref()[t - 1]).collect();
            let (mean, std) = mean_std(&values);
            CheckpointStat { t: t as u64, mean, std }
        })
        .collect())
}

//! Post-hoc checks of the inequalities the regret analysis relies on.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{EnvModel, Noise};
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::harness::RegretTrace;
use crate::protocol::{ArmSummary, ProblemVariant};
use crate::rng::Stream;

/// Both sides of `R_T ≤ T·L/K + R_K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationReport {
    /// Continuum regret against `μ*`.
    pub continuum: f64,
    /// Regret against the best grid mean `μ*_K`.
    pub grid: f64,
    pub best_grid_mean: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Best mean over all grid arms, by exhaustive scan.
pub fn best_grid_mean(env: &EnvModel, grid: &GridSpec) -> Result<f64> {
    let size = grid.size()?;
    let mut best = f64::NEG_INFINITY;
    for r in 0..size {
        best = best.max(env.mean_at(&grid.coords(&grid.unrank(r)?))?);
    }
    Ok(best)
}

pub fn discretization_check(env: &EnvModel, k: u32, trace: &RegretTrace) -> Result<DiscretizationReport> {
    let grid = GridSpec::new(k, env.players(), env.dim())?;
    let best_grid = best_grid_mean(env, &grid)?;
    let best = env.optimal_mean().1;
    let mut continuum = 0.0;
    let mut regret_k = 0.0;
    for t in 1..=trace.len() {
        let mu = env.mean_at(trace.arm(t))?;
        continuum += best - mu;
        regret_k += best_grid - mu;
    }
    let bound = trace.len() as f64 * env.lipschitz() / k as f64 + regret_k;
    Ok(DiscretizationReport {
        continuum,
        grid: regret_k,
        best_grid_mean: best_grid,
        bound,
        holds: continuum <= bound + 1e-9 * bound.abs().max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub eps: f64,
    pub frequency: f64,
    /// `exp(−nε²/2σ²)`
    pub bound: f64,
    /// Bound plus three Monte Carlo standard deviations plus `10⁻³`.
    pub limit: f64,
    pub pass: bool,
}

/// Empirical `P(μ̂_n − μ ≥ ε)` against the subgaussian tail bound.
pub fn concentration_check(
    noise: Noise,
    mu: f64,
    n: u64,
    eps_grid: &[f64],
    trials: u64,
    rng: &mut Stream,
) -> Result<Vec<ConcentrationRow>> {
    if n == 0 || trials == 0 {
        return Err(Error::domain("n and trials must be positive"));
    }
    if let Noise::Bernoulli = noise {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::domain("Bernoulli mean outside [0,1]"));
        }
    }
    let sigma = noise.subgaussian_sigma();
    let mut exceed = vec![0u64; eps_grid.len()];
    for _ in 0..trials {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += match noise {
                Noise::Gaussian { sigma } => mu + sigma * rng.sample::<f64, _>(StandardNormal),
                Noise::Bernoulli => f64::from(rng.random::<f64>() < mu),
            };
        }
        let dev = sum / n as f64 - mu;
        for (count, &eps) in exceed.iter_mut().zip(eps_grid) {
            if dev >= eps {
                *count += 1;
            }
        }
    }
    Ok(eps_grid
        .iter()
        .zip(exceed)
        .map(|(&eps, count)| {
            let bound = if sigma == 0.0 {
                if eps > 0.0 { 0.0 } else { 1.0 }
            } else {
                (-(n as f64) * eps * eps / (2.0 * sigma * sigma)).exp()
            };
            let limit = bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt() + 1e-3;
            let frequency = count as f64 / trials as f64;
            ConcentrationRow { eps, frequency, bound, limit, pass: frequency <= limit }
        })
        .collect())
}

/// Leading constant of the per-arm pull bound for a problem variant.
pub fn pull_bound_constant(variant: ProblemVariant) -> f64 {
    match variant {
        ProblemVariant::B => {
            let c = 6.0 * 3f64.sqrt() + 2.0 * 6f64.sqrt();
            c * c
        }
        _ => 54.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullCountViolation {
    pub center: Vec<f64>,
    pub pulls: u64,
    pub gap: f64,
    pub bound: f64,
}

/// Arms with a positive gap pulled more often than `C·ln T/Δ² + slack`,
/// where the slack is one sweep of the arm table for Problem B and zero
/// otherwise.
pub fn pull_count_violations(
    env: &EnvModel,
    arms: &[ArmSummary],
    variant: ProblemVariant,
    horizon: u64,
) -> Result<Vec<PullCountViolation>> {
    let c = pull_bound_constant(variant);
    let slack = if variant == ProblemVariant::B { arms.len() as f64 } else { 0.0 };
    let ln_t = (horizon as f64).ln();
    let best = env.optimal_mean().1;
    let mut out = vec![];
    for a in arms {
        let gap = best - env.mean_at(&a.center)?;
        if gap <= 0.0 {
            continue;
        }
        let bound = c * ln_t / (gap * gap) + slack;
        if a.stats.n as f64 > bound {
            out.push(PullCountViolation { center: a.center.clone(), pulls: a.stats.n, gap, bound });
        }
    }
    Ok(out)
}

/// Eliminated balls that contain the optimum `a*`.
pub fn elimination_safety_violations(env: &EnvModel, arms: &[ArmSummary]) -> Vec<ArmSummary> {
    let star = env.optimal_mean().0.coords();
    arms.iter()
        .filter(|a| matches!(a.eliminated, Some((r, _)) if env.norm().distance(star, &a.center) <= r))
        .cloned()
        .collect()
}

/// Eliminated grid arms whose mean equals the best grid mean.
pub fn best_grid_arm_eliminated(env: &EnvModel, arms: &[ArmSummary]) -> Result<Vec<ArmSummary>> {
    let mut best = f64::NEG_INFINITY;
    for a in arms {
        best = best.max(env.mean_at(&a.center)?);
    }
    let mut out = vec![];
    for a in arms {
        if a.eliminated.is_some() && env.mean_at(&a.center)? == best {
            out.push(a.clone());
        }
    }
    Ok(out)
}

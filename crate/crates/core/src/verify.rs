//! Self-check suite behind `lipbandit verify`.

use rand::Rng;

use crate::env::{EnvModel, FamilyKind, Noise, Norm, Peak};
use crate::error::Result;
use crate::geometry::{GridIndex, GridSpec};
use crate::harness::checks::{
    best_grid_arm_eliminated, concentration_check, elimination_safety_violations, discretization_check,
    pull_count_violations,
};
use crate::harness::oracle::{centralized_oracle, OracleKind};
use crate::harness::{run_episode, Algorithm, PolicySpec};
use crate::protocol::ProblemVariant;
use crate::rng::{stream, trial_seed, Purpose};
use crate::uniform::{mdsee_schedule, ExploreGrowth};
use crate::zooming::DEFAULT_DOUBLING_CAP;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((pass, detail)) => CheckOutcome { name, pass, detail },
        Err(e) => CheckOutcome { name, pass: false, detail: e.to_string() },
    }
}

fn benchmark_cone(noise: Noise) -> EnvModel {
    EnvModel::cone(2, 1, 1.0, Norm::L2, vec![0.37, 0.62], 1.0, noise).expect("valid cone")
}

/// Every check, in a fixed order. Deterministic in `seed`.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    vec![
        outcome("rank_unrank_exhaustive", rank_unrank()),
        outcome("lipschitz_verification", lipschitz(seed)),
        outcome("concentration", concentration(seed)),
        outcome("oracle_equivalence_grid", oracle_grid(seed)),
        outcome("oracle_equivalence_zoom", oracle_zoom(seed)),
        outcome("tie_break_order", tie_break()),
        outcome("schedule_purity", schedule()),
        outcome("discretization_sweep", discretization(seed)),
        outcome("desired_set_equality", desired_sets(seed)),
        outcome("good_event_frequency", good_event(seed)),
        outcome("keep_best", keep_best(seed)),
        outcome("pull_count_bounds", pull_counts(seed)),
    ]
}

fn rank_unrank() -> Result<(bool, String)> {
    let mut checked = 0u64;
    for (k, m, d) in [(1, 1, 1), (2, 2, 1), (4, 2, 1), (3, 3, 1), (2, 2, 2), (5, 1, 3)] {
        let grid = GridSpec::new(k, m, d)?;
        let mut prev: Option<GridIndex> = None;
        for r in 0..grid.size()? {
            let idx = grid.unrank(r)?;
            if grid.rank(&idx)? != r || prev.as_ref().is_some_and(|p| p >= &idx) {
                return Ok((false, format!("K={k} M={m} d={d} rank {r}")));
            }
            prev = Some(idx);
            checked += 1;
        }
    }
    Ok((true, format!("{checked} ranks")))
}

fn lipschitz(seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, Purpose::Auxiliary(1));
    let mut worst: f64 = 0.0;
    for norm in [Norm::L1, Norm::L2, Norm::LInf] {
        for family in [FamilyKind::Cone, FamilyKind::MultiPeak, FamilyKind::AffineCap] {
            let count = if family == FamilyKind::MultiPeak { 3 } else { 1 };
            let peaks = (0..count)
                .map(|_| Peak { location: (0..4).map(|_| rng.random()).collect(), height: rng.random() })
                .collect();
            let env = EnvModel::new(2, 2, 1.5, norm, family, peaks, Noise::Bernoulli)?;
            let report = env.verify_lipschitz(5_000, &mut rng)?;
            if !report.pass {
                return Ok((false, format!("{family} {norm}: ratio {}", report.max_ratio)));
            }
            worst = worst.max(report.max_ratio / 1.5);
        }
    }
    Ok((true, format!("max ratio / L = {worst:.4}")))
}

fn concentration(seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, Purpose::Auxiliary(2));
    let rows = concentration_check(Noise::Gaussian { sigma: 1.0 }, 0.0, 50, &[0.2, 0.4, 0.6], 100_000, &mut rng)?;
    let detail = rows
        .iter()
        .map(|r| format!("eps={} freq={:.5} limit={:.5}", r.eps, r.frequency, r.limit))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((rows.iter().all(|r| r.pass), detail))
}

fn oracle_grid(seed: u64) -> Result<(bool, String)> {
    let env = benchmark_cone(Noise::Bernoulli);
    for k in [2, 4] {
        for s in 0..5 {
            let s = trial_seed(seed, s);
            let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::McabA).with_k(k), 2000, s)?;
            let oracle = centralized_oracle(&env, OracleKind::UcbGrid { k }, 2000, s)?;
            if let Some(t) = (1..=2000).find(|&t| ep.trace.arm(t) != oracle[t - 1].as_slice()) {
                return Ok((false, format!("K={k} seed={s}: first divergence at round {t}")));
            }
        }
    }
    Ok((true, "10 runs identical".into()))
}

fn oracle_zoom(seed: u64) -> Result<(bool, String)> {
    let env = benchmark_cone(Noise::Bernoulli);
    for s in 0..5 {
        let s = trial_seed(seed, s);
        let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::MzoomA), 2000, s)?;
        let oracle = centralized_oracle(&env, OracleKind::Zoom { doubling_cap: DEFAULT_DOUBLING_CAP }, 2000, s)?;
        if let Some(t) = (1..=2000).find(|&t| ep.trace.arm(t) != oracle[t - 1].as_slice()) {
            return Ok((false, format!("seed={s}: first divergence at round {t}")));
        }
    }
    Ok((true, "5 runs identical".into()))
}

/// With identical rewards everywhere, the smallest-rank maximizer rule makes
/// the UCB phase walk the grid in rank order.
fn tie_break() -> Result<(bool, String)> {
    let env = EnvModel::cone(2, 1, 1.0, Norm::L2, vec![0.5, 0.5], 0.0, Noise::Gaussian { sigma: 0.0 })?;
    let k = 3;
    let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::McabA).with_k(k), 64, 1)?;
    let ranks = ep.trace.ranks.as_ref().expect("grid trace");
    let size = 16;
    let expect: Vec<u64> = (0..64).map(|t| t % size).collect();
    if *ranks == expect {
        Ok((true, "UCB phase visits ranks in increasing order".into()))
    } else {
        Ok((false, format!("ranks {:?}", &ranks[16..32])))
    }
}

fn schedule() -> Result<(bool, String)> {
    for k_joint in [4, 25, 36] {
        for t in (1..(1u64 << 20)).step_by(4099) {
            let a = mdsee_schedule(t, k_joint, ExploreGrowth::Sqrt);
            if a != mdsee_schedule(t, k_joint, ExploreGrowth::Sqrt) {
                return Ok((false, format!("K_joint={k_joint} t={t}")));
            }
        }
    }
    Ok((true, "pure".into()))
}

/// Random cone configurations satisfying the nearest-marker premise
/// (`L∞` always, `L2` when `Md ≤ 4`).
fn discretization(seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, Purpose::Auxiliary(3));
    let algorithms = [Algorithm::McabA, Algorithm::McabB, Algorithm::McabC];
    for i in 0..20 {
        let norm = if rng.random::<bool>() { Norm::L2 } else { Norm::LInf };
        let peak: Vec<f64> = (0..2).map(|_| rng.random()).collect();
        let l = rng.random_range(0.2..3.0);
        let env = EnvModel::cone(2, 1, l, norm, peak, rng.random_range(0.5..1.0), Noise::Bernoulli)?;
        let k = rng.random_range(4..=16);
        let algo = algorithms[i % 3];
        let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo).with_k(k), 1000, rng.random())?;
        let rep = discretization_check(&env, k, &ep.trace)?;
        if !rep.holds {
            return Ok((false, format!("config {i}: R_T={} bound={}", rep.continuum, rep.bound)));
        }
    }
    Ok((true, "20 configs".into()))
}

fn desired_sets(seed: u64) -> Result<(bool, String)> {
    for m in [2, 3] {
        let peak: Vec<f64> = (0..m).map(|i| 0.3 + 0.2 * i as f64).collect();
        let env = EnvModel::cone(m, 1, 1.0, Norm::L2, peak, 1.0, Noise::Bernoulli)?;
        for algo in [Algorithm::McabB, Algorithm::MzoomB] {
            for s in 0..3 {
                let ep = run_episode(&env, ProblemVariant::B, &PolicySpec::new(algo), 3000, trial_seed(seed, s))?;
                if ep.diagnostics.desired_set_mismatches > 0 {
                    return Ok((false, format!("{algo} M={m}: first mismatch round {:?}", ep.diagnostics.first_desired_set_mismatch)));
                }
            }
        }
    }
    Ok((true, "12 runs consistent".into()))
}

fn good_event(seed: u64) -> Result<(bool, String)> {
    let env = benchmark_cone(Noise::Bernoulli);
    let trials = 300;
    let mut violations = 0;
    for s in 0..trials {
        let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::McabA), 1000, trial_seed(seed ^ 0x5eed, s))?;
        violations += u64::from(!ep.good_event.held);
    }
    let freq = violations as f64 / trials as f64;
    Ok((freq <= 0.02, format!("violation frequency {freq:.4}")))
}

fn keep_best(seed: u64) -> Result<(bool, String)> {
    let env = benchmark_cone(Noise::Bernoulli);
    let mut good_runs = 0;
    for s in 0..10 {
        for algo in [Algorithm::MzoomB, Algorithm::McabB] {
            let ep = run_episode(&env, ProblemVariant::B, &PolicySpec::new(algo), 5000, trial_seed(seed, 100 + s))?;
            if !ep.good_event.held {
                continue;
            }
            good_runs += 1;
            for arms in &ep.diagnostics.final_arms {
                let bad = if algo == Algorithm::MzoomB {
                    elimination_safety_violations(&env, arms).len()
                } else {
                    best_grid_arm_eliminated(&env, arms)?.len()
                };
                if bad > 0 {
                    return Ok((false, format!("{algo} seed {s}: {bad} unsafe eliminations")));
                }
            }
        }
    }
    Ok((true, format!("{good_runs} good-event runs")))
}

fn pull_counts(seed: u64) -> Result<(bool, String)> {
    let env = benchmark_cone(Noise::Bernoulli);
    let mut checked = 0;
    for s in 0..5 {
        for algo in [Algorithm::MzoomA, Algorithm::MzoomB] {
            let horizon = 5000;
            let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo), horizon, trial_seed(seed, 200 + s))?;
            if !ep.good_event.held {
                continue;
            }
            checked += 1;
            let bad = pull_count_violations(&env, &ep.diagnostics.final_arms[0], algo.variant(), horizon)?;
            if let Some(v) = bad.first() {
                return Ok((false, format!("{algo}: n={} bound={:.1} gap={:.4}", v.pulls, v.bound, v.gap)));
            }
        }
    }
    Ok((true, format!("{checked} good-event runs")))
}

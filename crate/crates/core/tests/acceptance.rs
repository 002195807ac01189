//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use lipbandit::config::{EnvConfig, ExperimentConfig};
use lipbandit::env::{EnvModel, FamilyKind, Noise, Norm, Peak};
use lipbandit::experiment::{run_and_write, trace_files};
use lipbandit::harness::aggregate::cross_horizon_slope;
use lipbandit::harness::checks::{
    concentration_check, elimination_safety_violations, discretization_check, pull_count_violations,
};
use lipbandit::harness::oracle::{centralized_oracle, OracleKind};
use lipbandit::harness::{run_episode, Algorithm, PolicySpec};
use lipbandit::protocol::ProblemVariant;
use lipbandit::rng::{stream, trial_seed, Purpose};
use lipbandit::uniform::ExploreGrowth;
use lipbandit::zooming::DEFAULT_DOUBLING_CAP;

const ROOT: u64 = 20_240_601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cone(players: usize, peak: Vec<f64>, noise: Noise) -> EnvModel {
    EnvModel::cone(players, 1, 1.0, Norm::L2, peak, 1.0, noise).expect("valid cone")
}

fn benchmark() -> EnvModel {
    cone(2, vec![0.37, 0.62], Noise::Bernoulli)
}

fn first_divergence(trace: &lipbandit::harness::RegretTrace, oracle: &[Vec<f64>]) -> Option<usize> {
    (1..=trace.len()).find(|&t| trace.arm(t) != oracle[t - 1].as_slice())
}

fn c1_oracle_grid() -> Outcome {
    let env = benchmark();
    let mut runs = 0;
    for k in [2, 4] {
        for s in 0..20 {
            let seed = trial_seed(ROOT, s);
            let spec = PolicySpec::new(Algorithm::McabA).with_k(k);
            let ep = run_episode(&env, ProblemVariant::A, &spec, 2000, seed).map_err(|e| e.to_string())?;
            let oracle = centralized_oracle(&env, OracleKind::UcbGrid { k }, 2000, seed).map_err(|e| e.to_string())?;
            if let Some(t) = first_divergence(&ep.trace, &oracle) {
                return Err(format!("K={k} seed {s}: first divergence at round {t}"));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs bit-identical"))
}

fn c2_oracle_zoom() -> Outcome {
    let env = benchmark();
    for s in 0..20 {
        let seed = trial_seed(ROOT, s);
        let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::MzoomA), 2000, seed)
            .map_err(|e| e.to_string())?;
        let oracle = centralized_oracle(&env, OracleKind::Zoom { doubling_cap: DEFAULT_DOUBLING_CAP }, 2000, seed)
            .map_err(|e| e.to_string())?;
        if let Some(t) = first_divergence(&ep.trace, &oracle) {
            return Err(format!("seed {s}: first divergence at round {t}"));
        }
    }
    Ok("20 runs bit-identical".into())
}

fn c3_desired_sets() -> Outcome {
    let mut runs = 0;
    for m in [2, 3] {
        let peak: Vec<f64> = (0..m).map(|i| 0.37 + 0.25 * i as f64 / m as f64).collect();
        let env = cone(m, peak, Noise::Bernoulli);
        for algo in [Algorithm::McabB, Algorithm::MzoomB] {
            let bad: Vec<String> = (0..50u64)
                .into_par_iter()
                .map(|s| {
                    let ep = run_episode(&env, ProblemVariant::B, &PolicySpec::new(algo), 5000, trial_seed(ROOT, s))
                        .map_err(|e| e.to_string())?;
                    Ok::<_, String>((s, ep.diagnostics.desired_set_mismatches, ep.diagnostics.first_desired_set_mismatch))
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|r| r.1 > 0)
                .map(|(s, n, first)| format!("{algo} M={m} seed {s}: {n} rounds, first {first:?}"))
                .collect();
            if let Some(b) = bad.first() {
                return Err(b.clone());
            }
            runs += 50;
        }
    }
    Ok(format!("{runs} runs, desired sets equal every round"))
}

fn c4_good_event() -> Outcome {
    let env = benchmark();
    let per_algo = 400u64;
    let mut violations = 0;
    let mut detail = vec![];
    for (i, algo) in Algorithm::ALL.into_iter().enumerate() {
        let v: u64 = (0..per_algo)
            .into_par_iter()
            .map(|s| {
                run_episode(&env, algo.variant(), &PolicySpec::new(algo), 1000, trial_seed(ROOT + i as u64, s))
                    .map(|ep| u64::from(!ep.good_event.held))
            })
            .sum::<Result<u64, _>>()
            .map_err(|e| e.to_string())?;
        detail.push(format!("{algo}={v}"));
        violations += v;
    }
    let freq = violations as f64 / (per_algo * 5) as f64;
    let msg = format!("violation frequency {freq:.4} over 2000 trials ({})", detail.join(" "));
    if freq <= 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_concentration() -> Outcome {
    let mut rng = stream(ROOT, Purpose::Auxiliary(5));
    let rows = concentration_check(Noise::Gaussian { sigma: 1.0 }, 0.0, 50, &[0.2, 0.4, 0.6], 100_000, &mut rng)
        .map_err(|e| e.to_string())?;
    let msg = rows
        .iter()
        .map(|r| format!("eps={}: {:.5} <= {:.5}", r.eps, r.frequency, r.limit))
        .collect::<Vec<_>>()
        .join(", ");
    if rows.iter().all(|r| r.pass) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c6_discretization() -> Outcome {
    let mut rng = stream(ROOT, Purpose::Auxiliary(6));
    let algorithms = [Algorithm::McabA, Algorithm::McabB, Algorithm::McabC];
    let mut min_slack = f64::INFINITY;
    for i in 0..100 {
        let norm = if rng.random::<bool>() { Norm::L2 } else { Norm::LInf };
        let peak: Vec<f64> = (0..2).map(|_| rng.random()).collect();
        let l = rng.random_range(0.25..4.0);
        let h = rng.random_range(0.5..=1.0);
        let env = EnvModel::cone(2, 1, l, norm, peak, h, Noise::Bernoulli).map_err(|e| e.to_string())?;
        let k = rng.random_range(4..=16u32);
        let algo = algorithms[i % 3];
        let seed = rng.random();
        let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo).with_k(k), 2000, seed)
            .map_err(|e| e.to_string())?;
        let rep = discretization_check(&env, k, &ep.trace).map_err(|e| e.to_string())?;
        if !rep.holds {
            return Err(format!("config {i} ({algo}, K={k}, {norm}): R_T={} > {}", rep.continuum, rep.bound));
        }
        min_slack = min_slack.min(rep.bound - rep.continuum);
    }
    Ok(format!("100 configs, zero violations (smallest slack {min_slack:.3})"))
}

fn c7_keep_best() -> Outcome {
    let env = benchmark();
    let results: Vec<(u64, bool, usize)> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let ep = run_episode(&env, ProblemVariant::B, &PolicySpec::new(Algorithm::MzoomB), 10_000, trial_seed(ROOT, s))
                .map_err(|e| e.to_string())?;
            let bad = ep.diagnostics.final_arms.iter().map(|arms| elimination_safety_violations(&env, arms).len()).sum();
            Ok::<_, String>((s, ep.good_event.held, bad))
        })
        .collect::<Result<_, _>>()?;
    let good = results.iter().filter(|r| r.1).count();
    if let Some((s, _, bad)) = results.iter().find(|r| r.1 && r.2 > 0) {
        return Err(format!("seed {s}: {bad} eliminated balls contain a*"));
    }
    Ok(format!("{good}/100 good-event runs, optimum's ball never eliminated"))
}

fn c8_pull_counts() -> Outcome {
    let env = benchmark();
    let horizon = 10_000;
    let mut summary = vec![];
    for algo in [Algorithm::MzoomA, Algorithm::MzoomB] {
        let results: Vec<(u64, bool, usize, usize)> = (0..50u64)
            .into_par_iter()
            .map(|s| {
                let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo), horizon, trial_seed(ROOT + 8, s))
                    .map_err(|e| e.to_string())?;
                let arms = &ep.diagnostics.final_arms[0];
                let bad = pull_count_violations(&env, arms, algo.variant(), horizon).map_err(|e| e.to_string())?;
                Ok::<_, String>((s, ep.good_event.held, bad.len(), arms.len()))
            })
            .collect::<Result<_, _>>()?;
        if let Some((s, _, bad, _)) = results.iter().find(|r| r.1 && r.2 > 0) {
            return Err(format!("{algo} seed {s}: {bad} arms over the bound"));
        }
        let good = results.iter().filter(|r| r.1).count();
        let arms: usize = results.iter().filter(|r| r.1).map(|r| r.3).sum();
        summary.push(format!("{algo}: {good} good-event runs, {arms} arms checked"));
    }
    Ok(summary.join("; "))
}

/// Peak of trial `i`'s landscape, drawn uniformly from the unit square.
fn ensemble_peak(i: u64) -> Vec<f64> {
    let mut rng = stream(trial_seed(ROOT + 9, i), Purpose::Auxiliary(9));
    (0..2).map(|_| rng.random()).collect()
}

fn c9_sublinearity() -> Outcome {
    let horizons: Vec<u64> = (12..=17).map(|e| 1u64 << e).collect();
    let trials = 50u64;
    let envs: Vec<EnvModel> = (0..trials).map(|i| cone(2, ensemble_peak(i), Noise::Bernoulli)).collect();
    let mut lines = vec![];
    let mut failures = vec![];
    let mut final_means = std::collections::BTreeMap::new();
    for algo in Algorithm::ALL {
        let mut rows = vec![];
        for &t in &horizons {
            let total: f64 = (0..trials)
                .into_par_iter()
                .map(|i| {
                    run_episode(&envs[i as usize], algo.variant(), &PolicySpec::new(algo), t, trial_seed(ROOT + 9, i))
                        .map(|ep| ep.trace.final_regret())
                })
                .sum::<Result<f64, _>>()
                .map_err(|e| e.to_string())?;
            rows.push((t, total / trials as f64));
        }
        let fit = cross_horizon_slope(&rows).map_err(|e| e.to_string())?;
        let theory = if algo.is_grid() { 5.0 / 6.0 } else { 0.75 };
        lines.push(format!("{algo} slope {:.3}±{:.3} (theory {theory:.3})", fit.slope, fit.slope_stderr));
        if fit.slope >= 0.98 {
            failures.push(format!("{algo} slope {:.3}", fit.slope));
        }
        final_means.insert(algo, rows.last().expect("horizons").1);
    }
    let (zoom, grid) = (final_means[&Algorithm::MzoomA], final_means[&Algorithm::McabA]);
    lines.push(format!("R_T(2^17): mzoom_a {zoom:.0} vs mcab_a {grid:.0}"));
    if zoom > grid {
        failures.push("mzoom_a mean regret exceeds mcab_a".into());
    }

    // fixed landscape, reported only
    let env = benchmark();
    let fixed = |algo: Algorithm| -> Result<f64, String> {
        let total: f64 = (0..10u64)
            .into_par_iter()
            .map(|i| run_episode(&env, algo.variant(), &PolicySpec::new(algo), 1 << 17, trial_seed(ROOT, i)).map(|e| e.trace.final_regret()))
            .sum::<Result<f64, _>>()
            .map_err(|e| e.to_string())?;
        Ok(total / 10.0)
    };
    lines.push(format!(
        "info: fixed peak (0.37,0.62) mzoom_a {:.0} vs mcab_a {:.0}",
        fixed(Algorithm::MzoomA)?,
        fixed(Algorithm::McabA)?
    ));
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("{} | {}", failures.join(", "), lines.join("; ")))
    }
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = vec![];
    for algo in Algorithm::ALL {
        let cfg = ExperimentConfig {
            env: EnvConfig {
                players: 2,
                dim: 1,
                lipschitz: 1.0,
                norm: Norm::L2,
                family: FamilyKind::Cone,
                peaks: vec![Peak { location: vec![0.37, 0.62], height: 1.0 }],
                noise: Noise::Bernoulli,
            },
            algorithm: algo,
            variant: algo.variant(),
            horizon: 3000,
            trials: 3,
            seed: 11,
            k: None,
            growth: ExploreGrowth::Sqrt,
            doubling_cap: DEFAULT_DOUBLING_CAP,
            catch_up: true,
            output_dir: tmp.path().to_path_buf(),
        };
        let (a, _) = run_and_write(&cfg, tmp.path()).map_err(|e| e.to_string())?;
        let (b, _) = run_and_write(&cfg, tmp.path()).map_err(|e| e.to_string())?;
        if a == b {
            return Err("rerun reused an existing output directory".into());
        }
        let fa = trace_files(&a).map_err(|e| e.to_string())?;
        let fb = trace_files(&b).map_err(|e| e.to_string())?;
        if fa.len() != 3 || fb.len() != 3 {
            return Err(format!("{algo}: expected 3 trace files"));
        }
        for (x, y) in fa.iter().zip(&fb) {
            if fs::read(x).map_err(|e| e.to_string())? != fs::read(y).map_err(|e| e.to_string())? {
                return Err(format!("{algo}: {} differs between reruns", x.display()));
            }
        }
        dirs.push(a);
    }
    Ok(format!("{} algorithms x 3 trials byte-identical across reruns", dirs.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 oracle equivalence, grid UCB", c1_oracle_grid),
        ("2 oracle equivalence, zooming", c2_oracle_zoom),
        ("3 desired-set consistency", c3_desired_sets),
        ("4 good event frequency", c4_good_event),
        ("5 concentration", c5_concentration),
        ("6 discretization inequality", c6_discretization),
        ("7 elimination safety", c7_keep_best),
        ("8 pull-count bounds", c8_pull_counts),
        ("9 sublinearity and ordering", c9_sublinearity),
        ("10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{name}] ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{name}] ({secs:.1}s) {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use lipbandit::env::{EnvModel, Noise, Norm};
use lipbandit::geometry::GridSpec;
use lipbandit::harness::{run_episode, Algorithm, PolicySpec};
use lipbandit::protocol::ProblemVariant;
use lipbandit::rng::trial_seed;
use lipbandit::uniform::{choose_k_prob_a, mdsee_schedule, ExploreGrowth, PhaseStep};

fn cone(peak: Vec<f64>, l: f64, norm: Norm, h: f64) -> EnvModel {
    EnvModel::cone(2, 1, l, norm, peak, h, Noise::Bernoulli).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn zooming_activations_move_toward_the_peak() {
    let peak = vec![0.37, 0.62];
    let env = cone(peak.clone(), 1.0, Norm::L2, 1.0);
    let (mut early, mut late) = (0.0, 0.0);
    for s in 0..50 {
        let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::MzoomA), 1 << 16, trial_seed(3, s)).unwrap();
        let arms = &ep.diagnostics.final_arms[0];
        assert!(arms.len() > 10, "only {} activations", arms.len());
        early += arms[..10].iter().map(|a| dist(&a.center, &peak)).sum::<f64>() / 10.0;
        late += arms[arms.len() - 10..].iter().map(|a| dist(&a.center, &peak)).sum::<f64>() / 10.0;
    }
    assert!(late < early, "late {late} vs early {early}");
}

#[test]
fn mdsee_commits_to_the_best_grid_arm() {
    // peak on a marker, so the best grid arm leads the rest by 0.25
    let env = cone(vec![0.25, 0.5], 1.0, Norm::L2, 1.0);
    let k = 4;
    let grid = GridSpec::new(k, 2, 1).unwrap();
    let size = grid.size().unwrap();
    let means: Vec<f64> = (0..size).map(|r| env.mean_at(&grid.coords(&grid.unrank(r).unwrap())).unwrap()).collect();
    let best = (0..size).max_by(|&a, &b| means[a as usize].total_cmp(&means[b as usize])).unwrap();
    let horizon = 1u64 << 16;
    let commit: Vec<bool> =
        (1..=horizon).map(|t| matches!(mdsee_schedule(t, size, ExploreGrowth::Sqrt), PhaseStep::Commit { .. })).collect();
    let (mut hits, mut total) = (0u64, 0u64);
    for s in 0..50 {
        let ep = run_episode(&env, ProblemVariant::C, &PolicySpec::new(Algorithm::McabC).with_k(k), horizon, trial_seed(4, s)).unwrap();
        let ranks = ep.trace.ranks.as_ref().unwrap();
        for (t, &r) in ranks.iter().enumerate() {
            if commit[t] {
                total += 1;
                hits += u64::from(r == best);
            }
        }
    }
    let frac = hits as f64 / total as f64;
    assert!(frac > 0.9, "commit fraction on best arm {frac}");
}

#[test]
fn signaling_eliminates_clearly_worse_arms() {
    // one marker pair per axis, optimum at the origin, every other arm mean 0
    let env = cone(vec![0.0, 0.0], 0.85, Norm::LInf, 0.85);
    let mut complete = 0;
    for s in 0..100 {
        let ep = run_episode(&env, ProblemVariant::B, &PolicySpec::new(Algorithm::McabB).with_k(1), 2000, trial_seed(5, s)).unwrap();
        let all = ep.diagnostics.final_arms.iter().all(|arms| {
            arms.iter().all(|a| env.mean_at(&a.center).unwrap() >= 0.85 || a.eliminated.is_some())
        });
        complete += usize::from(all);
    }
    assert!(complete >= 95, "{complete}/100 runs eliminated every suboptimal arm");
}

#[test]
fn recorded_pulls_match_the_trace() {
    let env = cone(vec![0.37, 0.62], 1.0, Norm::L2, 1.0);
    for algo in [Algorithm::McabA, Algorithm::McabB, Algorithm::MzoomA, Algorithm::MzoomB] {
        let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo), 3000, 17).unwrap();
        for arms in &ep.diagnostics.final_arms {
            let total: u64 = arms.iter().map(|a| a.stats.n).sum();
            assert_eq!(total, 3000, "{algo}");
            for a in arms {
                let seen = (1..=3000).filter(|&t| ep.trace.arm(t) == a.center.as_slice()).count() as u64;
                assert_eq!(seen, a.stats.n, "{algo} at {:?}", a.center);
            }
        }
    }
}

#[test]
fn regret_is_the_running_sum_of_gaps() {
    let env = cone(vec![0.2, 0.9], 2.0, Norm::L1, 0.8);
    let best = env.optimal_mean().1;
    for algo in Algorithm::ALL {
        let ep = run_episode(&env, algo.variant(), &PolicySpec::new(algo), 1500, 9).unwrap();
        let mut sum = 0.0;
        for t in 1..=1500 {
            let gap = best - env.mean_at(ep.trace.arm(t)).unwrap();
            assert!((ep.trace.deltas[t - 1] - gap).abs() < 1e-12);
            sum += gap;
            assert!((ep.trace.cumulative[t - 1] - sum).abs() < 1e-9);
        }
        assert_eq!(ep.trace.final_regret(), ep.trace.cumulative[1499]);
    }
}

#[test]
fn default_resolution_follows_the_horizon() {
    let env = cone(vec![0.5, 0.5], 1.0, Norm::L2, 1.0);
    for t in [1u64 << 10, 1 << 14, 1 << 20] {
        let ep = run_episode(&env, ProblemVariant::A, &PolicySpec::new(Algorithm::McabA), t.min(4096), 1).unwrap();
        assert!(ep.diagnostics.k.is_some());
        assert_eq!(PolicySpec::new(Algorithm::McabA).resolve_k(&env, t), Some(choose_k_prob_a(t, 1.0, 2, 1)));
    }
    assert_eq!(PolicySpec::new(Algorithm::MzoomA).resolve_k(&env, 1 << 12), None);
}

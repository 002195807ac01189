//! Centralized controllers that pick joint arms directly. They apply the
//! same index, activation and tie-break rules as the decentralized players,
//! so any divergence in trajectory exposes a coordination bug.

use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::geometry::{find_uncovered_point, Ball, DoublingLevel, GridIndex, GridSpec};
use crate::rng::{stream, Purpose};
use crate::uniform::{ucb_index, ArmStats};
use crate::zooming::{radius, zoom_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    UcbGrid { k: u32 },
    Zoom { doubling_cap: u32 },
}

/// Joint-arm sequence chosen by a single omniscient controller fed the
/// shared-reward stream of `seed`.
pub fn centralized_oracle(env: &EnvModel, kind: OracleKind, horizon: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if horizon < 2 {
        return Err(Error::domain("horizon must be at least 2"));
    }
    match kind {
        OracleKind::UcbGrid { k } => ucb_grid(env, k, horizon, seed),
        OracleKind::Zoom { doubling_cap } => zoom(env, doubling_cap, horizon, seed),
    }
}

fn ucb_grid(env: &EnvModel, k: u32, horizon: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let grid = GridSpec::new(k, env.players(), env.dim())?;
    let size = grid.size()?;
    let arms: Vec<Vec<f64>> = (0..size).map(|r| grid.coords(&grid.unrank(r).expect("rank"))).collect();
    let mut stats = vec![ArmStats::default(); arms.len()];
    let mut rng = stream(seed, Purpose::SharedReward);
    let mut out = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let r = if t <= size {
            (t - 1) as usize
        } else {
            let mut best = 0;
            let mut best_value = ucb_index(&stats[0], horizon);
            for (r, s) in stats.iter().enumerate().skip(1) {
                let v = ucb_index(s, horizon);
                if v > best_value {
                    best = r;
                    best_value = v;
                }
            }
            best
        };
        let mu = env.mean_at(&arms[r])?;
        stats[r].record(env.draw(mu, &mut rng));
        out.push(arms[r].clone());
    }
    Ok(out)
}

struct Arm {
    center: Vec<f64>,
    level: DoublingLevel,
    index: GridIndex,
    stats: ArmStats,
}

fn zoom(env: &EnvModel, cap: u32, horizon: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let (m, d, l) = (env.players(), env.dim(), env.lipschitz());
    let first = GridIndex(vec![1; m * d]);
    let mut arms = vec![Arm {
        center: DoublingLevel(1).coords(&first),
        level: DoublingLevel(1),
        index: first,
        stats: ArmStats::default(),
    }];
    let mut level = DoublingLevel(1);
    let mut rng = stream(seed, Purpose::SharedReward);
    let mut out = Vec::with_capacity(horizon as usize);
    for _ in 1..=horizon {
        let balls: Vec<Ball> = arms
            .iter()
            .map(|a| Ball::new(a.center.clone(), radius(&a.stats, l, horizon)))
            .collect();
        if let Some((index, at)) = find_uncovered_point(&balls, level, cap, env.norm(), m, d) {
            arms.push(Arm { center: at.coords(&index), level: at, index, stats: ArmStats::default() });
            level = at;
        }
        let mut best = 0;
        for i in 1..arms.len() {
            let (vi, vb) = (zoom_index(&arms[i].stats, horizon), zoom_index(&arms[best].stats, horizon));
            let earlier = (arms[i].level, &arms[i].index) < (arms[best].level, &arms[best].index);
            if vi > vb || (vi == vb && earlier) {
                best = i;
            }
        }
        let mu = env.mean_at(&arms[best].center)?;
        arms[best].stats.record(env.draw(mu, &mut rng));
        out.push(arms[best].center.clone());
    }
    Ok(out)
}

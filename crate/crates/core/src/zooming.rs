//! Adaptive-discretization policies: coordinated zooming for hidden actions
//! ([`ZoomA`]) and zooming with desired-set elimination for private rewards
//! ([`ZoomB`]).
//!
//! Each active arm carries a confidence ball of radius `ε/L`. Whenever the
//! balls stop covering the joint action space, the smallest-rank uncovered
//! point of the coarsest doubling level that has one is activated.

use std::collections::{HashMap, VecDeque};

use crate::env::Norm;
use crate::error::{Error, Result};
use crate::geometry::{find_uncovered_point_after, Ball, CoverageChange, DoublingLevel, GridIndex};
use crate::protocol::{ArmSummary, JointActionAndOwnReward, Player, SharedObservation};
use crate::uniform::{ArmStats, Confidence};

pub const DEFAULT_DOUBLING_CAP: u32 = 20;

/// Ball radius `ε(n, T)/L`; infinite before the first pull.
pub fn radius(s: &ArmStats, lipschitz: f64, horizon: u64) -> f64 {
    crate::uniform::epsilon(s.n, horizon) / lipschitz
}

/// Zooming index `μ̂ + 2ε`; infinite before the first pull.
pub fn zoom_index(s: &ArmStats, horizon: u64) -> f64 {
    match s.mean() {
        Some(m) => m + 2.0 * crate::uniform::epsilon(s.n, horizon),
        None => f64::INFINITY,
    }
}

/// Whether some listed arm `(μ̂_a, ε_a)` satisfies `μ̂_c + 2ε_c < μ̂_a − ε_a`.
pub fn eliminate_check_b<I>(candidate: &ArmStats, others: I, horizon: u64) -> bool
where
    I: IntoIterator<Item = ArmStats>,
{
    let Some(mc) = candidate.mean() else { return false };
    let left = mc + 2.0 * crate::uniform::epsilon(candidate.n, horizon);
    others.into_iter().any(|a| match a.mean() {
        Some(ma) => left < ma - crate::uniform::epsilon(a.n, horizon),
        None => false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmStatus {
    Active,
    Eliminated { frozen_radius: f64, round: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveArm {
    pub center: Vec<f64>,
    pub stats: ArmStats,
    pub activation_round: u64,
    /// Doubling level and grid index the arm was activated at.
    pub level: DoublingLevel,
    pub index: GridIndex,
    pub status: ArmStatus,
}

impl ActiveArm {
    pub fn is_active(&self) -> bool {
        self.status == ArmStatus::Active
    }
}

/// Static parameters shared by both zooming players.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoomParams {
    pub players: usize,
    pub dim: usize,
    pub horizon: u64,
    pub lipschitz: f64,
    pub norm: Norm,
    /// Deepest doubling level searched for uncovered points.
    pub doubling_cap: u32,
}

impl ZoomParams {
    pub fn new(players: usize, dim: usize, horizon: u64, lipschitz: f64, norm: Norm) -> Self {
        ZoomParams { players, dim, horizon, lipschitz, norm, doubling_cap: DEFAULT_DOUBLING_CAP }
    }

    fn validate(&self) -> Result<()> {
        if self.players == 0 || self.dim == 0 {
            return Err(Error::domain("players and dim must be positive"));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::domain("Lipschitz constant must be positive"));
        }
        if self.horizon < 2 {
            return Err(Error::domain("horizon must be at least 2"));
        }
        if self.doubling_cap == 0 {
            return Err(Error::domain("doubling cap must be at least 1"));
        }
        Ok(())
    }
}

type CenterKey = Vec<u64>;

fn key_of(coords: &[f64]) -> CenterKey {
    coords.iter().map(|x| x.to_bits()).collect()
}

/// Active arms, their balls and the activation rule.
#[derive(Debug, Clone)]
struct ZoomCore {
    params: ZoomParams,
    confidence: Confidence,
    arms: Vec<ActiveArm>,
    balls: Vec<Ball>,
    by_center: HashMap<CenterKey, usize>,
    level: DoublingLevel,
    /// Ball that shrank since the space was last known to be covered.
    shrunk: Option<(usize, f64)>,
    covered: bool,
}

impl ZoomCore {
    fn new(params: ZoomParams) -> Result<Self> {
        params.validate()?;
        let dims = params.players * params.dim;
        let level = DoublingLevel(1);
        let index = GridIndex(vec![1; dims]);
        let center = level.coords(&index);
        let mut by_center = HashMap::new();
        by_center.insert(key_of(&center), 0);
        Ok(ZoomCore {
            params,
            confidence: Confidence::new(params.horizon),
            balls: vec![Ball::new(center.clone(), f64::INFINITY)],
            arms: vec![ActiveArm {
                center,
                stats: ArmStats::default(),
                activation_round: 1,
                level,
                index,
                status: ArmStatus::Active,
            }],
            by_center,
            level,
            shrunk: None,
            covered: true,
        })
    }

    fn live_radius(&self, s: &ArmStats) -> f64 {
        self.confidence.epsilon(s.n) / self.params.lipschitz
    }

    fn record(&mut self, id: usize, reward: f64) {
        self.arms[id].stats.record(reward);
        if self.arms[id].is_active() {
            let old = self.balls[id].radius;
            self.balls[id].radius = self.live_radius(&self.arms[id].stats);
            if self.balls[id].radius < old {
                self.shrunk = match self.shrunk {
                    None => Some((id, old)),
                    Some((prev, _)) if prev == id => self.shrunk,
                    Some(_) => {
                        self.covered = false;
                        None
                    }
                };
            }
        }
    }

    fn eliminate(&mut self, id: usize, round: u64) {
        let frozen_radius = self.balls[id].radius;
        self.arms[id].status = ArmStatus::Eliminated { frozen_radius, round };
    }

    /// Activates the smallest-rank uncovered point, if any.
    fn activate(&mut self, round: u64) -> Option<usize> {
        let change = match (self.covered, self.shrunk) {
            (false, _) => CoverageChange::Unknown,
            (true, None) => return None,
            (true, Some((id, old_radius))) => CoverageChange::Shrunk {
                center: &self.arms[id].center,
                old_radius,
            },
        };
        let found = find_uncovered_point_after(
            &self.balls,
            change,
            self.level,
            self.params.doubling_cap,
            self.params.norm,
            self.params.players * self.params.dim,
        );
        self.shrunk = None;
        self.covered = true;
        let (index, level) = found?;
        let center = level.coords(&index);
        let id = self.arms.len();
        self.by_center.insert(key_of(&center), id);
        self.balls.push(Ball::new(center.clone(), f64::INFINITY));
        self.arms.push(ActiveArm {
            center,
            stats: ArmStats::default(),
            activation_round: round,
            level,
            index,
            status: ArmStatus::Active,
        });
        self.level = level;
        Some(id)
    }

    fn block(&self, id: usize, player: usize) -> Vec<f64> {
        let d = self.params.dim;
        self.arms[id].center[player * d..(player + 1) * d].to_vec()
    }

    fn lookup(&self, joint: &[f64]) -> Option<usize> {
        self.by_center.get(&key_of(joint)).copied()
    }

    fn summaries(&self) -> Vec<ArmSummary> {
        self.arms
            .iter()
            .map(|a| ArmSummary {
                center: a.center.clone(),
                stats: a.stats,
                eliminated: match a.status {
                    ArmStatus::Active => None,
                    ArmStatus::Eliminated { frozen_radius, round } => Some((frozen_radius, round)),
                },
            })
            .collect()
    }
}

/// Hidden actions, shared reward: every player runs the same zooming rule,
/// so active sets and choices agree without communication.
#[derive(Debug, Clone)]
pub struct ZoomA {
    player: usize,
    core: ZoomCore,
    index: Vec<f64>,
    last: Option<usize>,
}

impl ZoomA {
    pub fn new(player: usize, params: ZoomParams) -> Result<Self> {
        if player >= params.players {
            return Err(Error::domain("player index out of range"));
        }
        Ok(ZoomA { player, core: ZoomCore::new(params)?, index: vec![f64::INFINITY], last: None })
    }

    pub fn arms(&self) -> &[ActiveArm] {
        &self.core.arms
    }

    pub fn level(&self) -> DoublingLevel {
        self.core.level
    }

    pub fn last_arm(&self) -> Option<usize> {
        self.last
    }

    fn better(&self, a: usize, b: usize) -> bool {
        let (ia, ib) = (self.index[a], self.index[b]);
        if ia != ib {
            return ia > ib;
        }
        let (x, y) = (&self.core.arms[a], &self.core.arms[b]);
        (x.level, &x.index) < (y.level, &y.index)
    }
}

impl Player for ZoomA {
    type Observation = SharedObservation;

    fn act(&mut self, t: u64) -> Result<Vec<f64>> {
        if self.core.activate(t).is_some() {
            self.index.push(f64::INFINITY);
        }
        let mut best = 0;
        for id in 1..self.index.len() {
            if self.better(id, best) {
                best = id;
            }
        }
        self.last = Some(best);
        Ok(self.core.block(best, self.player))
    }

    fn observe(&mut self, obs: &SharedObservation) -> Result<()> {
        let id = self.last.ok_or_else(|| Error::protocol("observation before any action"))?;
        if obs.own_action != self.core.block(id, self.player) {
            return Err(Error::protocol("echoed action differs from the chosen block"));
        }
        self.core.record(id, obs.reward);
        let s = self.core.arms[id].stats;
        self.index[id] = s.mean().expect("just pulled") + 2.0 * self.core.confidence.epsilon(s.n);
        Ok(())
    }

    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats> {
        self.core.lookup(joint).map(|id| self.core.arms[id].stats)
    }

    fn intended_joint(&self) -> Option<Vec<f64>> {
        self.last.map(|id| self.core.arms[id].center.clone())
    }

    fn arm_summaries(&self) -> Vec<ArmSummary> {
        self.core.summaries()
    }
}

/// Observed actions, private rewards: a desired set rotated in activation
/// order, with eliminations signaled by deviating from the designated arm.
#[derive(Debug, Clone)]
pub struct ZoomB {
    player: usize,
    core: ZoomCore,
    catch_up: bool,
    queue: VecDeque<(usize, u64)>,
    cursor: Option<usize>,
    designated: Option<usize>,
    signaled: bool,
    round: u64,
}

impl ZoomB {
    pub fn new(player: usize, params: ZoomParams, catch_up: bool) -> Result<Self> {
        if player >= params.players {
            return Err(Error::domain("player index out of range"));
        }
        Ok(ZoomB {
            player,
            core: ZoomCore::new(params)?,
            catch_up,
            queue: VecDeque::new(),
            cursor: None,
            designated: None,
            signaled: false,
            round: 0,
        })
    }

    pub fn arms(&self) -> &[ActiveArm] {
        &self.core.arms
    }

    pub fn designated(&self) -> Option<usize> {
        self.designated
    }

    pub fn signaled(&self) -> bool {
        self.signaled
    }

    fn next_in_rotation(&self) -> Option<usize> {
        let n = self.core.arms.len();
        let start = self.cursor.map_or(0, |c| c + 1);
        (0..n).map(|k| (start + k) % n).find(|&id| self.core.arms[id].is_active())
    }

    fn sees_better_than(&self, c: usize) -> bool {
        let arms = &self.core.arms;
        let others = arms.iter().enumerate().filter(|&(id, a)| id != c && a.is_active()).map(|(_, a)| a.stats);
        eliminate_check_b(&arms[c].stats, others, self.core.params.horizon)
    }

    /// Player's block of `c` with the first coordinate moved by one half.
    fn signal_block(&self, c: usize) -> Vec<f64> {
        let mut block = self.core.block(c, self.player);
        block[0] = if block[0] >= 0.5 { block[0] - 0.5 } else { block[0] + 0.5 };
        block
    }
}

impl Player for ZoomB {
    type Observation = JointActionAndOwnReward;

    fn act(&mut self, t: u64) -> Result<Vec<f64>> {
        self.round = t;
        self.signaled = false;
        while let Some(id) = self.core.activate(t) {
            if self.catch_up {
                let target = self.core.arms[..id]
                    .iter()
                    .filter(|a| a.is_active())
                    .map(|a| a.stats.n)
                    .max()
                    .unwrap_or(0)
                    .max(1);
                self.queue.push_back((id, target));
            }
        }
        while let Some(&(id, target)) = self.queue.front() {
            let arm = &self.core.arms[id];
            if arm.is_active() && arm.stats.n < target {
                break;
            }
            self.queue.pop_front();
        }
        let c = match self.queue.front() {
            Some(&(id, _)) => id,
            None => {
                let c = self.next_in_rotation().ok_or_else(|| Error::protocol("desired set is empty"))?;
                self.cursor = Some(c);
                c
            }
        };
        self.designated = Some(c);
        if self.sees_better_than(c) {
            self.signaled = true;
            Ok(self.signal_block(c))
        } else {
            Ok(self.core.block(c, self.player))
        }
    }

    fn observe(&mut self, obs: &JointActionAndOwnReward) -> Result<()> {
        let c = self.designated.ok_or_else(|| Error::protocol("observation before any action"))?;
        let joint = obs.joint_action.coords();
        if let Some(id) = self.core.lookup(joint) {
            self.core.record(id, obs.reward);
        }
        if self.core.arms[c].is_active() && joint != self.core.arms[c].center.as_slice() {
            self.core.eliminate(c, self.round);
        }
        Ok(())
    }

    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats> {
        self.core.lookup(joint).map(|id| self.core.arms[id].stats)
    }

    fn intended_joint(&self) -> Option<Vec<f64>> {
        self.designated.map(|id| self.core.arms[id].center.clone())
    }

    fn desired_set(&self) -> Option<Vec<u64>> {
        Some(
            self.core
                .arms
                .iter()
                .enumerate()
                .filter(|(_, a)| a.is_active())
                .map(|(id, _)| id as u64)
                .collect(),
        )
    }

    fn arm_summaries(&self) -> Vec<ArmSummary> {
        self.core.summaries()
    }
}

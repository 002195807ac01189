//! Fixed-discretization policies: coordinated UCB for hidden actions
//! ([`McabA`]), interval elimination with action signaling for private
//! rewards ([`McabB`]), and phased explore-then-commit for the fully
//! asymmetric problem ([`McabC`]).
//!
//! Also home to the confidence machinery every policy shares: pull
//! statistics, the width `ε = √(6 ln T / n)`, UCB indices and intervals.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{GridIndex, GridSpec};
use crate::protocol::{ArmSummary, JointActionAndOwnReward, OwnReward, Player, SharedObservation};
use crate::rng::Stream;

/// Pull count and reward sum of one arm, as seen by one player.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStats {
    pub n: u64,
    pub sum: f64,
}

impl ArmStats {
    /// Empirical mean; undefined before the first pull.
    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    pub fn record(&mut self, reward: f64) {
        self.n += 1;
        self.sum += reward;
    }
}

/// Confidence width `√(6 ln T / n)`; infinite for an unpulled arm.
pub fn epsilon(n: u64, horizon: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (6.0 * (horizon as f64).ln() / n as f64).sqrt()
}

/// `6 ln T` cached for a horizon; evaluates exactly like [`epsilon`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence {
    six_log_t: f64,
}

impl Confidence {
    pub fn new(horizon: u64) -> Self {
        Confidence { six_log_t: 6.0 * (horizon as f64).ln() }
    }

    #[inline]
    pub fn epsilon(&self, n: u64) -> f64 {
        if n == 0 {
            f64::INFINITY
        } else {
            (self.six_log_t / n as f64).sqrt()
        }
    }

    #[inline]
    pub fn ucb(&self, s: &ArmStats) -> f64 {
        match s.mean() {
            Some(m) => m + self.epsilon(s.n),
            None => f64::INFINITY,
        }
    }

    #[inline]
    pub fn interval(&self, s: &ArmStats) -> Interval {
        match s.mean() {
            Some(m) => {
                let e = self.epsilon(s.n);
                Interval { lo: m - e, hi: m + e }
            }
            None => Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY },
        }
    }
}

/// `μ̂ + ε`; infinite for an unpulled arm.
pub fn ucb_index(s: &ArmStats, horizon: u64) -> f64 {
    match s.mean() {
        Some(m) => m + epsilon(s.n, horizon),
        None => f64::INFINITY,
    }
}

/// Confidence interval `(μ̂ − ε, μ̂ + ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

pub fn interval(s: &ArmStats, horizon: u64) -> Interval {
    match s.mean() {
        Some(m) => {
            let e = epsilon(s.n, horizon);
            Interval { lo: m - e, hi: m + e }
        }
        None => Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY },
    }
}

/// Whether `upper` lies strictly above and apart from `lower`.
pub fn disjoint_above(upper: Interval, lower: Interval) -> bool {
    lower.hi < upper.lo
}

fn round_half_up_at_least_one(x: f64) -> u32 {
    (x + 0.5).floor().max(1.0) as u32
}

/// Grid resolution for the hidden-action and private-reward problems:
/// `T^{1/(2(Md+1))} L^{1/(M+1)} / (ln T)^{1/(2(Md+1))}`, rounded half up,
/// at least 1.
pub fn choose_k_prob_a(horizon: u64, lipschitz: f64, players: usize, dim: usize) -> u32 {
    let t = horizon as f64;
    let md = (players * dim) as f64;
    let e = 1.0 / (2.0 * (md + 1.0));
    let k = t.powf(e) * lipschitz.powf(1.0 / (players as f64 + 1.0)) / t.ln().powf(e);
    round_half_up_at_least_one(k)
}

/// Grid resolution for the fully asymmetric problem; like
/// [`choose_k_prob_a`] with `(ln T)^{1/(Md+1)}` in the denominator.
pub fn choose_k_prob_c(horizon: u64, lipschitz: f64, players: usize, dim: usize) -> u32 {
    let t = horizon as f64;
    let md = (players * dim) as f64;
    let k = t.powf(1.0 / (2.0 * (md + 1.0))) * lipschitz.powf(1.0 / (players as f64 + 1.0))
        / t.ln().powf(1.0 / (md + 1.0));
    round_half_up_at_least_one(k)
}

/// Index of the first maximum; ties go to the smallest index, which on a
/// rank-ordered table is the smallest joint arm.
pub fn argmax_first<I: IntoIterator<Item = f64>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Coordinates of player `player`'s block of grid arm `idx`.
fn block_coords(grid: &GridSpec, idx: &GridIndex, player: usize) -> Vec<f64> {
    let d = grid.dim();
    idx.0[player * d..(player + 1) * d].iter().map(|&i| grid.coordinate(i)).collect()
}

/// Block following `idx`'s player block in the player's own rank order,
/// wrapping; always differs from the original block when `K ≥ 1`.
fn successor_block(grid: &GridSpec, idx: &GridIndex, player: usize) -> Vec<f64> {
    let d = grid.dim();
    let base = grid.markers();
    let block = &idx.0[player * d..(player + 1) * d];
    let value = block.iter().fold(0u64, |acc, &x| acc * base + x as u64);
    let mut next = (value + 1) % grid.block_size();
    let mut digits = vec![0u32; d];
    for digit in digits.iter_mut().rev() {
        *digit = (next % base) as u32;
        next /= base;
    }
    digits.iter().map(|&i| grid.coordinate(i)).collect()
}

fn grid_size(grid: &GridSpec) -> Result<usize> {
    let size = grid.size()?;
    if size > 50_000_000 {
        return Err(Error::domain(format!("{size} joint arms is too many to tabulate")));
    }
    Ok(size as usize)
}

fn summaries(grid: &GridSpec, stats: &[ArmStats], eliminated: &[Option<(f64, u64)>]) -> Vec<ArmSummary> {
    stats
        .iter()
        .enumerate()
        .map(|(r, s)| ArmSummary {
            center: grid.coords(&grid.unrank(r as u64).expect("rank in range")),
            stats: *s,
            eliminated: eliminated.get(r).copied().flatten(),
        })
        .collect()
}

/// Hidden actions, shared reward: every player runs the same UCB over joint
/// arms with the same tie-break, so all of them agree on the joint arm
/// without seeing each other.
#[derive(Debug, Clone)]
pub struct McabA {
    player: usize,
    grid: GridSpec,
    confidence: Confidence,
    stats: Vec<ArmStats>,
    ucb: Vec<f64>,
    last: Option<usize>,
}

impl McabA {
    pub fn new(player: usize, grid: GridSpec, horizon: u64) -> Result<Self> {
        if player >= grid.players() {
            return Err(Error::domain("player index out of range"));
        }
        let size = grid_size(&grid)?;
        Ok(McabA {
            player,
            grid,
            confidence: Confidence::new(horizon),
            stats: vec![ArmStats::default(); size],
            ucb: vec![f64::INFINITY; size],
            last: None,
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    /// Rank of the joint arm chosen last.
    pub fn last_rank(&self) -> Option<usize> {
        self.last
    }

    fn index(&self, r: usize) -> GridIndex {
        self.grid.unrank(r as u64).expect("rank in range")
    }
}

impl Player for McabA {
    type Observation = SharedObservation;

    fn act(&mut self, t: u64) -> Result<Vec<f64>> {
        let size = self.stats.len();
        let r = if t >= 1 && t as usize <= size {
            (t - 1) as usize
        } else {
            argmax_first(self.ucb.iter().copied()).expect("grid is non-empty")
        };
        self.last = Some(r);
        Ok(block_coords(&self.grid, &self.index(r), self.player))
    }

    fn observe(&mut self, obs: &SharedObservation) -> Result<()> {
        let r = self.last.ok_or_else(|| Error::protocol("observation before any action"))?;
        if obs.own_action != block_coords(&self.grid, &self.index(r), self.player) {
            return Err(Error::protocol("echoed action differs from the chosen block"));
        }
        self.stats[r].record(obs.reward);
        self.ucb[r] = self.confidence.ucb(&self.stats[r]);
        Ok(())
    }

    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats> {
        let idx = self.grid.index_of(joint)?;
        Some(self.stats[self.grid.rank(&idx).ok()? as usize])
    }

    fn intended_joint(&self) -> Option<Vec<f64>> {
        self.last.map(|r| self.grid.coords(&self.index(r)))
    }

    fn arm_summaries(&self) -> Vec<ArmSummary> {
        summaries(&self.grid, &self.stats, &[])
    }
}

/// Observed actions, private rewards: a shared desired set walked in rank
/// order, where a player signals an elimination by deviating from the
/// designated arm.
#[derive(Debug, Clone)]
pub struct McabB {
    player: usize,
    grid: GridSpec,
    confidence: Confidence,
    stats: Vec<ArmStats>,
    eliminated: Vec<Option<(f64, u64)>>,
    remaining: usize,
    designated: Option<usize>,
    signaled: bool,
    round: u64,
}

impl McabB {
    pub fn new(player: usize, grid: GridSpec, horizon: u64) -> Result<Self> {
        if player >= grid.players() {
            return Err(Error::domain("player index out of range"));
        }
        let size = grid_size(&grid)?;
        Ok(McabB {
            player,
            grid,
            confidence: Confidence::new(horizon),
            stats: vec![ArmStats::default(); size],
            eliminated: vec![None; size],
            remaining: size,
            designated: None,
            signaled: false,
            round: 0,
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    /// Designated arm `c_t` of the current main-phase round.
    pub fn designated(&self) -> Option<usize> {
        self.designated
    }

    /// Whether this player deviated from the designated arm this round.
    pub fn signaled(&self) -> bool {
        self.signaled
    }

    fn alive(&self, r: usize) -> bool {
        self.eliminated[r].is_none()
    }

    /// Next desired arm after `from` in the cyclic rank order.
    fn next_desired(&self, from: Option<usize>) -> Option<usize> {
        let size = self.stats.len();
        let start = from.map_or(0, |r| r + 1);
        (0..size).map(|k| (start + k) % size).find(|&r| self.alive(r))
    }

    /// Whether this player sees some desired arm whose interval is above
    /// and apart from the designated arm's.
    fn sees_better_than(&self, c: usize) -> bool {
        let ci = self.confidence.interval(&self.stats[c]);
        (0..self.stats.len())
            .filter(|&r| self.alive(r))
            .any(|r| disjoint_above(self.confidence.interval(&self.stats[r]), ci))
    }
}

impl Player for McabB {
    type Observation = JointActionAndOwnReward;

    fn act(&mut self, t: u64) -> Result<Vec<f64>> {
        self.round = t;
        self.signaled = false;
        let size = self.stats.len();
        if t >= 1 && t as usize <= size {
            let idx = self.grid.unrank(t - 1)?;
            self.designated = None;
            return Ok(block_coords(&self.grid, &idx, self.player));
        }
        let c = self
            .next_desired(self.designated)
            .ok_or_else(|| Error::protocol("desired set is empty"))?;
        self.designated = Some(c);
        let idx = self.grid.unrank(c as u64)?;
        if self.sees_better_than(c) {
            self.signaled = true;
            Ok(successor_block(&self.grid, &idx, self.player))
        } else {
            Ok(block_coords(&self.grid, &idx, self.player))
        }
    }

    fn observe(&mut self, obs: &JointActionAndOwnReward) -> Result<()> {
        let idx = self
            .grid
            .index_of(obs.joint_action.coords())
            .ok_or_else(|| Error::protocol("observed joint action is not a grid arm"))?;
        let r = self.grid.rank(&idx)? as usize;
        self.stats[r].record(obs.reward);
        if let Some(c) = self.designated {
            if c != r && self.alive(c) {
                let frozen = self.confidence.epsilon(self.stats[c].n);
                self.eliminated[c] = Some((frozen, self.round));
                self.remaining -= 1;
            }
        }
        Ok(())
    }

    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats> {
        let idx = self.grid.index_of(joint)?;
        Some(self.stats[self.grid.rank(&idx).ok()? as usize])
    }

    fn intended_joint(&self) -> Option<Vec<f64>> {
        self.designated.map(|c| self.grid.coords(&self.grid.unrank(c as u64).expect("rank")))
    }

    fn desired_set(&self) -> Option<Vec<u64>> {
        Some((0..self.stats.len()).filter(|&r| self.alive(r)).map(|r| r as u64).collect())
    }

    fn arm_summaries(&self) -> Vec<ArmSummary> {
        summaries(&self.grid, &self.stats, &self.eliminated)
    }
}

/// Per-phase exploration multiplier `f(n)` for the explore-then-commit schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExploreGrowth {
    /// `⌈√n⌉`
    #[default]
    Sqrt,
    /// `⌈log₂(n+1)⌉`
    Log,
}

impl ExploreGrowth {
    pub fn f(self, n: u64) -> u64 {
        match self {
            ExploreGrowth::Sqrt => {
                let mut r = (n as f64).sqrt() as u64;
                while r * r < n {
                    r += 1;
                }
                while r > 0 && (r - 1) * (r - 1) >= n {
                    r -= 1;
                }
                r
            }
            ExploreGrowth::Log => 64 - n.leading_zeros() as u64,
        }
    }
}

impl fmt::Display for ExploreGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExploreGrowth::Sqrt => "sqrt",
            ExploreGrowth::Log => "log",
        })
    }
}

impl FromStr for ExploreGrowth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "sqrt" => Ok(ExploreGrowth::Sqrt),
            "log" => Ok(ExploreGrowth::Log),
            other => Err(format!("unknown growth `{other}` (expected sqrt or log)")),
        }
    }
}

/// What the explore-then-commit schedule prescribes for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStep {
    /// Pull joint arm `arm` for the `repetition`-th time in phase `phase`.
    Explore { phase: u64, arm: u64, repetition: u64 },
    /// Play the arm chosen at the end of the latest exploration block.
    Commit { phase: u64 },
}

/// Explore-then-commit schedule as a pure function of the round.
///
/// Phase 1 starts at round 1. Phase `p` pulls each joint arm `f(p)` times in
/// a row, in rank order. Later phases start at powers of two `2^n` with
/// `n ≥ ⌊log₂(f(1)·K_joint)⌋ + 1`, taking the first such power that is past
/// the end of the previous exploration block; every round in between commits.
pub fn mdsee_schedule(t: u64, k_joint: u64, growth: ExploreGrowth) -> PhaseStep {
    assert!(t >= 1 && k_joint >= 1, "rounds are 1-based and the grid is non-empty");
    let first_pow = (growth.f(1) * k_joint).ilog2() + 1;
    let mut phase = 1u64;
    let mut start = 1u64;
    loop {
        let reps = growth.f(phase);
        let len = reps * k_joint;
        if t < start + len {
            let offset = t - start;
            return PhaseStep::Explore {
                phase,
                arm: offset / reps,
                repetition: offset % reps + 1,
            };
        }
        let end = start + len;
        let mut exp = first_pow;
        while (1u64 << exp) < end {
            exp += 1;
        }
        let next = 1u64 << exp;
        if t < next {
            return PhaseStep::Commit { phase };
        }
        phase += 1;
        start = next;
    }
}

/// Hidden actions, private rewards: explore on a shared schedule, then
/// commit to the best own empirical mean until the next exploration block.
#[derive(Debug, Clone)]
pub struct McabC {
    player: usize,
    grid: GridSpec,
    growth: ExploreGrowth,
    stats: Vec<ArmStats>,
    rng: Stream,
    commitment: Option<usize>,
    last: Option<(usize, bool)>,
}

impl McabC {
    pub fn new(player: usize, grid: GridSpec, growth: ExploreGrowth, rng: Stream) -> Result<Self> {
        if player >= grid.players() {
            return Err(Error::domain("player index out of range"));
        }
        let size = grid_size(&grid)?;
        Ok(McabC {
            player,
            grid,
            growth,
            stats: vec![ArmStats::default(); size],
            rng,
            commitment: None,
            last: None,
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn commitment(&self) -> Option<usize> {
        self.commitment
    }

    fn choose_commitment(&mut self) -> usize {
        let means: Vec<f64> = self
            .stats
            .iter()
            .map(|s| s.mean().unwrap_or(f64::NEG_INFINITY))
            .collect();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..means.len()).filter(|&r| means[r] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[self.rng.random_range(0..ties.len())]
        }
    }
}

impl Player for McabC {
    type Observation = OwnReward;

    fn act(&mut self, t: u64) -> Result<Vec<f64>> {
        let r = match mdsee_schedule(t, self.stats.len() as u64, self.growth) {
            PhaseStep::Explore { arm, .. } => {
                self.commitment = None;
                self.last = Some((arm as usize, false));
                arm as usize
            }
            PhaseStep::Commit { .. } => {
                let c = match self.commitment {
                    Some(c) => c,
                    None => {
                        let c = self.choose_commitment();
                        self.commitment = Some(c);
                        c
                    }
                };
                self.last = Some((c, true));
                c
            }
        };
        Ok(block_coords(&self.grid, &self.grid.unrank(r as u64)?, self.player))
    }

    fn observe(&mut self, obs: &OwnReward) -> Result<()> {
        match self.last {
            None => Err(Error::protocol("observation before any action")),
            Some((r, false)) => {
                self.stats[r].record(obs.reward);
                Ok(())
            }
            // commit-phase rewards cannot be attributed to a joint arm
            Some((_, true)) => Ok(()),
        }
    }

    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats> {
        let idx = self.grid.index_of(joint)?;
        Some(self.stats[self.grid.rank(&idx).ok()? as usize])
    }

    fn intended_joint(&self) -> Option<Vec<f64>> {
        self.last.map(|(r, _)| self.grid.coords(&self.grid.unrank(r as u64).expect("rank")))
    }

    fn committing(&self) -> bool {
        matches!(self.last, Some((_, true)))
    }

    fn arm_summaries(&self) -> Vec<ArmSummary> {
        summaries(&self.grid, &self.stats, &[])
    }
}

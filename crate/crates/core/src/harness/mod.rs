//! Episode runner with per-variant observation routing, pseudo-regret
//! accounting and runtime monitors (good event, coordination, desired-set
//! equality, miscoordination).

pub mod aggregate;
pub mod checks;
pub mod oracle;
pub mod trace_io;

use std::fmt;
use std::str::FromStr;

use crate::env::{EnvModel, JointArm};
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::protocol::{
    ArmSummary, JointActionAndOwnReward, OwnReward, Player, ProblemVariant, SharedObservation,
};
use crate::rng::{stream, Purpose, Stream};
use crate::uniform::{choose_k_prob_a, choose_k_prob_c, Confidence, ExploreGrowth, McabA, McabB, McabC};
use crate::zooming::{ZoomA, ZoomB, ZoomParams, DEFAULT_DOUBLING_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    McabA,
    McabB,
    McabC,
    MzoomA,
    MzoomB,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::McabA,
        Algorithm::McabB,
        Algorithm::McabC,
        Algorithm::MzoomA,
        Algorithm::MzoomB,
    ];

    /// The only problem variant this algorithm is defined for.
    pub fn variant(self) -> ProblemVariant {
        match self {
            Algorithm::McabA | Algorithm::MzoomA => ProblemVariant::A,
            Algorithm::McabB | Algorithm::MzoomB => ProblemVariant::B,
            Algorithm::McabC => ProblemVariant::C,
        }
    }

    pub fn is_grid(self) -> bool {
        matches!(self, Algorithm::McabA | Algorithm::McabB | Algorithm::McabC)
    }

    pub fn check_pairing(self, variant: ProblemVariant) -> Result<()> {
        if self.variant() == variant {
            Ok(())
        } else {
            Err(Error::Pairing { algorithm: self.to_string(), variant: variant.to_string() })
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::McabA => "mcab_a",
            Algorithm::McabB => "mcab_b",
            Algorithm::McabC => "mcab_c",
            Algorithm::MzoomA => "mzoom_a",
            Algorithm::MzoomB => "mzoom_b",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.to_string() == s.trim())
            .ok_or_else(|| format!("unknown algorithm `{}` (expected mcab_a, mcab_b, mcab_c, mzoom_a or mzoom_b)", s.trim()))
    }
}

/// Policy choice plus its tunables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub algorithm: Algorithm,
    /// Grid resolution; derived from the horizon when absent.
    pub k: Option<u32>,
    pub growth: ExploreGrowth,
    pub doubling_cap: u32,
    pub catch_up: bool,
}

impl PolicySpec {
    pub fn new(algorithm: Algorithm) -> Self {
        PolicySpec {
            algorithm,
            k: None,
            growth: ExploreGrowth::Sqrt,
            doubling_cap: DEFAULT_DOUBLING_CAP,
            catch_up: true,
        }
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = Some(k);
        self
    }

    /// Grid resolution used at `horizon`, for grid algorithms.
    pub fn resolve_k(&self, env: &EnvModel, horizon: u64) -> Option<u32> {
        if !self.algorithm.is_grid() {
            return None;
        }
        Some(self.k.unwrap_or_else(|| match self.algorithm.variant() {
            ProblemVariant::C => choose_k_prob_c(horizon, env.lipschitz(), env.players(), env.dim()),
            _ => choose_k_prob_a(horizon, env.lipschitz(), env.players(), env.dim()),
        }))
    }
}

/// Per-round record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    dims: usize,
    /// Joint arms, `dims` coordinates per round.
    pub arms: Vec<f64>,
    /// Grid rank of each joint arm, for grid policies.
    pub ranks: Option<Vec<u64>>,
    pub deltas: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Whether the good event had held through each round.
    pub good_event: Vec<bool>,
    pub miscoordinated: Vec<bool>,
}

impl RegretTrace {
    fn with_capacity(dims: usize, horizon: usize, ranked: bool) -> Self {
        RegretTrace {
            dims,
            arms: Vec::with_capacity(dims * horizon),
            ranks: ranked.then(|| Vec::with_capacity(horizon)),
            deltas: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
            good_event: Vec::with_capacity(horizon),
            miscoordinated: Vec::with_capacity(horizon),
        }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Joint arm of round `t` (1-based).
    pub fn arm(&self, t: usize) -> &[f64] {
        &self.arms[(t - 1) * self.dims..t * self.dims]
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Label of round `t`'s arm: the grid rank, or the coordinates joined by `;`.
    pub fn arm_label(&self, t: usize) -> String {
        match &self.ranks {
            Some(r) => r[t - 1].to_string(),
            None => self.arm(t).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub round: u64,
    pub player: usize,
    pub arm: Vec<f64>,
    /// `|μ̂ − μ| − ε`
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodEventReport {
    pub held: bool,
    pub first_violation: Option<Violation>,
}

impl GoodEventReport {
    fn new() -> Self {
        GoodEventReport { held: true, first_violation: None }
    }
}

/// Whether `|μ̂ − μ| ≤ ε(n)`; vacuous for unpulled arms.
pub fn good_event_ok(mean_hat: Option<f64>, n: u64, mu: f64, confidence: &Confidence) -> Option<f64> {
    let m = mean_hat?;
    let excess = (m - mu).abs() - confidence.epsilon(n);
    (excess > 0.0).then_some(excess)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub k: Option<u32>,
    /// Commit rounds in which players' chosen joint arms disagreed.
    pub miscoordination: u64,
    /// Rounds in which a player's intended joint arm differed from the one played.
    pub coordination_failures: u64,
    pub desired_set_mismatches: u64,
    pub first_desired_set_mismatch: Option<u64>,
    /// Final arm tables, one per player.
    pub final_arms: Vec<Vec<ArmSummary>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trace: RegretTrace,
    pub good_event: GoodEventReport,
    pub diagnostics: Diagnostics,
}

/// Produces each player's observation once rewards are drawn.
trait Feedback {
    type Obs;
    fn observations(&mut self, env: &EnvModel, joint: &JointArm, blocks: Vec<Vec<f64>>, mu: f64) -> Vec<Self::Obs>;
}

struct Shared(Stream);

impl Feedback for Shared {
    type Obs = SharedObservation;
    fn observations(&mut self, env: &EnvModel, _: &JointArm, blocks: Vec<Vec<f64>>, mu: f64) -> Vec<SharedObservation> {
        let reward = env.draw(mu, &mut self.0);
        blocks.into_iter().map(|own_action| SharedObservation { own_action, reward }).collect()
    }
}

struct Private(Vec<Stream>);

impl Feedback for Private {
    type Obs = JointActionAndOwnReward;
    fn observations(&mut self, env: &EnvModel, joint: &JointArm, _: Vec<Vec<f64>>, mu: f64) -> Vec<JointActionAndOwnReward> {
        self.0
            .iter_mut()
            .map(|rng| JointActionAndOwnReward { joint_action: joint.clone(), reward: env.draw(mu, rng) })
            .collect()
    }
}

struct Own(Vec<Stream>);

impl Feedback for Own {
    type Obs = OwnReward;
    fn observations(&mut self, env: &EnvModel, _: &JointArm, blocks: Vec<Vec<f64>>, mu: f64) -> Vec<OwnReward> {
        self.0
            .iter_mut()
            .zip(blocks)
            .map(|(rng, own_action)| OwnReward { own_action, reward: env.draw(mu, rng) })
            .collect()
    }
}

fn player_streams(seed: u64, players: usize) -> Vec<Stream> {
    (0..players).map(|i| stream(seed, Purpose::PlayerReward(i))).collect()
}

/// Run one episode of `horizon` rounds. Deterministic in `(env, spec, horizon, seed)`.
pub fn run_episode(
    env: &EnvModel,
    variant: ProblemVariant,
    spec: &PolicySpec,
    horizon: u64,
    seed: u64,
) -> Result<Episode> {
    spec.algorithm.check_pairing(variant)?;
    if horizon < 2 {
        return Err(Error::domain("horizon must be at least 2"));
    }
    let m = env.players();
    let k = spec.resolve_k(env, horizon);
    let grid = k.map(|k| GridSpec::new(k, m, env.dim())).transpose()?;
    let zoom = ZoomParams {
        doubling_cap: spec.doubling_cap,
        ..ZoomParams::new(m, env.dim(), horizon, env.lipschitz(), env.norm())
    };
    let mut episode = match spec.algorithm {
        Algorithm::McabA => {
            let g = grid.expect("grid policy");
            let ps = (0..m).map(|i| McabA::new(i, g, horizon)).collect::<Result<Vec<_>>>()?;
            drive(env, ps, Shared(stream(seed, Purpose::SharedReward)), variant, horizon, grid)
        }
        Algorithm::McabB => {
            let g = grid.expect("grid policy");
            let ps = (0..m).map(|i| McabB::new(i, g, horizon)).collect::<Result<Vec<_>>>()?;
            drive(env, ps, Private(player_streams(seed, m)), variant, horizon, grid)
        }
        Algorithm::McabC => {
            let g = grid.expect("grid policy");
            let ps = (0..m)
                .map(|i| McabC::new(i, g, spec.growth, stream(seed, Purpose::Policy(i))))
                .collect::<Result<Vec<_>>>()?;
            drive(env, ps, Own(player_streams(seed, m)), variant, horizon, grid)
        }
        Algorithm::MzoomA => {
            let ps = (0..m).map(|i| ZoomA::new(i, zoom)).collect::<Result<Vec<_>>>()?;
            drive(env, ps, Shared(stream(seed, Purpose::SharedReward)), variant, horizon, None)
        }
        Algorithm::MzoomB => {
            let ps = (0..m).map(|i| ZoomB::new(i, zoom, spec.catch_up)).collect::<Result<Vec<_>>>()?;
            drive(env, ps, Private(player_streams(seed, m)), variant, horizon, None)
        }
    }?;
    episode.diagnostics.k = k;
    Ok(episode)
}

fn drive<P, F>(
    env: &EnvModel,
    mut players: Vec<P>,
    mut feedback: F,
    variant: ProblemVariant,
    horizon: u64,
    grid: Option<GridSpec>,
) -> Result<Episode>
where
    P: Player,
    F: Feedback<Obs = P::Observation>,
{
    let dims = env.dims();
    let best = env.optimal_mean().1;
    let confidence = Confidence::new(horizon);
    let mut trace = RegretTrace::with_capacity(dims, horizon as usize, grid.is_some());
    let mut good = GoodEventReport::new();
    let mut diag = Diagnostics::default();
    let mut cumulative = 0.0;

    for t in 1..=horizon {
        let blocks = players.iter_mut().map(|p| p.act(t)).collect::<Result<Vec<_>>>()?;
        let joint = JointArm::from_blocks(&blocks)?;
        let mu = env.mean(&joint)?;
        let delta = best - mu;
        cumulative += delta;

        match variant {
            ProblemVariant::A => {
                if players.iter().any(|p| p.intended_joint().as_deref() != Some(joint.coords())) {
                    diag.coordination_failures += 1;
                }
            }
            ProblemVariant::C => {
                let committing = players.iter().any(|p| p.committing());
                let intended: Vec<_> = players.iter().map(|p| p.intended_joint()).collect();
                let agree = intended.windows(2).all(|w| w[0] == w[1]);
                trace.miscoordinated.push(committing && !agree);
                if committing && !agree {
                    diag.miscoordination += 1;
                }
            }
            ProblemVariant::B => {}
        }
        if variant != ProblemVariant::C {
            trace.miscoordinated.push(false);
        }

        let obs = feedback.observations(env, &joint, blocks, mu);
        for (p, o) in players.iter_mut().zip(&obs) {
            p.observe(o)?;
        }

        if good.held {
            for (i, p) in players.iter().enumerate() {
                if let Some(s) = p.stats_of(joint.coords()) {
                    if let Some(excess) = good_event_ok(s.mean(), s.n, mu, &confidence) {
                        good.held = false;
                        good.first_violation = Some(Violation {
                            round: t,
                            player: i,
                            arm: joint.coords().to_vec(),
                            excess,
                        });
                        break;
                    }
                }
            }
        }

        if variant == ProblemVariant::B {
            let first = players[0].desired_set();
            if players[1..].iter().any(|p| p.desired_set() != first) {
                diag.desired_set_mismatches += 1;
                diag.first_desired_set_mismatch.get_or_insert(t);
            }
        }

        if let (Some(ranks), Some(g)) = (trace.ranks.as_mut(), grid.as_ref()) {
            let idx = g
                .index_of(joint.coords())
                .ok_or_else(|| Error::protocol("grid policy played an off-grid arm"))?;
            ranks.push(g.rank(&idx)?);
        }
        trace.arms.extend_from_slice(joint.coords());
        trace.deltas.push(delta);
        trace.cumulative.push(cumulative);
        trace.good_event.push(good.held);
    }

    diag.final_arms = players.iter().map(|p| p.arm_summaries()).collect();
    Ok(Episode { trace, good_event: good, diagnostics: diag })
}

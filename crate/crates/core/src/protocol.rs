//! Problem variants, the observation records each variant hands to players,
//! and the state-machine interface every player implements.
//!
//! Observation records are distinct types per variant. A Problem A player is
//! handed a [`SharedObservation`], which has no field for anyone else's
//! action; Problem B and C players get records holding only their own
//! reward. Reading forbidden information is therefore not expressible.

use std::fmt;
use std::str::FromStr;

use crate::env::JointArm;
use crate::error::{Error, Result};
use crate::uniform::ArmStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemVariant {
    /// Actions hidden, reward shared.
    A,
    /// Actions observed, rewards private.
    B,
    /// Actions hidden, rewards private.
    C,
}

impl fmt::Display for ProblemVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemVariant::A => "A",
            ProblemVariant::B => "B",
            ProblemVariant::C => "C",
        })
    }
}

impl FromStr for ProblemVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(ProblemVariant::A),
            "B" | "b" => Ok(ProblemVariant::B),
            "C" | "c" => Ok(ProblemVariant::C),
            other => Err(format!("unknown problem variant `{other}` (expected A, B or C)")),
        }
    }
}

/// Problem A: the player's own action echoed back and the reward every
/// player received.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedObservation {
    pub own_action: Vec<f64>,
    pub reward: f64,
}

/// Problem B: the full joint action and this player's private reward.
#[derive(Debug, Clone, PartialEq)]
pub struct JointActionAndOwnReward {
    pub joint_action: JointArm,
    pub reward: f64,
}

/// Problem C: the player's own action echoed back and its private reward.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnReward {
    pub own_action: Vec<f64>,
    pub reward: f64,
}

/// One player's isolated state machine.
///
/// Each round the harness calls [`Player::act`] and, once rewards are drawn,
/// [`Player::observe`]. [`Player::step`] fuses the two the way the round
/// loop of each algorithm is written: absorb last round's observation, then
/// choose.
pub trait Player {
    type Observation;

    /// Choose this player's block of the joint action for round `t` (1-based).
    fn act(&mut self, t: u64) -> Result<Vec<f64>>;

    /// Absorb the observation produced by the action chosen last.
    fn observe(&mut self, obs: &Self::Observation) -> Result<()>;

    fn step(&mut self, t: u64, obs: Option<&Self::Observation>) -> Result<Vec<f64>> {
        match obs {
            Some(o) => self.observe(o)?,
            None if t > 1 => {
                return Err(Error::protocol(format!("observation missing in round {t}")))
            }
            None => {}
        }
        self.act(t)
    }

    /// This player's statistics for a joint arm, if it tracks that arm.
    fn stats_of(&self, joint: &[f64]) -> Option<ArmStats>;

    /// The joint arm this player believes is being played this round.
    fn intended_joint(&self) -> Option<Vec<f64>> {
        None
    }

    /// Identifiers of the arms still in the desired set, in rotation order.
    fn desired_set(&self) -> Option<Vec<u64>> {
        None
    }

    /// Whether the last action came from a commit phase (Problem C).
    fn committing(&self) -> bool {
        false
    }

    /// Snapshot of every arm this player tracks.
    fn arm_summaries(&self) -> Vec<ArmSummary>;
}

/// Final state of one tracked arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub center: Vec<f64>,
    pub stats: ArmStats,
    /// Radius at which an eliminated ball was frozen, with the round.
    pub eliminated: Option<(f64, u64)>,
}

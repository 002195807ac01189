//! Seed derivation.
//!
//! A root seed expands into independent ChaCha streams keyed by
//! `(trial, purpose)`. Each purpose gets its own stream so that, for
//! example, tie-break randomness inside a policy never shifts the reward
//! noise an environment produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// The single reward every player sees in Problem A.
    SharedReward,
    /// Player `i`'s private reward realization (Problems B and C).
    PlayerReward(usize),
    /// Randomness internal to player `i`'s policy.
    Policy(usize),
    /// Anything else a check or tool needs (pair sampling, Monte Carlo).
    Auxiliary(u64),
}

impl Purpose {
    fn code(self) -> (u64, u64) {
        match self {
            Purpose::SharedReward => (1, 0),
            Purpose::PlayerReward(i) => (2, i as u64),
            Purpose::Policy(i) => (3, i as u64),
            Purpose::Auxiliary(k) => (4, k),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(acc: u64, word: u64) -> u64 {
    splitmix(acc ^ splitmix(word))
}

/// Seed for trial number `trial` of an experiment rooted at `root`.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    mix(mix(0x6c69_7062_616e_6469, root), trial)
}

/// Deterministic stream for one purpose inside one trial.
pub fn stream(seed: u64, purpose: Purpose) -> Stream {
    let (tag, index) = purpose.code();
    let s = mix(mix(seed, tag), index);
    ChaCha8Rng::seed_from_u64(s)
}

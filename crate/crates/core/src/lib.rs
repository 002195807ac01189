//! Simulation library for multiplayer Lipschitz bandits under information
//! asymmetry: players who cannot see each other's actions, each other's
//! rewards, or either.
//!
//! Each algorithm is a per-player state machine ([`protocol::Player`]) fed
//! only the observations its problem variant allows. The [`harness`] runs
//! episodes, accounts pseudo-regret and monitors the invariants the regret
//! analysis depends on.

pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod uniform;
pub mod verify;
pub mod zooming;

pub use error::{Error, Result};

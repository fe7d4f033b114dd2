//! Evaluation environments and their file formats.

mod drifting;
mod files;
mod hier;
mod replay;

pub use drifting::{
    sigmoid, unit_gaussian_context, ContextSource, DriftPattern, DriftingLinearEnv, RewardModel,
};
pub use files::{
    format_event_log, format_taxonomy, parse_event_log, parse_event_log_str, parse_taxonomy,
    parse_taxonomy_str, write_event_log, LoggedEvent,
};
pub use hier::{synth_hier_env, HierEnv};
pub use replay::{generate_uniform_log, replayer_evaluate, ReplayOutcome};

use crate::error::Result;
use crate::rng::RandomStream;
use crate::types::{ArmId, ContextVector};

/// A reward source the harness can run a policy against.
pub trait Environment {
    /// Sorted arm pool.
    fn arms(&self) -> &[ArmId];

    fn dim(&self) -> usize;

    /// Moves the environment to round `t`; called once per round before any reward.
    fn advance(&mut self, t: u64, rng: &mut RandomStream);

    /// Mean reward of `arm` at `x` in the current round.
    fn expected_reward(&self, arm: &ArmId, x: &ContextVector) -> Result<f64>;

    /// Draws a reward for pulling `arm` at `x`.
    fn reward(&self, arm: &ArmId, x: &ContextVector, rng: &mut RandomStream) -> Result<f64>;
}

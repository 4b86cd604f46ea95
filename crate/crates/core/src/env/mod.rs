//! Ground-truth reward generators.

mod phi;
mod replay;
mod synthetic;

pub use phi::{CustomPhi, PhiFamily};
pub use replay::{load_replay, parse_replay, ReplayEnv};
pub use synthetic::{counterexample_env, ContextLaw, Family, PostNoise, SyntheticEnv, SyntheticSpec};

use crate::error::Result;
use crate::features::FeatureMap;
use crate::rng::SimRng;

/// One round's contexts. `z` is hidden from the learner until after selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// Scale constants a policy needs to size its confidence sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvBounds {
    /// Bound on `‖x‖₂`.
    pub l_x: f64,
    /// Bound on `‖φ*(x)‖₂`.
    pub l_z: f64,
    /// Bound on `‖ε‖₂`.
    pub l_eps: f64,
    /// Per-coordinate scale of `ε`.
    pub sigma_eps: f64,
    /// Sub-Gaussian scale of the reward noise.
    pub r_eta: f64,
}

impl EnvBounds {
    /// Bound on the stacked context `‖(x, z)‖₂`.
    pub fn l_u(&self) -> f64 {
        (self.l_x * self.l_x + (self.l_z + self.l_eps).powi(2)).sqrt()
    }
}

pub trait Environment: Send + Sync {
    fn num_arms(&self) -> usize;
    fn dim_x(&self) -> usize;
    fn dim_z(&self) -> usize;
    fn bounds(&self) -> EnvBounds;

    /// Draws the round's `(x, z)`.
    fn draw(&self, rng: &mut SimRng) -> Round;

    /// Realized reward of `arm`; called exactly once per round.
    fn reward(&self, arm: usize, round: &Round, rng: &mut SimRng) -> Result<f64>;

    /// Noise-free reward used as the regret benchmark.
    fn expected_reward(&self, arm: usize, round: &Round) -> Result<f64>;

    fn natural_features(&self) -> FeatureMap {
        FeatureMap::Identity
    }
}

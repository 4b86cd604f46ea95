//! Monte Carlo coverage of the two confidence sets: the reward-parameter
//! ellipsoid `‖ŵ_a − w*_a‖_{A_a} ≤ ζ_a` and the `φ̂` radius
//! `‖φ̂(x) − φ*(x)‖₂ ≤ e(x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, ExperimentConfig, PolicyKind, PolicySpec};
use super::run::{run_single_context, RunSettings};
use crate::env::{Family, SyntheticEnv, SyntheticSpec};
use crate::epl::binomial_slack;
use crate::error::{Error, Result};
use crate::estimator::LinearPhiEstimator;
use crate::policies::zeta;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageTarget {
    /// Reward-parameter ellipsoid along a poLinUCB run.
    #[default]
    Confidence,
    /// Linear `φ̂` radius at a fresh query after `horizon` updates.
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    #[serde(default)]
    pub target: CoverageTarget,
    #[serde(default = "default_dx")]
    pub d_x: usize,
    #[serde(default = "default_dz")]
    pub d_z: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub horizon: usize,
    pub runs: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub sigma_eps: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Largest acceptable failure fraction; `δ` plus a binomial `3σ` slack
    /// when absent.
    #[serde(default)]
    pub max_failure_fraction: Option<f64>,
}

fn default_dx() -> usize {
    3
}

fn default_dz() -> usize {
    2
}

fn default_k() -> usize {
    5
}

fn default_delta() -> f64 {
    0.05
}

fn default_lambda() -> f64 {
    1.0
}

impl CoverageConfig {
    pub fn new(target: CoverageTarget, horizon: usize, runs: usize) -> Self {
        CoverageConfig {
            target,
            d_x: default_dx(),
            d_z: default_dz(),
            k: default_k(),
            horizon,
            runs,
            delta: default_delta(),
            lambda: default_lambda(),
            sigma_eps: None,
            seed: 0,
            max_failure_fraction: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: CoverageConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.d_x == 0 || self.k == 0 {
            return Err(Error::Config("runs, d_x and k must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            sigma_eps: self.sigma_eps,
            ..SyntheticSpec::new(Family::Linear, self.d_x, self.d_z, self.k)
        }
    }

    fn env(&self, run: usize) -> Result<(SyntheticEnv, u64)> {
        let seed = self.seed.wrapping_add(run as u64);
        Ok((self.spec().build(&mut stream(seed, Stream::EnvParams))?, seed))
    }

    pub fn threshold(&self) -> f64 {
        self.max_failure_fraction
            .unwrap_or_else(|| self.delta + binomial_slack(self.delta, self.runs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub runs: usize,
    pub failures: usize,
    pub threshold: f64,
}

impl CoverageReport {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.runs as f64
    }

    pub fn passes(&self) -> bool {
        self.failure_fraction() <= self.threshold
    }
}

/// Whether any arm's ellipsoid misses its true parameter at any round of one
/// poLinUCB run.
pub fn confidence_run_fails(config: &CoverageConfig, run: usize) -> Result<bool> {
    let (env, seed) = config.env(run)?;
    let mut experiment = ExperimentConfig::new(EnvConfig::Synthetic(config.spec()), config.horizon, vec![seed]);
    experiment.lambda = config.lambda;
    experiment.delta = config.delta;
    let spec = PolicySpec::new(PolicyKind::Polinucb);
    let settings = RunSettings {
        config: &experiment,
        spec: &spec,
    };
    let truths: Vec<_> = (0..env.num_arms()).map(|a| env.stacked_parameter(a)).collect();
    let mut failed = false;
    let mut hook = |_t: usize, learner: &super::run::Learner| -> Result<()> {
        let policy = learner.policy_config().expect("poLinUCB has a config");
        for (arm, truth) in learner.arm_models().iter().zip(&truths) {
            if arm.estimation_error(truth)? > zeta(policy, arm.pulls(), arm.dim()) {
                failed = true;
            }
        }
        Ok(())
    };
    run_single_context(&env, &settings, seed, Some(&mut hook))?;
    Ok(failed)
}

/// Whether the `φ̂` radius misses `φ*` at a fresh query after `horizon`
/// updates, with `R_ε = σ_ε`.
pub fn phi_run_fails(config: &CoverageConfig, run: usize) -> Result<bool> {
    let (env, seed) = config.env(run)?;
    let bounds = env.bounds();
    let mut phi = LinearPhiEstimator::linear(env.dim_x(), env.dim_z(), 1.0, bounds.l_x, bounds.sigma_eps)?;
    let mut rng = stream(seed, Stream::Rounds);
    for _ in 0..config.horizon {
        let (x, z) = env.sample_round(&mut rng);
        phi.update(&x, &z)?;
    }
    let query = env.context_law().sample(&mut rng);
    let miss: f64 = phi
        .predict(&query)?
        .iter()
        .zip(env.phi_star(&query))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(miss > phi.error_radius(&query, config.delta)?)
}

pub fn run_coverage(config: &CoverageConfig) -> Result<CoverageReport> {
    config.validate()?;
    let outcomes = (0..config.runs)
        .into_par_iter()
        .map(|run| match config.target {
            CoverageTarget::Confidence => confidence_run_fails(config, run),
            CoverageTarget::Phi => phi_run_fails(config, run),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport {
        runs: config.runs,
        failures: outcomes.into_iter().filter(|&f| f).count(),
        threshold: config.threshold(),
    })
}

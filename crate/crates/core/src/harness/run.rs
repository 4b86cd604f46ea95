use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ExperimentConfig, PolicyKind, PolicySpec};
use crate::env::{EnvBounds, Environment, Round};
use crate::error::{Error, Result};
use crate::estimator::{LinearPhiEstimator, RadiusModel};
use crate::policies::{
    adc_observe, adc_select, linucb_oracle_select, linucb_xonly_observe, linucb_xonly_select, phihat_lambda,
    polinucb_observe, polinucb_select, random_select, stochastic_arm_select, ArmModel, LinUcbPhiHat, PolicyConfig,
};
use crate::rng::{stream, SimRng, Stream};
use crate::util::stack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundLog {
    /// 1-based round index.
    pub t: usize,
    pub arm: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub policy: String,
    pub seed: u64,
    pub rounds: Vec<RoundLog>,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Cumulative regret after `t` rounds.
    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.rounds[t - 1].cum_regret
        }
    }

    pub fn arms(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.arm).collect()
    }
}

/// Per-run settings resolved from the experiment config and the environment.
#[derive(Debug, Clone)]
pub struct RunSettings<'a> {
    pub config: &'a ExperimentConfig,
    pub spec: &'a PolicySpec,
}

impl RunSettings<'_> {
    fn delta(&self) -> f64 {
        self.spec.delta.unwrap_or(self.config.delta)
    }

    fn policy_config(&self, bounds: &EnvBounds, d_u: usize, estimator_alpha: f64) -> PolicyConfig {
        let horizon = self.config.horizon;
        let delta = self.delta();
        let l_u = match self.spec.kind {
            PolicyKind::LinucbXonly => bounds.l_x,
            _ => bounds.l_u(),
        };
        let lambda = match (self.spec.lambda, self.spec.kind) {
            (Some(l), _) => l,
            (None, PolicyKind::LinucbPhihat) => phihat_lambda(l_u, d_u, estimator_alpha, horizon, delta),
            (None, _) => self.config.lambda,
        };
        // Without z the regression noise is η + ⟨β, ε⟩.
        let r_eta = match self.spec.kind {
            PolicyKind::LinucbXonly => bounds.r_eta.hypot(bounds.sigma_eps),
            _ => bounds.r_eta,
        };
        PolicyConfig {
            lambda,
            delta,
            r_eta,
            l_u,
            horizon,
        }
    }

    /// Radius queries use `δ/T` so the per-round events hold jointly.
    fn phi_delta(&self) -> f64 {
        self.delta() / self.config.horizon.max(1) as f64
    }

    fn estimator(&self, env: &dyn Environment) -> Result<LinearPhiEstimator> {
        let est = &self.config.estimator;
        let bounds = env.bounds();
        let features = self
            .spec
            .features
            .clone()
            .or_else(|| est.features.clone())
            .unwrap_or_else(|| env.natural_features());
        let radius = match est.error_model {
            Some(model) => RadiusModel::Generic(model),
            None => RadiusModel::Linear {
                r_eps: est.r_eps.unwrap_or(bounds.sigma_eps),
                l_phi: (env.dim_z() as f64).sqrt(),
            },
        };
        LinearPhiEstimator::new(env.dim_x(), env.dim_z(), features, est.reg, bounds.l_x, radius)
    }
}

/// A learner for the one-context-per-round protocol.
#[derive(Debug, Clone)]
pub(crate) enum Learner {
    PoLinUcb {
        arms: Vec<ArmModel>,
        phi: LinearPhiEstimator,
        config: PolicyConfig,
        phi_delta: f64,
    },
    PhiHat {
        model: LinUcbPhiHat,
        phi: LinearPhiEstimator,
        phi_delta: f64,
    },
    Oracle {
        arms: Vec<ArmModel>,
        config: PolicyConfig,
    },
    XOnly {
        arms: Vec<ArmModel>,
        config: PolicyConfig,
    },
    Random {
        arms: usize,
    },
}

/// What the learner chose together with the values it must remember until
/// the round's feedback arrives.
struct Choice {
    arm: usize,
    phi_hat: Vec<f64>,
    e: f64,
}

impl Learner {
    pub(crate) fn new(env: &dyn Environment, settings: &RunSettings<'_>) -> Result<Self> {
        let bounds = env.bounds();
        let (k, dx, dz) = (env.num_arms(), env.dim_x(), env.dim_z());
        let du = dx + dz;
        let phi_delta = settings.phi_delta();
        Ok(match settings.spec.kind {
            PolicyKind::Polinucb => {
                let config = settings.policy_config(&bounds, du, 0.5);
                config.validate()?;
                Learner::PoLinUcb {
                    arms: ArmModel::fleet(k, du, config.lambda)?,
                    phi: settings.estimator(env)?,
                    config,
                    phi_delta,
                }
            }
            PolicyKind::LinucbPhihat => {
                let phi = settings.estimator(env)?;
                let config = settings.policy_config(&bounds, du, phi.alpha());
                Learner::PhiHat {
                    model: LinUcbPhiHat::new(k, dx, dz, config, bounds.l_eps)?,
                    phi,
                    phi_delta,
                }
            }
            PolicyKind::LinucbOracle => {
                let config = settings.policy_config(&bounds, du, 0.5);
                config.validate()?;
                Learner::Oracle {
                    arms: ArmModel::fleet(k, du, config.lambda)?,
                    config,
                }
            }
            PolicyKind::LinucbXonly => {
                let config = settings.policy_config(&bounds, dx, 0.5);
                config.validate()?;
                Learner::XOnly {
                    arms: ArmModel::fleet(k, dx, config.lambda)?,
                    config,
                }
            }
            PolicyKind::Random => Learner::Random { arms: k },
            PolicyKind::AdcPolinucb | PolicyKind::StochasticPolinucb => {
                return Err(Error::Config(format!(
                    "{} does not use the single-context protocol",
                    settings.spec.kind
                )))
            }
        })
    }

    /// Selection sees `x` only; the oracle alone is handed the round's `z`.
    fn select(&self, x: &[f64], oracle_z: &[f64], rng: &mut SimRng) -> Result<Choice> {
        let plain = |arm| Choice {
            arm,
            phi_hat: Vec::new(),
            e: 0.0,
        };
        match self {
            Learner::PoLinUcb {
                arms,
                phi,
                config,
                phi_delta,
            } => {
                let phi_hat = phi.predict(x)?;
                let e = phi.error_radius(x, *phi_delta)?;
                let arm = polinucb_select(arms, config, x, &phi_hat, e)?;
                Ok(Choice { arm, phi_hat, e })
            }
            Learner::PhiHat { model, phi, phi_delta } => {
                let phi_hat = phi.predict(x)?;
                let e = phi.error_radius(x, *phi_delta)?;
                let arm = model.select(x, &phi_hat, e)?;
                Ok(Choice { arm, phi_hat, e })
            }
            Learner::Oracle { arms, config } => Ok(plain(linucb_oracle_select(arms, config, x, oracle_z)?)),
            Learner::XOnly { arms, config } => Ok(plain(linucb_xonly_select(arms, config, x)?)),
            Learner::Random { arms } => Ok(plain(random_select(*arms, rng)?)),
        }
    }

    fn observe(&mut self, choice: &Choice, x: &[f64], z: &[f64], reward: f64) -> Result<()> {
        match self {
            Learner::PoLinUcb { arms, phi, .. } => {
                polinucb_observe(arms, choice.arm, x, z, reward)?;
                phi.update(x, z)
            }
            Learner::PhiHat { model, phi, .. } => {
                model.observe(choice.arm, x, &choice.phi_hat, reward, choice.e)?;
                phi.update(x, z)
            }
            Learner::Oracle { arms, .. } => polinucb_observe(arms, choice.arm, x, z, reward),
            Learner::XOnly { arms, .. } => linucb_xonly_observe(arms, choice.arm, x, reward),
            Learner::Random { .. } => Ok(()),
        }
    }

    pub(crate) fn arm_models(&self) -> &[ArmModel] {
        match self {
            Learner::PoLinUcb { arms, .. } | Learner::Oracle { arms, .. } | Learner::XOnly { arms, .. } => arms,
            Learner::PhiHat { model, .. } => model.arms(),
            Learner::Random { .. } => &[],
        }
    }

    pub(crate) fn policy_config(&self) -> Option<&PolicyConfig> {
        match self {
            Learner::PoLinUcb { config, .. } | Learner::Oracle { config, .. } | Learner::XOnly { config, .. } => {
                Some(config)
            }
            Learner::PhiHat { model, .. } => Some(model.config()),
            Learner::Random { .. } => None,
        }
    }
}

fn best_expected(env: &dyn Environment, rounds: &[(usize, &Round)]) -> Result<f64> {
    rounds
        .iter()
        .map(|(arm, round)| env.expected_reward(*arm, round))
        .try_fold(f64::NEG_INFINITY, |m, r| r.map(|v| m.max(v)))
}

struct Ledger {
    rounds: Vec<RoundLog>,
    cum: f64,
}

impl Ledger {
    fn new(horizon: usize) -> Self {
        Ledger {
            rounds: Vec::with_capacity(horizon),
            cum: 0.0,
        }
    }

    fn push(&mut self, arm: usize, best: f64, got: f64) -> Result<()> {
        let gap = best - got;
        if gap < -1e-9 * best.abs().max(1.0) {
            return Err(Error::Invariant(format!("negative regret {gap} at round {}", self.rounds.len() + 1)));
        }
        let inst = gap.max(0.0);
        self.cum += inst;
        self.rounds.push(RoundLog {
            t: self.rounds.len() + 1,
            arm,
            inst_regret: inst,
            cum_regret: self.cum,
        });
        Ok(())
    }
}

/// Hook called after every round with the learner's post-update state.
pub(crate) type RoundHook<'h> = &'h mut dyn FnMut(usize, &Learner) -> Result<()>;

pub(crate) fn run_single_context(
    env: &dyn Environment,
    settings: &RunSettings<'_>,
    seed: u64,
    mut hook: Option<RoundHook<'_>>,
) -> Result<Vec<RoundLog>> {
    let horizon = settings.config.horizon;
    let mut learner = Learner::new(env, settings)?;
    let mut rounds_rng = stream(seed, Stream::Rounds);
    let mut policy_rng = stream(seed, Stream::Policy);
    let mut ledger = Ledger::new(horizon);
    let k = env.num_arms();
    for t in 0..horizon {
        let round = env.draw(&mut rounds_rng);
        let choice = learner.select(&round.x, &round.z, &mut policy_rng)?;
        let reward = env.reward(choice.arm, &round, &mut rounds_rng)?;
        let pairs: Vec<(usize, &Round)> = (0..k).map(|a| (a, &round)).collect();
        let best = best_expected(env, &pairs)?;
        ledger.push(choice.arm, best, env.expected_reward(choice.arm, &round)?)?;
        learner.observe(&choice, &round.x, &round.z, reward)?;
        if let Some(h) = hook.as_mut() {
            h(t + 1, &learner)?;
        }
    }
    Ok(ledger.rounds)
}

/// Each arm draws its own `(x_a, z_a)` and keeps its own `φ̂_a`.
fn run_action_dependent(env: &dyn Environment, settings: &RunSettings<'_>, seed: u64) -> Result<Vec<RoundLog>> {
    let horizon = settings.config.horizon;
    let bounds = env.bounds();
    let (k, du) = (env.num_arms(), env.dim_x() + env.dim_z());
    let config = settings.policy_config(&bounds, du, 0.5);
    config.validate()?;
    let mut arms = ArmModel::fleet(k, du, config.lambda)?;
    let estimator = settings.estimator(env)?;
    let mut phis = vec![estimator; k];
    let phi_delta = settings.phi_delta();
    let mut rng = stream(seed, Stream::Rounds);
    let mut ledger = Ledger::new(horizon);
    for _ in 0..horizon {
        let rounds: Vec<Round> = (0..k).map(|_| env.draw(&mut rng)).collect();
        let contexts: Vec<Vec<f64>> = rounds.iter().map(|r| r.x.clone()).collect();
        let arm = adc_select(&phis, &arms, &config, &contexts, phi_delta)?;
        let reward = env.reward(arm, &rounds[arm], &mut rng)?;
        let pairs: Vec<(usize, &Round)> = rounds.iter().enumerate().collect();
        ledger.push(arm, best_expected(env, &pairs)?, env.expected_reward(arm, &rounds[arm])?)?;
        adc_observe(&mut phis, &mut arms, arm, &rounds[arm].x, &rounds[arm].z, reward)?;
    }
    Ok(ledger.rounds)
}

/// `K` candidate actions per round scored under arm 0's parameters.
fn run_decision_set(env: &dyn Environment, settings: &RunSettings<'_>, seed: u64) -> Result<Vec<RoundLog>> {
    let horizon = settings.config.horizon;
    let bounds = env.bounds();
    let (k, du) = (env.num_arms(), env.dim_x() + env.dim_z());
    let config = settings.policy_config(&bounds, du, 0.5);
    config.validate()?;
    let mut model = ArmModel::new(du, config.lambda)?;
    let mut phi = settings.estimator(env)?;
    let phi_delta = settings.phi_delta();
    let mut rng = stream(seed, Stream::Rounds);
    let mut ledger = Ledger::new(horizon);
    for _ in 0..horizon {
        let rounds: Vec<Round> = (0..k).map(|_| env.draw(&mut rng)).collect();
        let set: Vec<Vec<f64>> = rounds.iter().map(|r| r.x.clone()).collect();
        let pick = stochastic_arm_select(&model, &phi, &config, &set, phi_delta)?;
        let chosen = &rounds[pick];
        let reward = env.reward(0, chosen, &mut rng)?;
        let pairs: Vec<(usize, &Round)> = rounds.iter().map(|r| (0, r)).collect();
        ledger.push(pick, best_expected(env, &pairs)?, env.expected_reward(0, chosen)?)?;
        model.observe(&stack(&chosen.x, &chosen.z), reward)?;
        phi.update(&chosen.x, &chosen.z)?;
    }
    Ok(ledger.rounds)
}

/// Runs one policy for one seed on an already-built environment.
pub fn run_on_env(env: &dyn Environment, config: &ExperimentConfig, spec: &PolicySpec, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let settings = RunSettings { config, spec };
    let rounds = match spec.kind {
        PolicyKind::AdcPolinucb => run_action_dependent(env, &settings, seed)?,
        PolicyKind::StochasticPolinucb => run_decision_set(env, &settings, seed)?,
        _ => run_single_context(env, &settings, seed, None)?,
    };
    Ok(RunRecord {
        policy: spec.label.clone(),
        seed,
        rounds,
        wall_time: start.elapsed(),
    })
}

/// Builds the seed's environment and runs the named policy on it.
pub fn run_experiment(config: &ExperimentConfig, policy: &str, seed: u64) -> Result<RunRecord> {
    config.validate()?;
    let spec = config.policy(policy).or_else(|_| {
        let kind: PolicyKind = policy.parse()?;
        config
            .policies
            .iter()
            .find(|p| p.kind == kind)
            .ok_or_else(|| Error::Config(format!("policy `{policy}` is not part of this experiment")))
    })?;
    let env = config.env.instantiate(seed)?;
    run_on_env(env.as_ref(), config, spec, seed)
}

/// Every (policy, seed) pair on a pool of `jobs` workers, sorted by
/// (policy label, seed).
pub fn run_all(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let envs: Vec<(u64, Box<dyn Environment>)> = config
        .seeds
        .iter()
        .map(|&s| config.env.instantiate(s).map(|e| (s, e)))
        .collect::<Result<_>>()?;
    let jobs_list: Vec<(&PolicySpec, u64, &dyn Environment)> = config
        .policies
        .iter()
        .flat_map(|p| envs.iter().map(move |(s, e)| (p, *s, e.as_ref())))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut records = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|(spec, seed, env)| run_on_env(*env, config, spec, *seed))
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by(|a, b| a.policy.cmp(&b.policy).then(a.seed.cmp(&b.seed)));
    Ok(records)
}

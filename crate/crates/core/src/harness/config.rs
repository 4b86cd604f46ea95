use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{counterexample_env, load_replay, Environment, SyntheticSpec};
use crate::error::{Error, Result};
use crate::estimator::ErrorModel;
use crate::features::FeatureMap;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Polinucb,
    LinucbPhihat,
    LinucbOracle,
    LinucbXonly,
    Random,
    AdcPolinucb,
    StochasticPolinucb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Polinucb,
        PolicyKind::LinucbPhihat,
        PolicyKind::LinucbOracle,
        PolicyKind::LinucbXonly,
        PolicyKind::Random,
        PolicyKind::AdcPolinucb,
        PolicyKind::StochasticPolinucb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Polinucb => "polinucb",
            PolicyKind::LinucbPhihat => "linucb_phihat",
            PolicyKind::LinucbOracle => "linucb_oracle",
            PolicyKind::LinucbXonly => "linucb_xonly",
            PolicyKind::Random => "random",
            PolicyKind::AdcPolinucb => "adc_polinucb",
            PolicyKind::StochasticPolinucb => "stochastic_polinucb",
        }
    }

    /// Whether the policy consults a `φ̂` estimator.
    pub fn uses_estimator(self) -> bool {
        matches!(
            self,
            PolicyKind::Polinucb
                | PolicyKind::LinucbPhihat
                | PolicyKind::AdcPolinucb
                | PolicyKind::StochasticPolinucb
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = PolicyKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown policy `{s}`; expected one of {}", known.join(", ")))
            })
    }
}

/// One policy entry: either a bare name or an object with overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyEntry")]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Name used in outputs; defaults to the registry name.
    pub label: String,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    /// Feature map for this policy's `φ̂`; overrides the experiment default.
    pub features: Option<FeatureMap>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            label: kind.name().to_string(),
            lambda: None,
            delta: None,
            features: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolicyEntry {
    Name(String),
    Detailed(DetailedEntry),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetailedEntry {
    name: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    features: Option<FeatureMap>,
}

impl TryFrom<PolicyEntry> for PolicySpec {
    type Error = Error;

    fn try_from(entry: PolicyEntry) -> Result<Self> {
        match entry {
            PolicyEntry::Name(name) => Ok(PolicySpec::new(name.parse()?)),
            PolicyEntry::Detailed(d) => {
                let kind: PolicyKind = d.name.parse()?;
                Ok(PolicySpec {
                    kind,
                    label: d.label.unwrap_or_else(|| kind.name().to_string()),
                    lambda: d.lambda,
                    delta: d.delta,
                    features: d.features,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvConfig {
    Synthetic(SyntheticSpec),
    Counterexample,
    Replay(ReplayEnvConfig),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayEnvConfig {
    /// Feature table; may be supplied on the command line instead.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Number of leading item rows used as arms; all rows by default.
    #[serde(default)]
    pub arms: Option<usize>,
}

impl EnvConfig {
    /// Builds the environment for one seed. Synthetic parameters are drawn
    /// from the seed's parameter stream.
    pub fn instantiate(&self, seed: u64) -> Result<Box<dyn Environment>> {
        match self {
            EnvConfig::Synthetic(spec) => Ok(Box::new(spec.build(&mut stream(seed, Stream::EnvParams))?)),
            EnvConfig::Counterexample => Ok(Box::new(counterexample_env())),
            EnvConfig::Replay(r) => {
                let path = r
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("replay environment needs a feature table path".into()))?;
                let env = load_replay(path)?;
                Ok(Box::new(match r.arms {
                    Some(k) => env.with_arms(k)?,
                    None => env,
                }))
            }
        }
    }
}

/// Settings for the `φ̂` estimator shared by every policy that uses one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Feature map; the environment's natural expansion when absent.
    #[serde(default)]
    pub features: Option<FeatureMap>,
    #[serde(default = "default_reg")]
    pub reg: f64,
    /// Noise scale for the linear radius; the environment's `σ_ε` when absent.
    #[serde(default)]
    pub r_eps: Option<f64>,
    /// Switches to the generic `(C₀, α)` radius.
    #[serde(default)]
    pub error_model: Option<ErrorModel>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            features: None,
            reg: default_reg(),
            r_eps: None,
            error_model: None,
        }
    }
}

fn default_reg() -> f64 {
    1.0
}

fn default_lambda() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.05
}

fn default_policies() -> Vec<PolicySpec> {
    [
        PolicyKind::LinucbOracle,
        PolicyKind::Polinucb,
        PolicyKind::LinucbPhihat,
        PolicyKind::LinucbXonly,
        PolicyKind::Random,
    ]
    .into_iter()
    .map(PolicySpec::new)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Default ridge regularizer for the reward models.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
}

impl ExperimentConfig {
    pub fn new(env: EnvConfig, horizon: usize, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            env,
            policies: default_policies(),
            horizon,
            seeds,
            output_dir: None,
            lambda: default_lambda(),
            delta: default_delta(),
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn with_policies(mut self, kinds: &[PolicyKind]) -> Self {
        self.policies = kinds.iter().copied().map(PolicySpec::new).collect();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("seed {dup} listed twice")));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        let mut labels = HashSet::new();
        if let Some(dup) = self.policies.iter().find(|p| !labels.insert(p.label.as_str())) {
            return Err(Error::Config(format!("policy label `{}` used twice", dup.label)));
        }
        let check_lambda = |l: f64, what: &str| {
            if l > 0.0 && l.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {l}")))
            }
        };
        let check_delta = |d: f64| {
            if d > 0.0 && d < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("delta must lie in (0, 1), got {d}")))
            }
        };
        check_lambda(self.lambda, "lambda")?;
        check_lambda(self.estimator.reg, "estimator reg")?;
        check_delta(self.delta)?;
        for p in &self.policies {
            if let Some(l) = p.lambda {
                check_lambda(l, "lambda")?;
            }
            if let Some(d) = p.delta {
                check_delta(d)?;
            }
        }
        if let Some(m) = &self.estimator.error_model {
            m.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn policy(&self, label: &str) -> Result<&PolicySpec> {
        self.policies
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::Config(format!("policy `{label}` is not part of this experiment")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"env": "counterexample", "horizon": 10, "seeds": [1, 2]}"#).unwrap();
        assert_eq!(c.policies.len(), 5);
        assert_eq!(c.delta, 0.05);
        assert_eq!(c.estimator, EstimatorConfig::default());
    }

    #[test]
    fn synthetic_and_overrides_parse() {
        let c = ExperimentConfig::from_json(
            r#"{
                "env": {"synthetic": {"family": "periodic", "d_x": 4, "d_z": 2, "k": 3, "noiseless_reward": true}},
                "policies": ["polinucb", {"name": "linucb_phihat", "lambda": 2.5, "features": {"kind": "identity"}}],
                "horizon": 5,
                "seeds": [7]
            }"#,
        )
        .unwrap();
        assert_eq!(c.policies[1].lambda, Some(2.5));
        assert_eq!(c.policies[1].features, Some(FeatureMap::Identity));
        let EnvConfig::Synthetic(spec) = &c.env else {
            panic!("expected synthetic env");
        };
        assert!(spec.noiseless_reward);
    }

    #[test]
    fn strictness() {
        let base = r#""env": "counterexample", "horizon": 10"#;
        let bad = [
            format!(r#"{{{base}, "seeds": [1], "horizn": 3}}"#),
            format!(r#"{{{base}, "seeds": [1, 1]}}"#),
            format!(r#"{{{base}, "seeds": []}}"#),
            format!(r#"{{{base}, "seeds": [1], "policies": ["ucb"]}}"#),
            format!(r#"{{{base}, "seeds": [1], "policies": [{{"name": "random", "lamda": 1}}]}}"#),
            format!(r#"{{{base}, "seeds": [1], "delta": 1.5}}"#),
            format!(r#"{{{base}, "seeds": [1], "policies": ["random", "random"]}}"#),
        ];
        for text in bad {
            assert!(
                matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))),
                "accepted {text}"
            );
        }
    }

    #[test]
    fn unknown_policy_message_names_it() {
        let err = "thompson".parse::<PolicyKind>().unwrap_err().to_string();
        assert!(err.contains("thompson") && err.contains("polinucb"));
    }

    #[test]
    fn registry_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
    }

    #[test]
    fn replay_without_path_is_a_config_error() {
        let env = EnvConfig::Replay(ReplayEnvConfig::default());
        assert!(matches!(env.instantiate(0), Err(Error::Config(_))));
    }
}

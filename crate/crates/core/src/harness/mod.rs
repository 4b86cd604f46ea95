//! Experiment configuration, seeded execution, aggregation and output.

mod aggregate;
mod config;
mod coverage;
mod output;
mod run;

pub use aggregate::{aggregate, aggregate_by_policy, mean_stderr, Curve};
pub use config::{EnvConfig, EstimatorConfig, ExperimentConfig, PolicyKind, PolicySpec, ReplayEnvConfig};
pub use coverage::{
    confidence_run_fails, phi_run_fails, run_coverage, CoverageConfig, CoverageReport, CoverageTarget,
};
pub use output::{emit_outputs, fmt_sig, regret_csv, regret_svg, CSV_HEADER};
pub use run::{run_all, run_experiment, run_on_env, RoundLog, RunRecord};

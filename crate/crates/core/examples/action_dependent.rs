//! Per-arm contexts and decision-set variants of poLinUCB.
//!
//! cargo run --release --example action_dependent [T]

use polinucb::env::{Family, SyntheticSpec};
use polinucb::harness::{aggregate_by_policy, run_all, EnvConfig, ExperimentConfig, PolicyKind};

fn main() -> polinucb::Result<()> {
    let horizon = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let spec = SyntheticSpec::new(Family::Linear, 5, 2, 4);
    let config = ExperimentConfig::new(EnvConfig::Synthetic(spec), horizon, (0..5).collect())
        .with_policies(&[PolicyKind::AdcPolinucb, PolicyKind::StochasticPolinucb]);
    for c in aggregate_by_policy(&run_all(&config, None)?)? {
        println!("{:<20} R_T = {:>8.1} ± {:.1}", c.policy, c.final_mean(), c.final_stderr());
    }
    Ok(())
}

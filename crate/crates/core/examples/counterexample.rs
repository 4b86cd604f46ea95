//! The one-dimensional instance where ignoring `z` costs linear regret.
//!
//! cargo run --release --example counterexample [T]

use polinucb::harness::{aggregate_by_policy, run_all, EnvConfig, ExperimentConfig, PolicyKind};

fn main() -> polinucb::Result<()> {
    let horizon = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let config = ExperimentConfig::new(EnvConfig::Counterexample, horizon, (0..5).collect()).with_policies(&[
        PolicyKind::LinucbOracle,
        PolicyKind::Polinucb,
        PolicyKind::LinucbXonly,
        PolicyKind::Random,
    ]);
    for c in aggregate_by_policy(&run_all(&config, None)?)? {
        println!("{:<14} R_T = {:>8.1}   R_T/T = {:.4}", c.policy, c.final_mean(), c.final_mean() / horizon as f64);
    }
    Ok(())
}

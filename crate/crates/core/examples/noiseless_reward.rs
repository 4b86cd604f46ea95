//! poLinUCB with and without reward noise.
//!
//! cargo run --release --example noiseless_reward

use polinucb::env::{Family, SyntheticSpec};
use polinucb::harness::{aggregate_by_policy, run_all, EnvConfig, ExperimentConfig, PolicyKind};

fn main() -> polinucb::Result<()> {
    for noiseless in [false, true] {
        let spec = SyntheticSpec {
            noiseless_reward: noiseless,
            ..SyntheticSpec::new(Family::Linear, 5, 2, 4)
        };
        let config = ExperimentConfig::new(EnvConfig::Synthetic(spec), 1000, (0..5).collect())
            .with_policies(&[PolicyKind::Polinucb, PolicyKind::LinucbXonly]);
        println!("noiseless_reward = {noiseless}");
        for c in aggregate_by_policy(&run_all(&config, None)?)? {
            println!("  {:<14} {:>8.1} ± {:.1}", c.policy, c.final_mean(), c.final_stderr());
        }
    }
    Ok(())
}

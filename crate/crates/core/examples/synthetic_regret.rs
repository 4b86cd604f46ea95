//! Mean final regret of the five baseline policies on each synthetic family.
//!
//! cargo run --release --example synthetic_regret [T] [seeds]

use polinucb::env::{Family, SyntheticSpec};
use polinucb::harness::{aggregate_by_policy, run_all, EnvConfig, ExperimentConfig};

fn main() -> polinucb::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let seeds: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    for family in [Family::Linear, Family::Polynomial, Family::Periodic] {
        let spec = SyntheticSpec::new(family, 10, 3, 5);
        let config = ExperimentConfig::new(EnvConfig::Synthetic(spec), horizon, (0..seeds).collect());
        let curves = aggregate_by_policy(&run_all(&config, None)?)?;
        println!("{family:?} (T = {horizon}, {seeds} seeds)");
        for c in &curves {
            println!("  {:<14} {:>10.1} ± {:.1}", c.policy, c.final_mean(), c.final_stderr());
        }
    }
    Ok(())
}

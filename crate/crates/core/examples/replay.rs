//! Running the policies on a small pre-featurized user/item table.
//!
//! cargo run --release --example replay

use std::fmt::Write as _;

use polinucb::harness::{aggregate_by_policy, run_all, EnvConfig, ExperimentConfig, ReplayEnvConfig};
use rand::Rng;

fn main() -> polinucb::Result<()> {
    let mut rng = polinucb::rng::seeded(11);
    let mut table = String::from("d_x,3,d_z,2\n[items]\n");
    let row = |rng: &mut polinucb::rng::SimRng| {
        (0..5).map(|_| format!("{:.4}", rng.random_range(-1.0..1.0))).collect::<Vec<_>>().join(",")
    };
    for _ in 0..8 {
        let _ = writeln!(table, "{}", row(&mut rng));
    }
    table.push_str("[users]\n");
    for _ in 0..300 {
        let _ = writeln!(table, "{}", row(&mut rng));
    }
    let path = std::env::temp_dir().join("polinucb_replay_example.csv");
    std::fs::write(&path, table).map_err(|source| polinucb::Error::Io {
        path: path.clone(),
        source,
    })?;
    let env = EnvConfig::Replay(ReplayEnvConfig {
        path: Some(path),
        arms: Some(5),
    });
    let config = ExperimentConfig::new(env, 1000, (0..5).collect());
    for c in aggregate_by_policy(&run_all(&config, None)?)? {
        println!("{:<14} {:>8.2} ± {:.2}", c.policy, c.final_mean(), c.final_stderr());
    }
    Ok(())
}

//! How often the noisy gram matrix dominates the clean one as `T` grows.
//!
//! cargo run --release --example psd_dominance

use polinucb::epl::{verify_psd_dominance, PsdTrialConfig};

fn main() -> polinucb::Result<()> {
    for horizon in [10, 100, 1000, 2000] {
        let r = verify_psd_dominance(&PsdTrialConfig {
            d: 2,
            horizon,
            l_x: 1.0,
            l_eps: 4.0,
            sigma_eps: 1.0,
            trials: 200,
            seed: 0,
        })?;
        println!("T = {horizon:>5}: frequency {:.3}, bound {:.3}", r.frequency(), r.bound);
    }
    Ok(())
}

//! Monte Carlo check of the generalized elliptical potential bound.
//!
//! cargo run --release --example epl_verify

use polinucb::epl::{verify_gepl, EplTrialConfig};

fn main() -> polinucb::Result<()> {
    println!("{:>2} {:>4} {:>9} {:>12} {:>12}", "d", "p", "failures", "bound_1", "max lhs/rhs");
    for d in [2, 5] {
        for p in [0.0, 0.5, 1.0] {
            let r = verify_gepl(&EplTrialConfig {
                d,
                horizon: 500,
                p,
                l_x: 1.0,
                l_eps: 2.0,
                sigma_eps: 0.5,
                x0_scale: 1.0,
                delta: 0.05,
                trials: 200,
                seed: 0,
            })?;
            println!("{d:>2} {p:>4} {:>9} {:>12.3} {:>12.2e}", r.failures, r.bound_term1, r.max_ratio);
        }
    }
    Ok(())
}

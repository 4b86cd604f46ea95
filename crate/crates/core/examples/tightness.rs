//! `Σ t^{-p}` against its closed-form growth rate.
//!
//! cargo run --release --example tightness

use polinucb::epl::scalar_tightness;

fn main() -> polinucb::Result<()> {
    for horizon in [100, 10_000, 1_000_000] {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (lhs, reference) = scalar_tightness(horizon, p)?;
            println!("T = {horizon:>7} p = {p:<4} sum = {lhs:>12.3} rate = {reference:>12.3} ratio = {:.4}", lhs / reference);
        }
    }
    Ok(())
}

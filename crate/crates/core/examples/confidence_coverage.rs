//! Empirical miss rates of the reward ellipsoid and of the `φ̂` radius.
//!
//! cargo run --release --example confidence_coverage [runs]

use polinucb::harness::{run_coverage, CoverageConfig, CoverageTarget};

fn main() -> polinucb::Result<()> {
    let runs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    for (target, horizon) in [(CoverageTarget::Confidence, 200), (CoverageTarget::Phi, 100)] {
        let r = run_coverage(&CoverageConfig::new(target, horizon, runs))?;
        println!(
            "{target:?}: {}/{} runs missed ({:.3}, threshold {:.3})",
            r.failures,
            r.runs,
            r.failure_fraction(),
            r.threshold
        );
    }
    Ok(())
}

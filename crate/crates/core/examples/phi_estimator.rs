//! Fitting a periodic `φ*` with raw and Fourier features.
//!
//! cargo run --release --example phi_estimator

use polinucb::env::{Family, SyntheticSpec};
use polinucb::estimator::{LinearPhiEstimator, RadiusModel};
use polinucb::features::FeatureMap;
use polinucb::rng::{stream, Stream};

fn main() -> polinucb::Result<()> {
    let env = SyntheticSpec::new(Family::Periodic, 4, 2, 3).build(&mut stream(0, Stream::EnvParams))?;
    let bounds = env.bounds();
    let radius = RadiusModel::Linear {
        r_eps: bounds.sigma_eps,
        l_phi: 2.0f64.sqrt(),
    };
    for (name, features) in [("identity", FeatureMap::Identity), ("fourier", env.natural_features())] {
        let mut phi = LinearPhiEstimator::new(4, 2, features, 1.0, bounds.l_x, radius)?;
        let mut rng = stream(0, Stream::Rounds);
        for _ in 0..500 {
            let (x, z) = env.sample_round(&mut rng);
            phi.update(&x, &z)?;
        }
        let (mut err, mut rad) = (0.0, 0.0);
        for _ in 0..200 {
            let x = env.context_law().sample(&mut rng);
            let miss: f64 = phi
                .predict(&x)?
                .iter()
                .zip(env.phi_star(&x))
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            err += miss.sqrt() / 200.0;
            rad += phi.error_radius(&x, 0.05)? / 200.0;
        }
        println!("{name:<9} mean error {err:.3}, mean radius {rad:.3}");
    }
    Ok(())
}

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use polinucb::epl::{verify_gepl, EplTrialConfig};
use polinucb::linalg::RidgeState;
use polinucb::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;

fn rows(d: usize, n: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, d), -5.0..5.0f64), 0..=n)
}

fn instance() -> impl Strategy<Value = (usize, f64, Vec<(Vec<f64>, f64)>)> {
    (1usize..=8, 0.1..10.0f64).prop_flat_map(|(d, lambda)| (Just(d), Just(lambda), rows(d, 50)))
}

fn fit(d: usize, lambda: f64, data: &[(Vec<f64>, f64)]) -> RidgeState {
    let mut s = RidgeState::new(d, lambda).unwrap();
    for (u, r) in data {
        s.update(u, *r).unwrap();
    }
    s
}

fn normal_equations(d: usize, lambda: f64, data: &[(Vec<f64>, f64)]) -> DVector<f64> {
    let mut a = DMatrix::<f64>::identity(d, d) * lambda;
    let mut b = DVector::<f64>::zeros(d);
    for (u, r) in data {
        let u = DVector::from_column_slice(u);
        a += &u * u.transpose();
        b += &u * *r;
    }
    a.lu().solve(&b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ridge_solution_matches_normal_equations((d, lambda, data) in instance()) {
        let got = fit(d, lambda, &data).solve();
        let want = normal_equations(d, lambda, &data);
        prop_assert!((got - want).amax() <= 1e-8);
    }

    #[test]
    fn inverse_norm_never_grows((d, lambda, data) in instance(), probe in prop::collection::vec(-3.0..3.0f64, 8)) {
        let probe = &probe[..d];
        let mut s = RidgeState::new(d, lambda).unwrap();
        let mut last = s.inv_norm(probe).unwrap();
        for (u, r) in &data {
            s.update(u, *r).unwrap();
            let now = s.inv_norm(probe).unwrap();
            prop_assert!(now <= last * (1.0 + 1e-10) + 1e-14);
            last = now;
        }
    }

    #[test]
    fn log_det_obeys_trace_bound((d, lambda, data) in instance()) {
        let s = fit(d, lambda, &data);
        let l2 = data.iter().map(|(u, _)| u.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
        let n = data.len() as f64;
        let cap = d as f64 * (1.0 + n * l2 / (lambda * d as f64)).ln();
        prop_assert!(s.log_det_ratio() <= cap + 1e-9);
        prop_assert!(s.log_det_ratio() >= 0.0);
    }

    #[test]
    fn gram_spectrum_is_bracketed((d, lambda, data) in instance()) {
        let s = fit(d, lambda, &data);
        let l2 = data.iter().map(|(u, _)| u.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
        let eig = s.gram().clone().symmetric_eigenvalues();
        let top = lambda + data.len() as f64 * l2;
        prop_assert!(eig.min() >= lambda * (1.0 - 1e-10));
        prop_assert!(eig.max() <= top * (1.0 + 1e-10));
    }

    #[test]
    fn prediction_is_linear_in_the_query((d, lambda, data) in instance(),
                                        a in prop::collection::vec(-3.0..3.0f64, 8),
                                        b in prop::collection::vec(-3.0..3.0f64, 8),
                                        c in -2.0..2.0f64) {
        let w = fit(d, lambda, &data).solve();
        let dot = |v: &[f64]| w.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let combo: Vec<f64> = a[..d].iter().zip(&b[..d]).map(|(x, y)| x + c * y).collect();
        let lhs = dot(&combo);
        let rhs = dot(&a[..d]) + c * dot(&b[..d]);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
    }
}

#[test]
fn incremental_gram_tracks_batch_over_many_updates() {
    let d = 6;
    let mut rng = seeded(3);
    let mut s = RidgeState::new(d, 1.0).unwrap();
    let mut batch = DMatrix::<f64>::identity(d, d);
    for _ in 0..10_000 {
        let u: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        s.update(&u, 0.0).unwrap();
        let v = DVector::from_column_slice(&u);
        batch += &v * v.transpose();
    }
    let scale = batch.norm();
    assert!((s.gram() - &batch).norm() <= 1e-9 * scale);
    assert!(s.factor_drift() <= 1e-9 * scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_noise_potential_bound_never_fails(d in 1usize..=5, p in 0.0..=1.0f64, horizon in 1usize..300, seed in any::<u64>()) {
        let r = verify_gepl(&EplTrialConfig {
            d,
            horizon,
            p,
            l_x: 1.0,
            l_eps: 0.0,
            sigma_eps: 0.0,
            x0_scale: 1.0,
            delta: 0.05,
            trials: 100,
            seed,
        }).unwrap();
        prop_assert_eq!(r.failures, 0);
    }
}

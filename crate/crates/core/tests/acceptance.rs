//! Acceptance criteria. Each test prints one `ACn PASS|FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads 1` to see them.

use std::fs;
use std::process::Command;

use rand::Rng;
use rand_distr::StandardNormal;

use polinucb::env::{Family, SyntheticSpec};
use polinucb::epl::{scalar_tightness, verify_gepl, verify_psd_dominance, EplTrialConfig, PsdTrialConfig};
use polinucb::harness::{
    aggregate_by_policy, run_all, run_coverage, CoverageConfig, CoverageTarget, Curve, EnvConfig, ExperimentConfig,
    PolicyKind,
};
use polinucb::linalg::RidgeState;
use polinucb::rng::seeded;

fn report(id: &str, pass: bool, detail: &str) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn curves(env: EnvConfig, horizon: usize, seeds: u64, kinds: &[PolicyKind]) -> Vec<Curve> {
    let config = ExperimentConfig::new(env, horizon, (0..seeds).collect()).with_policies(kinds);
    aggregate_by_policy(&run_all(&config, None).unwrap()).unwrap()
}

fn curve(curves: &[Curve], kind: PolicyKind) -> &Curve {
    curves.iter().find(|c| c.policy == kind.name()).unwrap()
}

fn pooled(a: &Curve, b: &Curve) -> f64 {
    a.final_stderr().hypot(b.final_stderr())
}

#[test]
fn ac01_counterexample_separation() {
    let t = 5000;
    let cs = curves(EnvConfig::Counterexample, t, 10, &[PolicyKind::LinucbXonly, PolicyKind::Polinucb]);
    let xonly = curve(&cs, PolicyKind::LinucbXonly).final_mean();
    let po = curve(&cs, PolicyKind::Polinucb).final_mean();
    let pass = xonly >= 0.1 * t as f64 && po <= 0.02 * t as f64;
    report(
        "AC1",
        pass,
        &format!("x-only R_T = {xonly:.1} (need ≥ {}), poLinUCB R_T = {po:.1} (need ≤ {})", 0.1 * t as f64, 0.02 * t as f64),
    );
}

#[test]
fn ac02_sublinear_growth() {
    let spec = SyntheticSpec::new(Family::Linear, 10, 3, 5);
    let cs = curves(EnvConfig::Synthetic(spec), 2000, 10, &[PolicyKind::Polinucb]);
    let c = curve(&cs, PolicyKind::Polinucb);
    let ratio = c.mean_at(2000) / c.mean_at(1000);
    report("AC2", ratio <= 1.6, &format!("R(2000)/R(1000) = {ratio:.3} (need ≤ 1.6)"));
}

#[test]
fn ac03_policy_ordering() {
    let kinds = [
        PolicyKind::LinucbOracle,
        PolicyKind::Polinucb,
        PolicyKind::LinucbPhihat,
        PolicyKind::LinucbXonly,
        PolicyKind::Random,
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for family in [Family::Linear, Family::Polynomial, Family::Periodic] {
        let cs = curves(EnvConfig::Synthetic(SyntheticSpec::new(family, 10, 3, 5)), 2000, 10, &kinds);
        let [oracle, po, phihat, xonly, random] = kinds.map(|k| curve(&cs, k));
        let checks = [
            ("oracle ≤ poLinUCB", oracle.final_mean() <= po.final_mean() + pooled(oracle, po)),
            ("poLinUCB < phihat", po.final_mean() + pooled(po, phihat) < phihat.final_mean()),
            ("phihat < x-only", phihat.final_mean() + pooled(phihat, xonly) < xonly.final_mean()),
            ("x-only < random", xonly.final_mean() + pooled(xonly, random) < random.final_mean()),
        ];
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        pass &= failed.is_empty();
        details.push(format!(
            "{family:?}: oracle {:.0}, poLinUCB {:.0}, phihat {:.0}, x-only {:.0}, random {:.0}{}",
            oracle.final_mean(),
            po.final_mean(),
            phihat.final_mean(),
            xonly.final_mean(),
            random.final_mean(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" [violated: {}]", failed.join(", "))
            }
        ));
    }
    report("AC3", pass, &details.join("; "));
}

fn epl_config(d: usize, p: f64, l_eps: f64, sigma_eps: f64) -> EplTrialConfig {
    EplTrialConfig {
        d,
        horizon: 500,
        p,
        l_x: 1.0,
        l_eps,
        sigma_eps,
        x0_scale: 1.0,
        delta: 0.05,
        trials: 200,
        seed: 0,
    }
}

#[test]
fn ac04_generalized_potential_bound() {
    let limit = 0.05 + 3.0 * (0.05f64 * 0.95 / 200.0).sqrt();
    let mut pass = true;
    let mut details = Vec::new();
    for d in [2, 5] {
        for p in [0.5, 1.0] {
            let noisy = verify_gepl(&epl_config(d, p, 2.0, 0.5)).unwrap();
            let clean = verify_gepl(&epl_config(d, p, 0.0, 0.0)).unwrap();
            let frac = noisy.failure_fraction();
            pass &= frac <= limit && clean.failures == 0;
            details.push(format!("d={d} p={p}: {frac:.3} noisy, {} clean", clean.failures));
        }
    }
    report("AC4", pass, &format!("{} (need ≤ {limit:.4} and 0)", details.join("; ")));
}

#[test]
fn ac05_psd_dominance() {
    let r = verify_psd_dominance(&PsdTrialConfig {
        d: 2,
        horizon: 2000,
        l_x: 1.0,
        l_eps: 4.0,
        sigma_eps: 1.0,
        trials: 500,
        seed: 0,
    })
    .unwrap();
    report(
        "AC5",
        r.passes(),
        &format!(
            "frequency {:.3} vs bound {:.4} − 3σ {:.4}",
            r.frequency(),
            r.bound,
            r.slack
        ),
    );
}

#[test]
fn ac06_confidence_coverage() {
    let config = CoverageConfig {
        max_failure_fraction: Some(0.065),
        ..CoverageConfig::new(CoverageTarget::Confidence, 200, 500)
    };
    let r = run_coverage(&config).unwrap();
    report(
        "AC6",
        r.passes(),
        &format!("failure fraction {:.3} over {} runs (need ≤ 0.065)", r.failure_fraction(), r.runs),
    );
}

/// Dense Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn ac07_ridge_matches_normal_equations() {
    let mut rng = seeded(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(0..=50);
        let lambda = rng.random_range(0.1..10.0);
        let mut state = RidgeState::new(d, lambda).unwrap();
        let mut a: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { lambda } else { 0.0 }).collect()).collect();
        let mut b = vec![0.0; d];
        for _ in 0..n {
            let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r: f64 = rng.sample(StandardNormal);
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += u[i] * u[j];
                }
                b[i] += r * u[i];
            }
            state.update(&u, r).unwrap();
        }
        let expected = solve_dense(a, b);
        let got = state.solve();
        for (g, e) in got.iter().zip(&expected) {
            worst = worst.max((g - e).abs());
        }
    }
    report("AC7", worst <= 1e-8, &format!("max |Δ| = {worst:.2e} over 200 instances (need ≤ 1e-8)"));
}

#[test]
fn ac08_phi_coverage() {
    let r = run_coverage(&CoverageConfig::new(CoverageTarget::Phi, 100, 2000)).unwrap();
    let holds = 1.0 - r.failure_fraction();
    report("AC8", holds >= 0.935, &format!("radius holds in {:.4} of {} trials (need ≥ 0.935)", holds, r.runs));
}

#[test]
fn ac09_scalar_tightness() {
    let mut pass = true;
    let mut details = Vec::new();
    for p in [0.0, 0.5, 1.0] {
        let (lhs, reference) = scalar_tightness(10_000, p).unwrap();
        let ratio = lhs / reference;
        pass &= (0.5..=2.0).contains(&ratio);
        details.push(format!("p={p}: {ratio:.4}"));
    }
    report("AC9", pass, &format!("{} (need within factor 2)", details.join(", ")));
}

#[test]
fn ac10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{
  "env": {"synthetic": {"family": "linear", "d_x": 4, "d_z": 2, "k": 3}},
  "policies": ["linucb_oracle", "polinucb", "linucb_phihat", "linucb_xonly", "random",
               "adc_polinucb", "stochastic_polinucb"],
  "horizon": 200,
  "seeds": [3, 1, 2]
}"#,
    )
    .unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_polinucb"))
            .args(["run", "--no-plot", "--jobs", jobs, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read(out.join("regret.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "4");
    report(
        "AC10",
        a == b && !a.is_empty(),
        &format!("two runs wrote {} and {} bytes, identical = {}", a.len(), b.len(), a == b),
    );
}

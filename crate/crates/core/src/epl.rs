//! Monte Carlo checks of the generalized elliptical potential inequality
//!
//! ```text
//! Σ_t (1 ∧ ‖x_t‖²_{X̃_{t−1}⁻¹})^p ≤ 2^p T^{1−p} log^p(det X_T / det X₀)
//!                                 + 8L_ε²(L_ε+L_x)²/σ_ε⁴ · log(32 d L_ε²(L_ε+L_x)² / (δ σ_ε⁴))
//! ```
//!
//! where `X̃_t` accumulates the noisy vectors `x_s + ε_s` and `X_T` the clean
//! ones, together with the PSD dominance event it rests on.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::env::PostNoise;
use crate::error::{check_dim, Error, Result};
use crate::linalg::RidgeState;
use crate::rng::{seeded, SimRng};

/// Binomial `3σ` slack for a null failure probability `p` over `n` trials.
pub fn binomial_slack(p: f64, n: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EplTrialConfig {
    pub d: usize,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: usize,
    pub p: f64,
    pub l_x: f64,
    pub l_eps: f64,
    pub sigma_eps: f64,
    #[serde(default = "one")]
    pub x0_scale: f64,
    pub delta: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl EplTrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.d == 0 || self.horizon == 0 {
            return bad("d and T must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(self.l_x > 0.0 && self.x0_scale > 0.0) {
            return bad("l_x and x0_scale must be positive".into());
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps <= self.l_eps) {
            return bad(format!(
                "need 0 ≤ sigma_eps ≤ l_eps, got sigma_eps = {}, l_eps = {}",
                self.sigma_eps, self.l_eps
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.trials < 100 {
            return bad(format!("at least 100 trials required, got {}", self.trials));
        }
        Ok(())
    }
}

/// Bounded isotropic noise with `E[εεᵀ] = σ²I` exactly and `‖ε‖₂ ≤ L`.
///
/// Per-coordinate Gaussians of scale `s` are rejected outside the ball; `s`
/// is calibrated so the truncated covariance equals `σ²I`, using
/// `E[‖g‖² | ‖g‖ ≤ r] = d · F_{d+2}(r²) / F_d(r²)` for standard `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicNoise {
    pub dim: usize,
    pub sigma: f64,
    pub bound: f64,
    scale: f64,
}

/// Per-coordinate variance of a `N(0, s²I)` vector conditioned on `‖g‖ ≤ bound`.
pub fn truncated_coordinate_variance(dim: usize, scale: f64, bound: f64) -> f64 {
    let r2 = (bound / scale).powi(2);
    let k = dim as f64;
    let lower = ChiSquared::new(k).expect("positive dof").cdf(r2);
    let upper = ChiSquared::new(k + 2.0).expect("positive dof").cdf(r2);
    if lower <= 0.0 {
        // Deep truncation: the law approaches the uniform ball.
        return bound * bound / (k + 2.0);
    }
    scale * scale * upper / lower
}

impl IsotropicNoise {
    pub fn zero(dim: usize) -> Self {
        IsotropicNoise {
            dim,
            sigma: 0.0,
            bound: 0.0,
            scale: 0.0,
        }
    }

    pub fn new(dim: usize, sigma: f64, bound: f64) -> Result<Self> {
        if sigma == 0.0 || bound == 0.0 {
            return Ok(Self::zero(dim));
        }
        let ceiling = bound / (dim as f64 + 2.0).sqrt();
        if sigma >= ceiling * 0.999 {
            return Err(Error::InvalidParameter(format!(
                "sigma_eps = {sigma} unattainable inside a ball of radius {bound} in dimension {dim} \
                 (covariance floor must stay below {ceiling:.6})"
            )));
        }
        let target = sigma * sigma;
        let (mut lo, mut hi) = (sigma * 1e-3, sigma);
        while truncated_coordinate_variance(dim, hi, bound) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if truncated_coordinate_variance(dim, mid, bound) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let scale = 0.5 * (lo + hi);
        let acceptance = ChiSquared::new(dim as f64)
            .expect("positive dof")
            .cdf((bound / scale).powi(2));
        if acceptance < 1e-3 {
            return Err(Error::InvalidParameter(format!(
                "truncation at {bound} keeps only {acceptance:.2e} of the Gaussian mass"
            )));
        }
        Ok(IsotropicNoise {
            dim,
            sigma,
            bound,
            scale,
        })
    }

    /// Per-coordinate scale of the underlying Gaussian.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Per-coordinate standard deviation after truncation.
    pub fn effective_sigma(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            truncated_coordinate_variance(self.dim, self.scale, self.bound).sqrt()
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        PostNoise {
            sigma: self.scale,
            bound: self.bound,
        }
        .sample(self.dim, rng)
    }
}

fn uniform_sphere(dim: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a * radius / n).collect();
        }
    }
}

/// Left side: builds `X̃_t = X₀ + Σ (x_s+ε_s)(x_s+ε_s)ᵀ` and sums
/// `(1 ∧ ‖x_t‖²_{X̃_{t−1}⁻¹})^p` with `X₀ = x0_scale · I`.
pub fn epl_lhs(xs: &[Vec<f64>], eps: &[Vec<f64>], x0_scale: f64, p: f64) -> Result<f64> {
    check_dim("noise sequence length", xs.len(), eps.len())?;
    let Some(d) = xs.first().map(Vec::len) else {
        return Ok(0.0);
    };
    let mut noisy = RidgeState::new(d, x0_scale)?;
    let mut total = 0.0;
    for (x, e) in xs.iter().zip(eps) {
        check_dim("noise vector", d, e.len())?;
        let q = noisy.inv_quad(x)?;
        total += q.min(1.0).powf(p);
        let u: Vec<f64> = x.iter().zip(e).map(|(a, b)| a + b).collect();
        noisy.absorb_gram(&u)?;
    }
    Ok(total)
}

/// `log det X_T − log det X₀` for the clean sequence.
pub fn clean_log_det_ratio(xs: &[Vec<f64>], x0_scale: f64) -> Result<f64> {
    let Some(d) = xs.first().map(Vec::len) else {
        return Ok(0.0);
    };
    let mut clean = RidgeState::new(d, x0_scale)?;
    for x in xs {
        clean.absorb_gram(x)?;
    }
    Ok(clean.log_det_ratio())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EplBound {
    /// `2^p T^{1−p} log^p(det X_T / det X₀)`.
    pub first: f64,
    /// Horizon-free noise constant; zero when `L_ε = 0`.
    pub second: f64,
}

impl EplBound {
    pub fn total(&self) -> f64 {
        self.first + self.second
    }
}

pub fn noise_constant(l_eps: f64, l_x: f64, sigma_eps: f64, d: usize, delta: f64) -> f64 {
    if l_eps == 0.0 {
        return 0.0;
    }
    let c = 8.0 * l_eps * l_eps * (l_eps + l_x).powi(2) / sigma_eps.powi(4);
    let inner = 32.0 * d as f64 * l_eps * l_eps * (l_eps + l_x).powi(2) / (delta * sigma_eps.powi(4));
    c * inner.ln()
}

#[allow(clippy::too_many_arguments)]
pub fn epl_rhs(
    horizon: usize,
    p: f64,
    det_ratio_log: f64,
    l_eps: f64,
    l_x: f64,
    sigma_eps: f64,
    d: usize,
    delta: f64,
) -> EplBound {
    let t = horizon as f64;
    EplBound {
        first: 2f64.powf(p) * t.powf(1.0 - p) * det_ratio_log.max(0.0).powf(p),
        second: noise_constant(l_eps, l_x, sigma_eps, d, delta),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeplReport {
    pub config: EplTrialConfig,
    pub failures: usize,
    /// Mean of the first bound term across trials.
    pub bound_term1: f64,
    pub bound_term2: f64,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
}

impl GeplReport {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.config.trials as f64
    }

    /// Fraction threshold `δ + 3σ`; zero-noise runs must never fail.
    pub fn threshold(&self) -> f64 {
        if self.config.l_eps == 0.0 || self.config.sigma_eps == 0.0 {
            0.0
        } else {
            self.config.delta + binomial_slack(self.config.delta, self.config.trials)
        }
    }

    pub fn passes(&self) -> bool {
        self.failure_fraction() <= self.threshold()
    }
}

struct TrialOutcome {
    lhs: f64,
    bound: EplBound,
}

fn gepl_trial(config: &EplTrialConfig, noise: &IsotropicNoise, rng: &mut SimRng) -> Result<TrialOutcome> {
    let xs: Vec<Vec<f64>> = (0..config.horizon)
        .map(|_| uniform_sphere(config.d, config.l_x, rng))
        .collect();
    let eps: Vec<Vec<f64>> = (0..config.horizon).map(|_| noise.sample(rng)).collect();
    let lhs = epl_lhs(&xs, &eps, config.x0_scale, config.p)?;
    let bound = epl_rhs(
        config.horizon,
        config.p,
        clean_log_det_ratio(&xs, config.x0_scale)?,
        noise.bound,
        config.l_x,
        noise.effective_sigma(),
        config.d,
        config.delta,
    );
    Ok(TrialOutcome { lhs, bound })
}

/// Runs `trials` independent trials (trial `i` seeded with `seed + i`) and
/// counts violations of the inequality.
pub fn verify_gepl(config: &EplTrialConfig) -> Result<GeplReport> {
    config.validate()?;
    let noise = if config.sigma_eps == 0.0 || config.l_eps == 0.0 {
        IsotropicNoise::zero(config.d)
    } else {
        IsotropicNoise::new(config.d, config.sigma_eps, config.l_eps)?
    };
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| gepl_trial(config, &noise, &mut seeded(config.seed.wrapping_add(i as u64))))
        .collect::<Result<Vec<_>>>()?;
    let failures = outcomes.iter().filter(|o| o.lhs > o.bound.total()).count();
    let n = outcomes.len() as f64;
    Ok(GeplReport {
        config: config.clone(),
        failures,
        bound_term1: outcomes.iter().map(|o| o.bound.first).sum::<f64>() / n,
        bound_term2: outcomes.first().map_or(0.0, |o| o.bound.second),
        max_ratio: outcomes
            .iter()
            .map(|o| o.lhs / o.bound.total())
            .fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub trials: usize,
    pub successes: usize,
    /// `1 − 2d·exp(−Tσ⁴ / (8L_ε²(L_ε+L_x)²))`, possibly negative.
    pub bound: f64,
    pub slack: f64,
}

impl PsdReport {
    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn passes(&self) -> bool {
        self.frequency() >= (self.bound - self.slack).max(0.0)
    }
}

/// Lower bound on `P(Σ(x_t+ε_t)(x_t+ε_t)ᵀ ≽ Σ x_t x_tᵀ)`.
pub fn psd_dominance_bound(d: usize, horizon: usize, l_x: f64, l_eps: f64, sigma_eps: f64) -> f64 {
    if l_eps == 0.0 {
        return 1.0;
    }
    let rate = horizon as f64 * sigma_eps.powi(4) / (8.0 * l_eps * l_eps * (l_eps + l_x).powi(2));
    1.0 - 2.0 * d as f64 * (-rate).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdTrialConfig {
    pub d: usize,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: usize,
    pub l_x: f64,
    pub l_eps: f64,
    pub sigma_eps: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Checks the PSD ordering per trial through the minimum eigenvalue of
/// `Σ(x_t+ε_t)(x_t+ε_t)ᵀ − Σ x_t x_tᵀ`.
pub fn verify_psd_dominance(config: &PsdTrialConfig) -> Result<PsdReport> {
    if config.trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "at least 100 trials required, got {}",
            config.trials
        )));
    }
    if config.d == 0 || config.horizon == 0 || !(config.l_x > 0.0) {
        return Err(Error::InvalidParameter("d, T, l_x must be positive".into()));
    }
    let noise = IsotropicNoise::new(config.d, config.sigma_eps, config.l_eps)?;
    let d = config.d;
    let successes = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(config.seed.wrapping_add(i as u64));
            let mut diff = DMatrix::<f64>::zeros(d, d);
            for _ in 0..config.horizon {
                let x = DVector::from_vec(uniform_sphere(d, config.l_x, &mut rng));
                let e = DVector::from_vec(noise.sample(&mut rng));
                diff += &x * e.transpose() + &e * x.transpose() + &e * e.transpose();
            }
            let scale = diff.norm().max(1.0);
            let min_eig = diff.symmetric_eigenvalues().min();
            min_eig >= -1e-12 * scale
        })
        .filter(|&ok| ok)
        .count();
    let bound = psd_dominance_bound(d, config.horizon, config.l_x, noise.bound, noise.effective_sigma());
    Ok(PsdReport {
        trials: config.trials,
        successes,
        bound,
        slack: binomial_slack(bound, config.trials),
    })
}

/// `(Σ_{t≤T} t^{−p}, reference rate)` where the reference is `T^{1−p}/(1−p)`
/// or `log T` at `p = 1`.
pub fn scalar_tightness(horizon: usize, p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
    }
    if horizon < 2 {
        return Err(Error::InvalidParameter("T must be at least 2".into()));
    }
    let t = horizon as f64;
    let lhs = if p == 0.0 {
        t
    } else {
        (1..=horizon).map(|s| (s as f64).powf(-p)).sum()
    };
    let reference = if p == 1.0 {
        t.ln()
    } else {
        t.powf(1.0 - p) / (1.0 - p)
    };
    Ok((lhs, reference))
}

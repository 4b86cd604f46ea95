//! Arm-selection rules.
//!
//! All UCB-style policies share [`UcbIndex`]: for a candidate stacked
//! context `û` and arm estimate `ŵ_a`,
//!
//! ```text
//! index = ⟨û, ŵ_a⟩ + ζ_a · ‖û‖_{A_a⁻¹} + e · min(1, ‖β̂_a‖₂ + ζ_a / √λ)
//! ```
//!
//! Selection functions never mutate state; only the `observe` functions do.

mod phihat;
mod variants;

pub use phihat::{phihat_lambda, LinUcbPhiHat};
pub use variants::{adc_observe, adc_select, stochastic_arm_select};

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::RidgeState;
use crate::util::{argmax_first, stack};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Ridge regularizer `λ`.
    pub lambda: f64,
    /// Confidence level `δ`.
    pub delta: f64,
    /// Sub-Gaussian scale of the reward noise.
    pub r_eta: f64,
    /// Bound on `‖û‖₂`.
    pub l_u: f64,
    pub horizon: usize,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.r_eta >= 0.0 && self.l_u >= 0.0) {
            return Err(Error::InvalidParameter("r_eta and l_u must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `ζ = 2√λ + R_η √(d_u · log((1 + n L_u²/λ)/δ))`.
pub fn zeta(config: &PolicyConfig, pulls: usize, d_u: usize) -> f64 {
    let growth = 1.0 + pulls as f64 * config.l_u * config.l_u / config.lambda;
    let log_term = (growth / config.delta).ln().max(0.0);
    2.0 * config.lambda.sqrt() + config.r_eta * (d_u as f64 * log_term).sqrt()
}

/// Per-arm ridge model over the stacked context.
#[derive(Debug, Clone)]
pub struct ArmModel {
    ridge: RidgeState,
}

impl ArmModel {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Ok(ArmModel {
            ridge: RidgeState::new(dim, lambda)?,
        })
    }

    pub fn fleet(arms: usize, dim: usize, lambda: f64) -> Result<Vec<Self>> {
        (0..arms).map(|_| ArmModel::new(dim, lambda)).collect()
    }

    pub fn pulls(&self) -> usize {
        self.ridge.count()
    }

    pub fn dim(&self) -> usize {
        self.ridge.dim()
    }

    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    pub fn estimate(&self) -> DVector<f64> {
        self.ridge.solve()
    }

    pub fn observe(&mut self, u: &[f64], reward: f64) -> Result<()> {
        self.ridge.update(u, reward)
    }

    /// `‖ŵ − w‖_A`, the confidence-ellipsoid statistic.
    pub fn estimation_error(&self, truth: &DVector<f64>) -> Result<f64> {
        check_dim("true parameter", self.dim(), truth.len())?;
        let diff = self.estimate() - truth;
        Ok(diff.dot(&(self.ridge.gram() * &diff)).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbIndex {
    pub exploit: f64,
    pub width: f64,
    pub phi_slack: f64,
}

impl UcbIndex {
    /// Builds the index for stacked context `u`; coordinates from
    /// `beta_offset` on belong to the post-serving block.
    pub fn compute(arm: &ArmModel, u: &[f64], beta_offset: usize, zeta: f64, e: f64) -> Result<Self> {
        check_dim("ucb context", arm.dim(), u.len())?;
        let w = arm.estimate();
        let exploit: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        let width = zeta * arm.ridge.inv_norm(u)?;
        let beta_norm = w.rows(beta_offset, w.len() - beta_offset).norm();
        let beta_bound = (beta_norm + zeta / arm.ridge.reg().sqrt()).min(1.0);
        Ok(UcbIndex {
            exploit,
            width,
            phi_slack: e * beta_bound,
        })
    }

    pub fn value(&self) -> f64 {
        self.exploit + self.width + self.phi_slack
    }
}

fn check_arms(arms: &[ArmModel]) -> Result<()> {
    if arms.is_empty() {
        Err(Error::Empty("no arms to select from"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_arm(arms: usize, arm: usize) -> Result<()> {
    if arm < arms {
        Ok(())
    } else {
        Err(Error::ArmOutOfRange { arm, arms })
    }
}

/// Indices of every arm for one candidate `û = (x, phi_hat)`.
pub fn polinucb_indices(
    arms: &[ArmModel],
    config: &PolicyConfig,
    x: &[f64],
    phi_hat: &[f64],
    e: f64,
) -> Result<Vec<UcbIndex>> {
    check_arms(arms)?;
    if !(e >= 0.0) {
        return Err(Error::InvalidParameter(format!("error radius must be nonnegative, got {e}")));
    }
    let u = stack(x, phi_hat);
    arms.iter()
        .map(|arm| {
            let z = zeta(config, arm.pulls(), arm.dim());
            UcbIndex::compute(arm, &u, x.len(), z, e)
        })
        .collect()
}

/// poLinUCB: optimistic arm for `û = (x_t, φ̂_{t−1}(x_t))` with φ-radius `e`.
pub fn polinucb_select(
    arms: &[ArmModel],
    config: &PolicyConfig,
    x: &[f64],
    phi_hat: &[f64],
    e: f64,
) -> Result<usize> {
    let indices = polinucb_indices(arms, config, x, phi_hat, e)?;
    Ok(argmax_first(indices.iter().map(UcbIndex::value)))
}

/// Absorbs the realized `(x, z, r)` into the pulled arm.
pub fn polinucb_observe(arms: &mut [ArmModel], arm: usize, x: &[f64], z: &[f64], reward: f64) -> Result<()> {
    check_arm(arms.len(), arm)?;
    arms[arm].observe(&stack(x, z), reward)
}

/// LinUCB that sees the realized post-serving context before choosing.
pub fn linucb_oracle_select(arms: &[ArmModel], config: &PolicyConfig, x: &[f64], z: &[f64]) -> Result<usize> {
    polinucb_select(arms, config, x, z, 0.0)
}

/// LinUCB on the pre-serving context alone.
pub fn linucb_xonly_select(arms: &[ArmModel], config: &PolicyConfig, x: &[f64]) -> Result<usize> {
    polinucb_select(arms, config, x, &[], 0.0)
}

pub fn linucb_xonly_observe(arms: &mut [ArmModel], arm: usize, x: &[f64], reward: f64) -> Result<()> {
    check_arm(arms.len(), arm)?;
    arms[arm].observe(x, reward)
}

pub fn random_select(arms: usize, rng: &mut impl Rng) -> Result<usize> {
    if arms == 0 {
        return Err(Error::Empty("no arms to select from"));
    }
    Ok(rng.random_range(0..arms))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::rng::seeded;

    fn cfg(lambda: f64, delta: f64, r_eta: f64, l_u: f64) -> PolicyConfig {
        PolicyConfig {
            lambda,
            delta,
            r_eta,
            l_u,
            horizon: 100,
        }
    }

    #[test]
    fn zeta_examples() {
        assert_relative_eq!(zeta(&cfg(4.0, 1.0, 1.0, 1.0), 0, 3), 4.0, epsilon = 1e-12);
        let c = cfg(1.0, 0.1, 1.0, 1.0);
        let expect0 = 2.0 + (2.0 * 10f64.ln()).sqrt();
        let expect3 = 2.0 + (2.0 * 40f64.ln()).sqrt();
        assert_relative_eq!(zeta(&c, 0, 2), expect0, epsilon = 1e-12);
        assert_relative_eq!(zeta(&c, 3, 2), expect3, epsilon = 1e-12);
        assert!((expect0 - 4.1460).abs() < 1e-4);
        assert!((expect3 - 4.7162).abs() < 1e-4);
    }

    #[test]
    fn single_arm_and_fresh_arms() {
        let c = cfg(1.0, 0.1, 0.5, 2.0);
        let one = ArmModel::fleet(1, 2, 1.0).unwrap();
        assert_eq!(polinucb_select(&one, &c, &[1.0], &[2.0], 0.3).unwrap(), 0);
        let fresh = ArmModel::fleet(4, 2, 1.0).unwrap();
        assert_eq!(polinucb_select(&fresh, &c, &[-1.0], &[0.5], 0.0).unwrap(), 0);
        assert_eq!(linucb_oracle_select(&fresh, &c, &[-1.0], &[0.5]).unwrap(), 0);
        let fresh_x = ArmModel::fleet(4, 1, 1.0).unwrap();
        assert_eq!(linucb_xonly_select(&fresh_x, &c, &[3.0]).unwrap(), 0);
        assert!(matches!(polinucb_select(&[], &c, &[1.0], &[], 0.0), Err(Error::Empty(_))));
    }

    #[test]
    fn hand_evaluated_two_arm_choice() {
        let c = cfg(1.0, 0.5, 1.0, 1.0);
        let mut arms = ArmModel::fleet(2, 2, 1.0).unwrap();
        polinucb_observe(&mut arms, 0, &[1.0], &[1.0], 2.0).unwrap();

        // Arm 0: A = I + 11ᵀ = [[2,1],[1,2]], b = (2,2), ŵ = (2/3, 2/3).
        // ‖(1,1)‖²_{A⁻¹} = 2/3. Arm 1: ŵ = 0, ‖(1,1)‖²_{A⁻¹} = 2.
        let zeta0 = 2.0 + (2.0 * (2.0f64 / 0.5).ln()).sqrt();
        let zeta1 = 2.0 + (2.0 * (1.0f64 / 0.5).ln()).sqrt();
        let idx0 = 4.0 / 3.0 + zeta0 * (2.0f64 / 3.0).sqrt();
        let idx1 = zeta1 * 2f64.sqrt();
        let expected = if idx0 >= idx1 { 0 } else { 1 };

        let got = polinucb_indices(&arms, &c, &[1.0], &[1.0], 0.0).unwrap();
        assert_relative_eq!(got[0].value(), idx0, epsilon = 1e-10);
        assert_relative_eq!(got[1].value(), idx1, epsilon = 1e-10);
        assert_eq!(polinucb_select(&arms, &c, &[1.0], &[1.0], 0.0).unwrap(), expected);
    }

    #[test]
    fn observe_touches_only_pulled_arm() {
        let mut arms = ArmModel::fleet(2, 2, 1.0).unwrap();
        let before = arms[1].ridge().gram().clone();
        polinucb_observe(&mut arms, 0, &[1.0], &[0.0], 2.0).unwrap();
        assert_eq!(arms[1].ridge().gram(), &before);
        assert_eq!(arms[0].pulls(), 1);
        let w = arms[0].estimate();
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 0.0, epsilon = 1e-12);
        assert!(polinucb_observe(&mut arms, 2, &[1.0], &[0.0], 2.0).is_err());
    }

    #[test]
    fn oracle_equals_polinucb_with_true_context() {
        let c = cfg(1.0, 0.1, 0.3, 5.0);
        let mut arms = ArmModel::fleet(3, 3, 1.0).unwrap();
        let mut rng = seeded(4);
        for t in 0..60 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let z = [rng.random_range(-1.0..1.0)];
            let a = linucb_oracle_select(&arms, &c, &x, &z).unwrap();
            assert_eq!(a, polinucb_select(&arms, &c, &x, &z, 0.0).unwrap());
            polinucb_observe(&mut arms, a, &x, &z, (t % 3) as f64 * x[0]).unwrap();
        }
    }

    #[test]
    fn common_phi_slack_never_changes_the_argmax() {
        let c = cfg(1.0, 0.1, 0.3, 5.0);
        let mut arms = ArmModel::fleet(3, 2, 1.0).unwrap();
        let mut rng = seeded(17);
        for _ in 0..40 {
            let x = [rng.random_range(-2.0..2.0)];
            let z = [rng.random_range(-2.0..2.0)];
            let a = rng.random_range(0..3);
            polinucb_observe(&mut arms, a, &x, &z, x[0] - z[0]).unwrap();
        }
        let x = [0.7];
        let phi = [0.2];
        let base = polinucb_indices(&arms, &c, &x, &phi, 0.0).unwrap();
        let pick = polinucb_select(&arms, &c, &x, &phi, 0.0).unwrap();
        for e in [0.1, 1.0, 10.0] {
            let shifted = polinucb_indices(&arms, &c, &x, &phi, e).unwrap();
            for (b, s) in base.iter().zip(&shifted) {
                assert!(s.value() > b.value());
            }
            assert_eq!(polinucb_select(&arms, &c, &x, &phi, e).unwrap(), pick);
        }
    }

    #[test]
    fn random_is_uniform() {
        assert_eq!(random_select(1, &mut seeded(0)).unwrap(), 0);
        assert!(random_select(0, &mut seeded(0)).is_err());
        let k = 4;
        let n = 100_000;
        let mut counts = vec![0usize; k];
        let mut rng = seeded(99);
        for _ in 0..n {
            counts[random_select(k, &mut rng).unwrap()] += 1;
        }
        let p = 1.0 / k as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sd, "{c}");
        }
    }
}

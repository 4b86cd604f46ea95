use super::{check_arm, ArmModel, PolicyConfig, UcbIndex};
use crate::error::{Error, Result};
use crate::util::{argmax_first, stack};

/// Regularizer plug-in `λ = L_u · d_u^α · T^{1−α} · log(T/δ)`.
pub fn phihat_lambda(l_u: f64, d_u: usize, alpha: f64, horizon: usize, delta: f64) -> f64 {
    let t = horizon.max(1) as f64;
    l_u * (d_u as f64).powf(alpha) * t.powf(1.0 - alpha) * (t / delta).ln()
}

/// LinUCB on the predicted context: arms regress rewards on
/// `(x_s, φ̂_s(x_s))` and the confidence radius carries the accumulated
/// prediction error `Σ e_s`.
#[derive(Debug, Clone)]
pub struct LinUcbPhiHat {
    arms: Vec<ArmModel>,
    config: PolicyConfig,
    l_eps: f64,
    error_sum: f64,
}

impl LinUcbPhiHat {
    pub fn new(arms: usize, dim_x: usize, dim_z: usize, config: PolicyConfig, l_eps: f64) -> Result<Self> {
        config.validate()?;
        if arms == 0 {
            return Err(Error::Empty("no arms to select from"));
        }
        Ok(LinUcbPhiHat {
            arms: ArmModel::fleet(arms, dim_x + dim_z, config.lambda)?,
            config,
            l_eps,
            error_sum: 0.0,
        })
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn error_sum(&self) -> f64 {
        self.error_sum
    }

    /// `√(2(L_ε² + R_η²) log((1 + n L_u²/λ)/(δ/2))) + L_u Σe_s/√λ + 2√λ`.
    pub fn zeta(&self, pulls: usize) -> f64 {
        let c = &self.config;
        let noise = 2.0 * (self.l_eps * self.l_eps + c.r_eta * c.r_eta);
        let growth = 1.0 + pulls as f64 * c.l_u * c.l_u / c.lambda;
        let log_term = (growth / (c.delta / 2.0)).ln().max(0.0);
        (noise * log_term).sqrt() + c.l_u * self.error_sum / c.lambda.sqrt() + 2.0 * c.lambda.sqrt()
    }

    pub fn indices(&self, x: &[f64], phi_hat: &[f64], e: f64) -> Result<Vec<UcbIndex>> {
        if !(e >= 0.0) {
            return Err(Error::InvalidParameter(format!("error radius must be nonnegative, got {e}")));
        }
        let u = stack(x, phi_hat);
        self.arms
            .iter()
            .map(|arm| UcbIndex::compute(arm, &u, x.len(), self.zeta(arm.pulls()), e))
            .collect()
    }

    pub fn select(&self, x: &[f64], phi_hat: &[f64], e: f64) -> Result<usize> {
        let indices = self.indices(x, phi_hat, e)?;
        Ok(argmax_first(indices.iter().map(UcbIndex::value)))
    }

    /// Absorbs the predicted context used at selection time (not the
    /// realized `z`) and adds that round's error radius to the running sum.
    pub fn observe(&mut self, arm: usize, x: &[f64], phi_hat: &[f64], reward: f64, e: f64) -> Result<()> {
        check_arm(self.arms.len(), arm)?;
        if !(e >= 0.0) {
            return Err(Error::InvalidParameter(format!("error radius must be nonnegative, got {e}")));
        }
        self.arms[arm].observe(&stack(x, phi_hat), reward)?;
        self.error_sum += e;
        Ok(())
    }
}

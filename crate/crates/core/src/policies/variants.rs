//! Action-dependent contexts and decision-set (stochastic-arm) variants.

use super::{check_arm, zeta, ArmModel, PolicyConfig, UcbIndex};
use crate::error::{check_dim, Error, Result};
use crate::estimator::LinearPhiEstimator;
use crate::util::{argmax_first, stack};

/// Each arm sees its own context `x_{t,a}` and owns its own `φ̂_a`.
pub fn adc_select(
    phis: &[LinearPhiEstimator],
    arms: &[ArmModel],
    config: &PolicyConfig,
    contexts: &[Vec<f64>],
    delta: f64,
) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::Empty("no arms to select from"));
    }
    check_dim("per-arm contexts", arms.len(), contexts.len())?;
    check_dim("per-arm estimators", arms.len(), phis.len())?;
    let values = arms
        .iter()
        .zip(phis)
        .zip(contexts)
        .map(|((arm, phi), x)| {
            let phi_hat = phi.predict(x)?;
            let e = phi.error_radius(x, delta)?;
            let u = stack(x, &phi_hat);
            UcbIndex::compute(arm, &u, x.len(), zeta(config, arm.pulls(), arm.dim()), e).map(|i| i.value())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_first(values))
}

/// Only the pulled arm's model and estimator learn.
pub fn adc_observe(
    phis: &mut [LinearPhiEstimator],
    arms: &mut [ArmModel],
    arm: usize,
    x: &[f64],
    z: &[f64],
    reward: f64,
) -> Result<()> {
    check_arm(arms.len(), arm)?;
    check_arm(phis.len(), arm)?;
    arms[arm].observe(&stack(x, z), reward)?;
    phis[arm].update(x, z)
}

/// Picks the action `x ∈ D_t` with the largest index under one shared
/// parameter model and one shared estimator. Returns its position in the set.
pub fn stochastic_arm_select(
    model: &ArmModel,
    phi: &LinearPhiEstimator,
    config: &PolicyConfig,
    decision_set: &[Vec<f64>],
    delta: f64,
) -> Result<usize> {
    if decision_set.is_empty() {
        return Err(Error::Empty("decision set is empty"));
    }
    let z = zeta(config, model.pulls(), model.dim());
    let values = decision_set
        .iter()
        .map(|x| {
            let phi_hat = phi.predict(x)?;
            let e = phi.error_radius(x, delta)?;
            UcbIndex::compute(model, &stack(x, &phi_hat), x.len(), z, e).map(|i| i.value())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_first(values))
}

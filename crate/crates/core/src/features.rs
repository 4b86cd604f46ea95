//! Explicit feature expansions `ψ(x)` fed to the linear post-serving context
//! estimator. A nonlinear `φ*` that is linear in `ψ(x)` is learned exactly
//! at the linear rate.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureMap {
    Identity,
    /// `(1, x, x_i x_j for i ≤ j)`.
    Quadratic,
    /// `(sin(a_jᵀx), cos(a_jᵀx))` for each projection.
    Fourier { projections: Vec<Vec<f64>> },
}

impl FeatureMap {
    pub fn fourier(projections: &[DVector<f64>]) -> Self {
        FeatureMap::Fourier {
            projections: projections.iter().map(|a| a.as_slice().to_vec()).collect(),
        }
    }

    pub fn output_dim(&self, dim_x: usize) -> usize {
        match self {
            FeatureMap::Identity => dim_x,
            FeatureMap::Quadratic => 1 + dim_x + dim_x * (dim_x + 1) / 2,
            FeatureMap::Fourier { projections } => 2 * projections.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => x.to_vec(),
            FeatureMap::Quadratic => {
                let d = x.len();
                let mut out = Vec::with_capacity(self.output_dim(d));
                out.push(1.0);
                out.extend_from_slice(x);
                for i in 0..d {
                    for j in i..d {
                        out.push(x[i] * x[j]);
                    }
                }
                out
            }
            FeatureMap::Fourier { projections } => {
                let mut out = Vec::with_capacity(2 * projections.len());
                for a in projections {
                    let p: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                    out.push(p.sin());
                    out.push(p.cos());
                }
                out
            }
        }
    }

    /// Bound on `‖ψ(x)‖₂` given `‖x‖₂ ≤ l_x`.
    pub fn output_bound(&self, l_x: f64) -> f64 {
        match self {
            FeatureMap::Identity => l_x,
            FeatureMap::Quadratic => (1.0 + l_x * l_x + l_x.powi(4)).sqrt(),
            FeatureMap::Fourier { projections } => (projections.len() as f64).sqrt(),
        }
    }

    pub(crate) fn input_dim_ok(&self, dim_x: usize) -> bool {
        match self {
            FeatureMap::Fourier { projections } => projections.iter().all(|a| a.len() == dim_x),
            _ => true,
        }
    }
}

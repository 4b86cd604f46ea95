//! Post-serving context estimation: `φ̂_t` fitted by ridge regression on
//! `(ψ(x_s), z_s)` pairs, with a high-probability error radius `e_t^δ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;
use crate::linalg::RidgeState;

/// Learnability model `e = C₀ · (1 ∧ ‖x‖²_{X⁻¹})^α · log(max(t, 2)/δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModel {
    pub c0: f64,
    pub alpha: f64,
}

impl ErrorModel {
    pub fn new(c0: f64, alpha: f64) -> Result<Self> {
        let model = ErrorModel { c0, alpha };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidParameter(format!("C0 must be positive, got {}", self.c0)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1/2], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Radius for a query with `‖x‖²_{X_t⁻¹} = inv_quad` after `t` samples.
    pub fn radius(&self, inv_quad: f64, t: f64, delta: f64) -> f64 {
        self.c0 * inv_quad.min(1.0).powf(self.alpha) * (t.max(2.0) / delta).ln()
    }
}

/// How the error radius is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusModel {
    /// Self-normalized ridge bound per output coordinate, combined over
    /// `d_z` coordinates with a union bound.
    Linear {
        /// Sub-Gaussian scale of the post-serving noise.
        r_eps: f64,
        /// Bound on the column norms of the true coefficient matrix.
        l_phi: f64,
    },
    Generic(ErrorModel),
}

#[derive(Debug, Clone)]
pub struct LinearPhiEstimator {
    features: FeatureMap,
    dim_x: usize,
    dim_z: usize,
    gram: RidgeState,
    moments: DMatrix<f64>,
    coef: DMatrix<f64>,
    feature_bound: f64,
    radius: RadiusModel,
}

impl LinearPhiEstimator {
    /// `l_x` bounds `‖x‖₂` and feeds the feature-norm bound in the radius.
    pub fn new(
        dim_x: usize,
        dim_z: usize,
        features: FeatureMap,
        reg: f64,
        l_x: f64,
        radius: RadiusModel,
    ) -> Result<Self> {
        if !features.input_dim_ok(dim_x) {
            return Err(Error::InvalidParameter(format!(
                "feature map does not accept inputs of dimension {dim_x}"
            )));
        }
        match radius {
            RadiusModel::Linear { r_eps, l_phi } if !(r_eps >= 0.0 && l_phi >= 0.0) => {
                return Err(Error::InvalidParameter("radius scales must be nonnegative".into()));
            }
            RadiusModel::Generic(model) => model.validate()?,
            _ => {}
        }
        let dim_psi = features.output_dim(dim_x);
        Ok(LinearPhiEstimator {
            gram: RidgeState::new(dim_psi, reg)?,
            moments: DMatrix::zeros(dim_psi, dim_z),
            coef: DMatrix::zeros(dim_psi, dim_z),
            feature_bound: features.output_bound(l_x),
            features,
            dim_x,
            dim_z,
            radius,
        })
    }

    /// Plain linear estimator on raw `x` with the linear radius.
    pub fn linear(dim_x: usize, dim_z: usize, reg: f64, l_x: f64, r_eps: f64) -> Result<Self> {
        Self::new(
            dim_x,
            dim_z,
            FeatureMap::Identity,
            reg,
            l_x,
            RadiusModel::Linear {
                r_eps,
                l_phi: (dim_z as f64).sqrt(),
            },
        )
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_z(&self) -> usize {
        self.dim_z
    }

    pub fn count(&self) -> usize {
        self.gram.count()
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn radius_model(&self) -> RadiusModel {
        self.radius
    }

    /// Learning-rate exponent: 1/2 for the linear radius.
    pub fn alpha(&self) -> f64 {
        match self.radius {
            RadiusModel::Linear { .. } => 0.5,
            RadiusModel::Generic(m) => m.alpha,
        }
    }

    /// Coefficients `Φ̂` of shape `d_ψ × d_z`.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coef
    }

    fn featurize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("phi estimator input", self.dim_x, x.len())?;
        Ok(self.features.apply(x))
    }

    pub fn update(&mut self, x: &[f64], z: &[f64]) -> Result<()> {
        check_dim("phi estimator target", self.dim_z, z.len())?;
        let psi = self.featurize(x)?;
        self.gram.absorb_gram(&psi)?;
        for (j, &zj) in z.iter().enumerate() {
            let mut col = self.moments.column_mut(j);
            for (m, &p) in col.iter_mut().zip(&psi) {
                *m += zj * p;
            }
        }
        for j in 0..self.dim_z {
            let sol = self.gram.solve_rhs(&self.moments.column(j).into_owned())?;
            self.coef.set_column(j, &sol);
        }
        Ok(())
    }

    /// `φ̂(x) = Φ̂ᵀ ψ(x)`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let psi = DVector::from_vec(self.featurize(x)?);
        Ok((self.coef.transpose() * psi).as_slice().to_vec())
    }

    /// `‖ψ(x)‖²_{X_t⁻¹}`.
    pub fn inv_quad(&self, x: &[f64]) -> Result<f64> {
        let psi = self.featurize(x)?;
        self.gram.inv_quad(&psi)
    }

    /// `e_t^δ` at query `x`.
    pub fn error_radius(&self, x: &[f64], delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        let q = self.inv_quad(x)?;
        if q == 0.0 || self.dim_z == 0 {
            return Ok(0.0);
        }
        let t = self.count() as f64;
        let e = match self.radius {
            RadiusModel::Linear { r_eps, l_phi } => {
                let reg = self.gram.reg();
                let dz = self.dim_z as f64;
                let dpsi = self.gram.dim() as f64;
                let growth = 1.0 + t * self.feature_bound.powi(2) / reg;
                let conf = (growth / (delta / dz)).ln();
                (reg.sqrt() * l_phi + r_eps * (dpsi * conf).sqrt()) * dz.sqrt() * q.sqrt()
            }
            RadiusModel::Generic(model) => model.radius(q, t, delta),
        };
        Ok(e)
    }
}

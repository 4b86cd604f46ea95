use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};

/// A caller-supplied post-serving context generator.
#[derive(Clone)]
pub struct CustomPhi {
    pub dim_z: usize,
    pub bound: f64,
    pub map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for CustomPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhi")
            .field("dim_z", &self.dim_z)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// The mean post-serving context `φ*(x) = E[z | x]`.
#[derive(Debug, Clone)]
pub enum PhiFamily {
    /// `φ*(x) = Φᵀx` with `Φ` of shape `d_x × d_z`.
    Linear { matrix: DMatrix<f64>, bound: f64 },
    /// `φ*_j(x) = ((a_jᵀx)² − c) / s_j`.
    Polynomial {
        projections: Vec<DVector<f64>>,
        center: f64,
        scales: Vec<f64>,
        bound: f64,
    },
    /// `φ*_j(x) = amplitude · sin(a_jᵀx)`.
    Periodic {
        projections: Vec<DVector<f64>>,
        amplitude: f64,
    },
    Custom(CustomPhi),
}

pub(crate) fn random_unit(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn random_sparse_unit(dim: usize, support: usize, rng: &mut impl Rng) -> DVector<f64> {
    let picked = rand::seq::index::sample(rng, dim, support.min(dim));
    loop {
        let mut v = DVector::zeros(dim);
        for i in picked.iter() {
            v[i] = rng.sample::<f64, _>(StandardNormal);
        }
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

impl PhiFamily {
    /// Random linear map scaled so that `‖Φᵀx‖₂ ≤ l_z` whenever `‖x‖₂ ≤ l_x`.
    pub fn random_linear(dim_x: usize, dim_z: usize, l_x: f64, l_z: f64, rng: &mut impl Rng) -> Self {
        let g = DMatrix::from_fn(dim_x, dim_z, |_, _| rng.sample::<f64, _>(StandardNormal));
        if g.is_empty() {
            return PhiFamily::Linear { matrix: g, bound: 0.0 };
        }
        let spectral = g.singular_values().max();
        let matrix = if spectral > 0.0 { g * (l_z / (spectral * l_x)) } else { g };
        PhiFamily::Linear { matrix, bound: l_z }
    }

    /// Random centered quadratic family for contexts uniform on `[−h, h]^{d_x}`.
    /// Each output squares a projection onto two random coordinates.
    pub fn random_polynomial(dim_x: usize, dim_z: usize, half_width: f64, l_z: f64, rng: &mut impl Rng) -> Self {
        let projections: Vec<_> = (0..dim_z).map(|_| random_sparse_unit(dim_x, 2, rng)).collect();
        // E[(aᵀx)²] for a unit vector and independent uniform coordinates.
        let center = half_width * half_width / 3.0;
        let per_output = l_z / (dim_z as f64).sqrt();
        let scales = projections
            .iter()
            .map(|a| {
                let peak = half_width * a.lp_norm(1);
                center.max(peak * peak - center) / per_output
            })
            .collect();
        PhiFamily::Polynomial {
            projections,
            center,
            scales,
            bound: l_z,
        }
    }

    pub fn random_periodic(dim_x: usize, dim_z: usize, l_z: f64, rng: &mut impl Rng) -> Self {
        let projections = (0..dim_z).map(|_| random_unit(dim_x, rng)).collect();
        PhiFamily::Periodic {
            projections,
            amplitude: l_z / (dim_z as f64).sqrt(),
        }
    }

    pub fn dim_z(&self) -> usize {
        match self {
            PhiFamily::Linear { matrix, .. } => matrix.ncols(),
            PhiFamily::Polynomial { projections, .. } | PhiFamily::Periodic { projections, .. } => {
                projections.len()
            }
            PhiFamily::Custom(c) => c.dim_z,
        }
    }

    /// Input dimension when the family fixes one.
    pub fn dim_x(&self) -> Option<usize> {
        match self {
            PhiFamily::Linear { matrix, .. } => Some(matrix.nrows()),
            PhiFamily::Polynomial { projections, .. } | PhiFamily::Periodic { projections, .. } => {
                projections.first().map(|a| a.len())
            }
            PhiFamily::Custom(_) => None,
        }
    }

    /// `L_z`: bound on `‖φ*(x)‖₂` over the context support.
    pub fn bound(&self) -> f64 {
        match self {
            PhiFamily::Linear { bound, .. } | PhiFamily::Polynomial { bound, .. } => *bound,
            PhiFamily::Periodic {
                projections,
                amplitude,
            } => amplitude * (projections.len() as f64).sqrt(),
            PhiFamily::Custom(c) => c.bound,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(d) = self.dim_x() {
            check_dim("phi* input", d, x.len())?;
        }
        let xv = DVector::from_column_slice(x);
        let out = match self {
            PhiFamily::Linear { matrix, .. } => (matrix.transpose() * xv).as_slice().to_vec(),
            PhiFamily::Polynomial {
                projections,
                center,
                scales,
                ..
            } => projections
                .iter()
                .zip(scales)
                .map(|(a, s)| {
                    let p = a.dot(&xv);
                    (p * p - center) / s
                })
                .collect(),
            PhiFamily::Periodic {
                projections,
                amplitude,
            } => projections.iter().map(|a| amplitude * a.dot(&xv).sin()).collect(),
            PhiFamily::Custom(c) => {
                let z = (c.map)(x);
                check_dim("custom phi* output", c.dim_z, z.len())?;
                z
            }
        };
        Ok(out)
    }

    pub(crate) fn validate(&self, dim_x: usize) -> Result<()> {
        if let Some(d) = self.dim_x() {
            check_dim("phi* family input", dim_x, d)?;
        }
        if !(self.bound() >= 0.0 && self.bound().is_finite()) {
            return Err(Error::InvalidParameter("phi* bound must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

//! Regularized least squares with an incrementally maintained Cholesky factor.
//!
//! [`RidgeState`] holds `A = λI + Σ u uᵀ` and `b = Σ r u`. Every update is a
//! rank-one Cholesky update (O(d²)); every [`REFACTOR_INTERVAL`] updates the
//! factor is rebuilt from the exactly accumulated gram matrix so that roundoff
//! in the factor cannot drift without bound.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

/// Updates between full refactorizations of the gram matrix.
pub const REFACTOR_INTERVAL: usize = 256;

#[derive(Debug, Clone)]
pub struct RidgeState {
    reg: f64,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    factor: Cholesky<f64, Dyn>,
    count: usize,
    since_refactor: usize,
}

impl RidgeState {
    pub fn new(dim: usize, reg: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("ridge dimension must be positive".into()));
        }
        if !(reg > 0.0 && reg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge regularizer must be positive and finite, got {reg}"
            )));
        }
        let gram = DMatrix::identity(dim, dim) * reg;
        let factor = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Invariant("λI failed to factor".into()))?;
        Ok(Self {
            reg,
            gram,
            moment: DVector::zeros(dim),
            factor,
            count: 0,
            since_refactor: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    /// Absorbs one observation: `A += u uᵀ`, `b += r u`.
    pub fn update(&mut self, u: &[f64], r: f64) -> Result<()> {
        check_dim("ridge update", self.dim(), u.len())?;
        self.absorb_gram(u)?;
        for (m, &ui) in self.moment.iter_mut().zip(u) {
            *m += r * ui;
        }
        Ok(())
    }

    /// Absorbs `u uᵀ` into the gram matrix only. The moment vector is left
    /// untouched; used by estimators that keep their own right-hand sides.
    pub fn absorb_gram(&mut self, u: &[f64]) -> Result<()> {
        check_dim("ridge update", self.dim(), u.len())?;
        let d = self.dim();
        for j in 0..d {
            let uj = u[j];
            if uj == 0.0 {
                continue;
            }
            for i in 0..d {
                self.gram[(i, j)] += u[i] * uj;
            }
        }
        self.count += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor()?;
        } else {
            let v = DVector::from_column_slice(u);
            self.factor.rank_one_update(&v, 1.0);
        }
        Ok(())
    }

    /// Rebuilds the Cholesky factor from the accumulated gram matrix.
    pub fn refactor(&mut self) -> Result<()> {
        self.factor = Cholesky::new(self.gram.clone()).ok_or_else(|| {
            Error::Invariant(format!(
                "gram matrix lost positive definiteness after {} updates",
                self.count
            ))
        })?;
        self.since_refactor = 0;
        Ok(())
    }

    /// `ŵ = A⁻¹ b`.
    pub fn solve(&self) -> DVector<f64> {
        self.factor.solve(&self.moment)
    }

    /// `A⁻¹ rhs` for an arbitrary right-hand side of matching dimension.
    pub fn solve_rhs(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("ridge solve", self.dim(), rhs.len())?;
        Ok(self.factor.solve(rhs))
    }

    /// `uᵀ A⁻¹ u`, via one triangular solve against the factor.
    pub fn inv_quad(&self, u: &[f64]) -> Result<f64> {
        check_dim("inverse norm", self.dim(), u.len())?;
        let v = DVector::from_column_slice(u);
        let y = self
            .factor
            .l_dirty()
            .solve_lower_triangular(&v)
            .ok_or_else(|| Error::Invariant("singular Cholesky factor".into()))?;
        Ok(y.norm_squared())
    }

    /// `‖u‖_{A⁻¹} = √(uᵀ A⁻¹ u)`.
    pub fn inv_norm(&self, u: &[f64]) -> Result<f64> {
        self.inv_quad(u).map(f64::sqrt)
    }

    /// `log det A − d log λ`, never negative.
    pub fn log_det_ratio(&self) -> f64 {
        let l = self.factor.l_dirty();
        let root = self.reg.sqrt();
        (0..self.dim())
            .map(|i| 2.0 * (l[(i, i)] / root).ln())
            .sum::<f64>()
            .max(0.0)
    }

    /// Frobenius distance between the factor's reconstruction `L Lᵀ` and the
    /// accumulated gram matrix.
    pub fn factor_drift(&self) -> f64 {
        let l = self.factor.l();
        (&l * l.transpose() - &self.gram).norm()
    }
}

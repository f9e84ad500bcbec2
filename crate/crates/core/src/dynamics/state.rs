use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::HilbertSpace;

/// Density operator with its space.
#[derive(Debug, Clone)]
pub struct DensityState {
    pub rho: CMat,
    pub space: HilbertSpace,
}

/// Validation tolerance for trace, Hermiticity and positivity.
pub const STATE_TOLERANCE: f64 = 1e-9;

impl DensityState {
    pub fn new(rho: CMat, space: HilbertSpace) -> Result<Self> {
        let state = DensityState::unchecked(rho, space)?;
        state.validate(STATE_TOLERANCE)?;
        Ok(state)
    }

    pub(crate) fn unchecked(rho: CMat, space: HilbertSpace) -> Result<Self> {
        if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: rho.nrows(),
            });
        }
        Ok(DensityState { rho, space })
    }

    pub fn pure(psi: &CVec, space: HilbertSpace) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::param("zero state vector"));
        }
        let v = psi / c(norm, 0.0);
        DensityState::new(linalg::projector(&v), space)
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let v = linalg::basis_vector(space.dim(), index);
        DensityState::pure(&v, space)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.rho, &self.rho).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigh(&self.rho).0[0]
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let tr = linalg::trace(&self.rho);
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::param(format!("density matrix trace {tr}")));
        }
        let herm = linalg::hermiticity_defect(&self.rho);
        if herm > tol {
            return Err(Error::param(format!("density matrix not Hermitian ({herm:e})")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -tol {
            return Err(Error::param(format!("density matrix has eigenvalue {lmin:e}")));
        }
        Ok(())
    }

    /// Diagonal of ρ in the computational (bare) basis.
    pub fn bare_populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    /// Marginal populations of subsystem `site`.
    pub fn marginal(&self, site: usize) -> Vec<f64> {
        let d = self.space.dims()[site];
        let mut out = vec![0.0; d];
        for (k, p) in self.bare_populations().into_iter().enumerate() {
            out[self.space.levels(k)[site]] += p;
        }
        out
    }
}

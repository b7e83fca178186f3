//! Semi-flat solutions (`l = 0`): `V = Hess Psi` for a real Monge-Ampere potential.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gh::{GhSolution, PotentialField};

#[derive(Debug, Clone)]
pub struct Semiflat {
    potential: PotentialField,
}

/// Wraps an `l = 0` potential, checking convexity at the sample points.
pub fn semiflat(potential: PotentialField, samples: &[Vec<f64>]) -> Result<Semiflat> {
    if potential.l() != 0 {
        return Err(Error::InvalidInput(format!("semi-flat potential must have l = 0, got {}", potential.l())));
    }
    let s = Semiflat { potential };
    for p in samples {
        s.v(p)?;
    }
    Ok(s)
}

impl Semiflat {
    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }
}

impl GhSolution for Semiflat {
    fn n(&self) -> usize {
        self.potential.n()
    }
    fn l(&self) -> usize {
        0
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.potential.hessian(p)?;
        let h = 0.5 * (&h + h.transpose());
        if h.clone().cholesky().is_none() {
            return Err(Error::NotConvex(p.to_vec()));
        }
        Ok(h)
    }
    fn w(&self, _p: &[f64]) -> Result<DMatrix<Complex64>> {
        Ok(DMatrix::zeros(0, 0))
    }
    fn dv(&self, p: &[f64], k: usize) -> Option<DMatrix<f64>> {
        self.potential.dv(p, k)
    }
    fn dw(&self, _p: &[f64], _k: usize) -> Option<DMatrix<Complex64>> {
        Some(DMatrix::zeros(0, 0))
    }
}

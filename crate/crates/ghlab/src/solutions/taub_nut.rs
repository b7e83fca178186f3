//! Taub-NUT: `V = W = l / (2 sqrt(u^2 + |eta|^2)) + a`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gh::GhSolution;
use crate::lattice::{LatticeSimplex, WallComplex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaubNut {
    pub ell: f64,
    pub a: f64,
}

pub fn taub_nut(ell: f64, a: f64) -> Result<TaubNut> {
    if !(ell > 0.0) || !(a >= 0.0) || !ell.is_finite() || !a.is_finite() {
        return Err(Error::InvalidInput(format!("Taub-NUT needs l > 0 and a >= 0, got l = {ell}, a = {a}")));
    }
    Ok(TaubNut { ell, a })
}

impl TaubNut {
    fn rho(p: &[f64]) -> Result<f64> {
        if p.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: p.len() });
        }
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r == 0.0 {
            return Err(Error::DomainViolation(p.to_vec()));
        }
        Ok(r)
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        Ok(self.ell / (2.0 * Self::rho(p)?) + self.a)
    }

    pub fn gradient(&self, p: &[f64]) -> Result<[f64; 3]> {
        let r = Self::rho(p)?;
        let c = -self.ell / (2.0 * r * r * r);
        Ok([c * p[0], c * p[1], c * p[2]])
    }

    /// Diagonal second derivatives `d^2 V / dp_k^2`.
    pub fn second_diagonal(&self, p: &[f64]) -> Result<[f64; 3]> {
        let r = Self::rho(p)?;
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        let f = |q: f64| -self.ell / (2.0 * r3) + 3.0 * self.ell * q * q / (2.0 * r5);
        Ok([f(p[0]), f(p[1]), f(p[2])])
    }

    /// Flat 3D Laplacian of `V` in `(u, x, y)`.
    pub fn laplacian(&self, p: &[f64]) -> Result<f64> {
        Ok(self.second_diagonal(p)?.iter().sum())
    }
}

impl GhSolution for TaubNut {
    fn n(&self) -> usize {
        1
    }
    fn l(&self) -> usize {
        1
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, self.value(p)?))
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        Ok(DMatrix::from_element(1, 1, Complex64::new(self.value(p)?, 0.0)))
    }
    fn dv(&self, p: &[f64], k: usize) -> Option<DMatrix<f64>> {
        let g = self.gradient(p).ok()?;
        Some(DMatrix::from_element(1, 1, g[k]))
    }
    fn dw(&self, p: &[f64], k: usize) -> Option<DMatrix<Complex64>> {
        let g = self.gradient(p).ok()?;
        Some(DMatrix::from_element(1, 1, Complex64::new(g[k], 0.0)))
    }
    fn discriminant(&self) -> Option<WallComplex> {
        WallComplex::with_basis(&LatticeSimplex::standard(1), vec![vec![1, -1]]).ok()
    }
}

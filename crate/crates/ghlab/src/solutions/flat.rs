//! The flat metric on `C^{n+1}` in GH coordinates.
//!
//! With `a_i = |z_i|^2`, the base point is `u_i = (a_i - a_0)/2` (`i = 1..n`) and
//! `eta = z_0 z_1 .. z_n`. Going back, `a_i = a_0 + 2 u_i` and `prod a_i = |eta|^2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gh::{self, ConnectionTable, GhSolution};
use crate::lattice::{LatticeSimplex, WallComplex};

const GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatToric {
    pub n: usize,
}

impl FlatToric {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidInput(format!("flat solution needs n in {{1, 2}}, got {n}")));
        }
        Ok(Self { n })
    }

    /// `(|z_0|^2, .., |z_n|^2)` at a base point.
    pub fn moduli(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if p.len() != n + 2 {
            return Err(Error::DimensionMismatch { expected: n + 2, got: p.len() });
        }
        let u = &p[..n];
        let e2 = p[n] * p[n] + p[n + 1] * p[n + 1];
        let a0 = match n {
            1 => {
                let s = (u[0] * u[0] + e2).sqrt();
                if u[0] > 0.0 {
                    e2 / (u[0] + s)
                } else {
                    s - u[0]
                }
            }
            _ => solve_a0(u, e2)?,
        };
        let mut a = vec![a0];
        a.extend(u.iter().map(|ui| (a0 + 2.0 * ui).max(0.0)));
        if a.iter().filter(|&&ai| ai.sqrt() < GUARD).count() >= 2 {
            return Err(Error::OnDiscriminant);
        }
        Ok(a)
    }

    /// `Pi(tau)` for the standard simplex, with `u`-coordinates in which the
    /// tropical polynomial is `max(0, -u_1, .., -u_n)`.
    pub fn wall_complex(&self) -> WallComplex {
        let s = LatticeSimplex::standard(self.n);
        let basis = (1..=self.n)
            .map(|k| {
                let mut b = vec![0i64; self.n + 1];
                b[0] = 1;
                b[k] = -1;
                b
            })
            .collect();
        WallComplex::with_basis(&s, basis).expect("standard simplex basis")
    }
}

/// Root of `a (a + 2 u_1)(a + 2 u_2) = e2` on `a >= max(0, -2u_1, -2u_2)`,
/// by Newton steps kept inside a shrinking bracket.
fn solve_a0(u: &[f64], e2: f64) -> Result<f64> {
    let lo0 = u.iter().fold(0.0f64, |m, ui| m.max(-2.0 * ui));
    let f = |a: f64| -> (f64, f64) {
        let mut prod = a;
        let mut dlog = 1.0 / a.max(f64::MIN_POSITIVE);
        for ui in u {
            prod *= a + 2.0 * ui;
            dlog += 1.0 / (a + 2.0 * ui).max(f64::MIN_POSITIVE);
        }
        (prod - e2, prod * dlog)
    };
    if e2 == 0.0 {
        return Ok(lo0);
    }
    let (mut lo, mut hi) = (lo0, lo0 + 1.0);
    while f(hi).0 < 0.0 {
        hi = lo0 + 2.0 * (hi - lo0);
        if !hi.is_finite() {
            return Err(Error::RootFindingFailure("no bracket for |z_0|^2".into()));
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = f(a);
        if v < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let mut next = a - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        a = next;
    }
    Ok(a)
}

/// `e = sum_i prod_{k != i} a_k`, so that `W = 1/e`.
fn e_sum(a: &[f64]) -> f64 {
    (0..a.len())
        .map(|i| (0..a.len()).filter(|&k| k != i).map(|k| a[k]).product::<f64>())
        .sum()
}

fn w_from_moduli(a: &[f64]) -> f64 {
    1.0 / e_sum(a)
}

/// `de/da_k`.
fn e_partial(a: &[f64], k: usize) -> f64 {
    (0..a.len())
        .filter(|&i| i != k)
        .map(|i| (0..a.len()).filter(|&m| m != i && m != k).map(|m| a[m]).product::<f64>())
        .sum()
}

impl FlatToric {
    /// `d a_i / d p_k` from `prod a_i = |eta|^2` and `a_i = a_0 + 2 u_i`.
    fn moduli_partials(&self, p: &[f64], a: &[f64], k: usize) -> Vec<f64> {
        let n = self.n;
        let e = e_sum(a);
        let da0 = if k < n {
            let others: f64 = (0..=n).filter(|&m| m != k + 1).map(|m| a[m]).product();
            -2.0 * others / e
        } else {
            2.0 * p[k] / e
        };
        (0..=n).map(|i| da0 + if i >= 1 && k == i - 1 { 2.0 } else { 0.0 }).collect()
    }
}

impl GhSolution for FlatToric {
    fn n(&self) -> usize {
        self.n
    }
    fn l(&self) -> usize {
        1
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.moduli(p)?;
        let inv = DMatrix::from_fn(self.n, self.n, |i, j| a[0] + if i == j { a[i + 1] } else { 0.0 });
        inv.try_inverse().ok_or(Error::OnDiscriminant)
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        let a = self.moduli(p)?;
        Ok(DMatrix::from_element(1, 1, Complex64::new(w_from_moduli(&a), 0.0)))
    }
    /// `Phi_{u_j eta} = W conj(eta) / (2 |z_j|^2)`.
    fn mixed(&self, p: &[f64]) -> Option<Result<DMatrix<Complex64>>> {
        Some(self.moduli(p).and_then(|a| {
            let n = self.n;
            if a[1..].iter().any(|&aj| aj <= 0.0) {
                return Err(Error::DomainViolation(p.to_vec()));
            }
            let w = w_from_moduli(&a);
            let eb = Complex64::new(p[n], -p[n + 1]);
            Ok(DMatrix::from_fn(n, 1, |j, _| eb * (0.5 * w / a[j + 1])))
        }))
    }
    fn dv(&self, p: &[f64], k: usize) -> Option<DMatrix<f64>> {
        let a = self.moduli(p).ok()?;
        let da = self.moduli_partials(p, &a, k);
        let v = self.v(p).ok()?;
        let dinv = DMatrix::from_fn(self.n, self.n, |i, j| da[0] + if i == j { da[i + 1] } else { 0.0 });
        Some(-(&v * dinv * &v))
    }
    fn dw(&self, p: &[f64], k: usize) -> Option<DMatrix<Complex64>> {
        let a = self.moduli(p).ok()?;
        let da = self.moduli_partials(p, &a, k);
        let e = e_sum(&a);
        let de: f64 = (0..a.len()).map(|m| e_partial(&a, m) * da[m]).sum();
        Some(DMatrix::from_element(1, 1, Complex64::new(-de / (e * e), 0.0)))
    }
    fn discriminant(&self) -> Option<WallComplex> {
        Some(self.wall_complex())
    }
}

/// The GH data of the flat metric at the image of `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatSample {
    pub u: Vec<f64>,
    pub eta: Complex64,
    /// `(u, Re eta, Im eta)`.
    pub point: Vec<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<Complex64>,
    pub connection: ConnectionTable,
}

/// Evaluates the flat solution at `z = (z_0, .., z_n)`.
pub fn flat_solution(n: usize, z: &[Complex64]) -> Result<FlatSample> {
    let sol = FlatToric::new(n)?;
    if z.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: z.len() });
    }
    if z.iter().filter(|zi| zi.norm() < GUARD).count() >= 2 {
        return Err(Error::OnDiscriminant);
    }
    let a0 = z[0].norm_sqr();
    let u: Vec<f64> = z[1..].iter().map(|zi| 0.5 * (zi.norm_sqr() - a0)).collect();
    let eta = z.iter().product::<Complex64>();
    let mut point = u.clone();
    point.extend([eta.re, eta.im]);
    let a: Vec<f64> = z.iter().map(|zi| zi.norm_sqr()).collect();
    let v = DMatrix::from_fn(n, n, |i, j| a[0] + if i == j { a[i + 1] } else { 0.0 })
        .try_inverse()
        .ok_or(Error::OnDiscriminant)?;
    let w = DMatrix::from_element(1, 1, Complex64::new(w_from_moduli(&a), 0.0));
    let connection = gh::connection_form(&sol, &point)?;
    Ok(FlatSample { u, eta, point, v, w, connection })
}

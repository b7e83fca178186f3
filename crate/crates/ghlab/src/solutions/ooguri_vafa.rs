//! Periodic Ooguri-Vafa family on `R^2 x S^1` (`y` has period `2 pi`):
//!
//! `V = a + log(lambda)/(2 pi) - log(r)/(2 pi) + sum_{0<|m|<=M} c_m K_0(|m| r) e^{i m y} / (2 pi)`
//!
//! with `r^2 = (u - u_0)^2 + (x - x_0)^2` and `c_{-m} = conj(c_m)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bessel::{bessel_k0, bessel_k1};
use crate::error::{Error, Result};
use crate::gh::GhSolution;
use crate::quad;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Image count for the closed-form sum.
const IMAGES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSum {
    /// Modes `|m| <= M` only.
    Truncated,
    /// All modes (unit coefficients), summed in closed form over the periodic images.
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OoguriVafa {
    pub lambda: f64,
    pub m_max: usize,
    pub a: f64,
    pub source: [f64; 2],
    /// `c_1 .. c_M`.
    pub coefficients: Vec<Complex64>,
    pub mode_sum: ModeSum,
    /// `r_min <= r <= r_max`, all `y`: where positivity is checked.
    pub r_min: f64,
    pub r_max: f64,
}

/// Unit coefficients, source at the origin, positivity checked on `0.1 <= r <= 2`.
pub fn ooguri_vafa(lambda: f64, m_max: usize, a: f64) -> Result<OoguriVafa> {
    OoguriVafa::builder(lambda, m_max, a).build()
}

#[derive(Debug, Clone)]
pub struct OoguriVafaBuilder {
    inner: OoguriVafa,
}

impl OoguriVafaBuilder {
    pub fn source(mut self, u0: f64, x0: f64) -> Self {
        self.inner.source = [u0, x0];
        self
    }
    pub fn coefficients(mut self, c: Vec<Complex64>) -> Self {
        self.inner.coefficients = c;
        self
    }
    pub fn mode_sum(mut self, m: ModeSum) -> Self {
        self.inner.mode_sum = m;
        self
    }
    pub fn domain(mut self, r_min: f64, r_max: f64) -> Self {
        self.inner.r_min = r_min;
        self.inner.r_max = r_max;
        self
    }
    pub fn build(self) -> Result<OoguriVafa> {
        let s = self.inner;
        if !(s.lambda > 0.0) || !s.lambda.is_finite() || !s.a.is_finite() {
            return Err(Error::InvalidInput(format!("need lambda > 0 and finite a, got {} and {}", s.lambda, s.a)));
        }
        if s.m_max < 1 {
            return Err(Error::InvalidInput("mode cutoff M must be at least 1".into()));
        }
        if s.coefficients.len() != s.m_max {
            return Err(Error::DimensionMismatch { expected: s.m_max, got: s.coefficients.len() });
        }
        if !(s.r_min > 0.0 && s.r_max >= s.r_min) {
            return Err(Error::InvalidInput(format!("bad domain {} <= r <= {}", s.r_min, s.r_max)));
        }
        if s.mode_sum == ModeSum::Complete && s.coefficients.iter().any(|c| (c - Complex64::new(1.0, 0.0)).norm() > 0.0) {
            return Err(Error::InvalidInput("the complete mode sum needs unit coefficients".into()));
        }
        s.check_positive()?;
        Ok(s)
    }
}

impl OoguriVafa {
    pub fn builder(lambda: f64, m_max: usize, a: f64) -> OoguriVafaBuilder {
        OoguriVafaBuilder {
            inner: OoguriVafa {
                lambda,
                m_max,
                a,
                source: [0.0, 0.0],
                coefficients: vec![Complex64::new(1.0, 0.0); m_max],
                mode_sum: ModeSum::Truncated,
                r_min: 0.1,
                r_max: 2.0,
            },
        }
    }

    fn check_positive(&self) -> Result<()> {
        let (nr, ny) = (48, 96);
        let pts: Vec<(f64, f64)> = (0..nr)
            .flat_map(|i| {
                let r = self.r_min + (self.r_max - self.r_min) * i as f64 / (nr - 1) as f64;
                (0..ny).map(move |k| (r, -PI + 2.0 * PI * k as f64 / ny as f64))
            })
            .collect();
        for (r, y) in pts {
            let v = self.value_ry(r, y)?;
            if !(v > 0.0) {
                return Err(Error::NotPositive(vec![self.source[0] + r, self.source[1], y]));
            }
        }
        Ok(())
    }

    /// Zero mode shift `a + log(lambda)/(2 pi)`.
    pub fn zero_shift(&self) -> f64 {
        self.a + self.lambda.ln() / (2.0 * PI)
    }

    pub fn radius(&self, u: f64, x: f64) -> f64 {
        (u - self.source[0]).hypot(x - self.source[1])
    }

    /// Fourier mode `V^m(r)`; zero beyond the cutoff for the truncated sum.
    pub fn mode(&self, m: i64, r: f64) -> Result<Complex64> {
        if !(r > 0.0) {
            return Err(Error::NonpositiveArgument(r));
        }
        if m == 0 {
            return Ok(Complex64::new(self.zero_shift() - r.ln() / (2.0 * PI), 0.0));
        }
        let k = m.unsigned_abs() as usize;
        let c = match self.mode_sum {
            ModeSum::Complete => Complex64::new(1.0, 0.0),
            ModeSum::Truncated if k <= self.m_max => self.coefficients[k - 1],
            ModeSum::Truncated => return Ok(Complex64::new(0.0, 0.0)),
        };
        let c = if m < 0 { c.conj() } else { c };
        Ok(c * (bessel_k0(k as f64 * r)? / (2.0 * PI)))
    }

    /// `V` as a function of `r` and `y`.
    pub fn value_ry(&self, r: f64, y: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::DomainViolation(vec![r, y]));
        }
        match self.mode_sum {
            ModeSum::Truncated => {
                let mut v = self.zero_shift() - r.ln() / (2.0 * PI);
                for (k, c) in self.coefficients.iter().enumerate() {
                    let m = (k + 1) as f64;
                    let phase = Complex64::from_polar(1.0, m * y);
                    v += (c * phase).re * bessel_k0(m * r)? / PI;
                }
                Ok(v)
            }
            ModeSum::Complete => Ok(self.zero_shift() + periodic_green(r, y)),
        }
    }

    /// `V(u, x, y)`.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        if p.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: p.len() });
        }
        self.value_ry(self.radius(p[0], p[1]), p[2])
    }

    /// `(dV/dr, dV/dy)`.
    pub fn gradient_ry(&self, r: f64, y: f64) -> Result<[f64; 2]> {
        if !(r > 0.0) {
            return Err(Error::DomainViolation(vec![r, y]));
        }
        match self.mode_sum {
            ModeSum::Truncated => {
                let mut dr = -1.0 / (2.0 * PI * r);
                let mut dy = 0.0;
                for (k, c) in self.coefficients.iter().enumerate() {
                    let m = (k + 1) as f64;
                    let cp = c * Complex64::from_polar(1.0, m * y);
                    dr -= cp.re * m * bessel_k1(m * r)? / PI;
                    dy -= cp.im * m * bessel_k0(m * r)? / PI;
                }
                Ok([dr, dy])
            }
            ModeSum::Complete => Ok(periodic_green_gradient(r, y)),
        }
    }

    /// `grad V` in `(u, x, y)`.
    pub fn gradient(&self, p: &[f64]) -> Result<[f64; 3]> {
        if p.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: p.len() });
        }
        let (du, dx) = (p[0] - self.source[0], p[1] - self.source[1]);
        let r = du.hypot(dx);
        let [gr, gy] = self.gradient_ry(r, p[2])?;
        Ok([gr * du / r, gr * dx / r, gy])
    }

    /// `(V'' + V'/r - m^2 V)` for one mode at radius `r`, by twice-extrapolated differences.
    pub fn helmholtz_residual(&self, m: i64, r: f64) -> Result<f64> {
        let h0 = 0.05 * r.min(1.0);
        if r - 4.0 * h0 <= 0.0 {
            return Err(Error::NonpositiveArgument(r));
        }
        let f = |s: f64| self.mode(m, s);
        let est = |h: f64| -> Result<(Complex64, Complex64)> {
            let (a, b, c) = (f(r + h)?, f(r)?, f(r - h)?);
            Ok(((a - 2.0 * b + c) / (h * h), (a - c) / (2.0 * h)))
        };
        let t: Vec<(Complex64, Complex64)> = (0..3).map(|k| est(h0 / (1 << k) as f64)).collect::<Result<_>>()?;
        let rich = |x: &[Complex64]| {
            let l1: Vec<Complex64> = x.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
            (16.0 * l1[1] - l1[0]) / 15.0
        };
        let d2 = rich(&t.iter().map(|p| p.0).collect::<Vec<_>>());
        let d1 = rich(&t.iter().map(|p| p.1).collect::<Vec<_>>());
        let mf = m as f64;
        Ok((d2 + d1 / r - mf * mf * f(r)?).norm())
    }

    /// Mean of `V` over `y` at fixed `(u, x)`, by the trapezoid rule.
    pub fn y_average(&self, u: f64, x: f64, nodes: usize) -> Result<f64> {
        let r = self.radius(u, x);
        let mut acc = 0.0;
        for k in 0..nodes {
            acc += self.value_ry(r, -PI + 2.0 * PI * k as f64 / nodes as f64)?;
        }
        Ok(acc / nodes as f64)
    }
}

fn reduce_y(y: f64) -> f64 {
    let y = y - 2.0 * PI * ((y + PI) / (2.0 * PI)).floor();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

fn image_tail() -> f64 {
    let lf = IMAGES as f64;
    0.5 / (lf * lf) - 0.5 / (lf * lf * lf) + 0.25 / (lf * lf * lf * lf)
}

/// `(1/pi) sum_{m>=1} K_0(m r) cos(m y) - log(r)/(2 pi)` summed over the periodic
/// images of the source instead of the modes.
fn periodic_green(r: f64, y: f64) -> f64 {
    let y = reduce_y(y);
    let mut s = 1.0 / r.hypot(y);
    for l in (1..=IMAGES).rev() {
        let t = 2.0 * PI * l as f64;
        s += 1.0 / r.hypot(y + t) + 1.0 / r.hypot(y - t) - 1.0 / (PI * l as f64);
    }
    let tail = image_tail();
    (EULER_GAMMA - (4.0 * PI).ln()) / (2.0 * PI) + 0.5 * s + 0.5 * (2.0 * y * y - r * r) / (8.0 * PI * PI * PI) * tail
}

fn periodic_green_gradient(r: f64, y: f64) -> [f64; 2] {
    let y = reduce_y(y);
    let term = |yy: f64| {
        let d = r.hypot(yy);
        let d3 = d * d * d;
        (-r / d3, -yy / d3)
    };
    let (mut gr, mut gy) = term(y);
    for l in (1..=IMAGES).rev() {
        let t = 2.0 * PI * l as f64;
        let (a, b) = term(y + t);
        let (c, d) = term(y - t);
        gr += a + c;
        gy += b + d;
    }
    let k = 0.5 * image_tail() / (8.0 * PI * PI * PI);
    [0.5 * gr - 2.0 * r * k, 0.5 * gy + 4.0 * y * k]
}

impl GhSolution for OoguriVafa {
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
}

/// `oint dV/dn` over the sphere of the given radius about the source.
pub fn ov_total_flux(sol: &OoguriVafa, radius: f64) -> Result<f64> {
    ov_flux_through(sol, [sol.source[0], sol.source[1], 0.0], radius)
}

/// `oint dV/dn` over a sphere in `(u, x, y)`, outward normal.
pub fn ov_flux_through(sol: &OoguriVafa, center: [f64; 3], radius: f64) -> Result<f64> {
    if !(radius > 0.0) || radius >= PI {
        return Err(Error::InvalidInput(format!("radius must lie in (0, pi), got {radius}")));
    }
    let d = (center[0] - sol.source[0]).hypot(center[1] - sol.source[1]).hypot(center[2]);
    if (d - radius).abs() < 1e-6 * radius {
        return Err(Error::QuadratureFailure("sphere passes through the source".into()));
    }
    let nodes = 48;
    let (ts, ws) = quad::gauss_legendre_on(nodes, 0.0, PI);
    let nphi = 2 * nodes;
    let cells: Vec<(f64, f64, f64)> = ts
        .iter()
        .zip(&ws)
        .flat_map(|(&t, &w)| (0..nphi).map(move |k| (t, w, 2.0 * PI * k as f64 / nphi as f64)))
        .collect();
    let terms: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(t, w, ph)| {
            // poles on the y axis, where a line source crosses the sphere
            let nrm = [t.sin() * ph.cos(), t.sin() * ph.sin(), t.cos()];
            let p: Vec<f64> = (0..3).map(|k| center[k] + radius * nrm[k]).collect();
            let g = sol.gradient(&p).map_err(|e| Error::QuadratureFailure(e.to_string()))?;
            let dn: f64 = (0..3).map(|k| g[k] * nrm[k]).sum();
            Ok(dn * w * t.sin() * radius * radius * 2.0 * PI / nphi as f64)
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

//! Generalized Gibbons-Hawking data `(V, W, A, F, omega)` and the finite-difference
//! verifiers for closedness, compatibility, Chern flux and completeness.
//!
//! Points of the base are real vectors `(u_1..u_n, x_1, y_1, .., x_l, y_l)`
//! with `eta_p = x_p + i y_p`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, FdConfig};
use crate::lattice::{Wall, WallComplex};
use crate::quad;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn x_index(n: usize, p: usize) -> usize {
    n + 2 * p
}

pub fn y_index(n: usize, p: usize) -> usize {
    n + 2 * p + 1
}

/// Evaluators for a GH solution on the base.
pub trait GhSolution: Sync {
    fn n(&self) -> usize;
    fn l(&self) -> usize;
    fn dim(&self) -> usize {
        self.n() + 2 * self.l()
    }
    /// `V^{ij}`, real symmetric `n x n`.
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>>;
    /// `W^{pq}`, hermitian `l x l`.
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>>;
    /// `Phi_{u_j eta_p}` (`n x l`), when the connection is known in potential gauge.
    fn mixed(&self, _p: &[f64]) -> Option<Result<DMatrix<Complex64>>> {
        None
    }
    /// Closed-form `dV/dp_k`.
    fn dv(&self, _p: &[f64], _k: usize) -> Option<DMatrix<f64>> {
        None
    }
    /// Closed-form `dW/dp_k`.
    fn dw(&self, _p: &[f64], _k: usize) -> Option<DMatrix<Complex64>> {
        None
    }
    /// `Pi(tau)` in `R^n`; the singular set is `Pi(tau) x {eta = 0}`.
    fn discriminant(&self) -> Option<WallComplex> {
        None
    }
}

fn check_point<S: GhSolution + ?Sized>(sol: &S, p: &[f64]) -> Result<()> {
    if p.len() != sol.dim() {
        return Err(Error::DimensionMismatch { expected: sol.dim(), got: p.len() });
    }
    Ok(())
}

/// `V` and `W` packed as `[V (row-major), Re W, Im W]`.
fn vw_vec<S: GhSolution + ?Sized>(sol: &S, p: &[f64]) -> Result<Vec<f64>> {
    let v = sol.v(p)?;
    let w = sol.w(p)?;
    let mut out = Vec::with_capacity(v.len() + 2 * w.len());
    out.extend(v.transpose().iter().copied());
    out.extend(w.transpose().iter().map(|c| c.re));
    out.extend(w.transpose().iter().map(|c| c.im));
    Ok(out)
}

fn unpack_vw(n: usize, l: usize, s: &[f64]) -> (DMatrix<f64>, DMatrix<Complex64>) {
    let v = DMatrix::from_row_slice(n, n, &s[..n * n]);
    let w = DMatrix::from_fn(l, l, |a, b| Complex64::new(s[n * n + a * l + b], s[n * n + l * l + a * l + b]));
    (v, w)
}

/// `dV/dp_k`, `dW/dp_k` (closed form when available) and the FD disagreement.
pub fn vw_partial<S: GhSolution + ?Sized>(
    sol: &S,
    p: &[f64],
    k: usize,
    cfg: &FdConfig,
) -> Result<(DMatrix<f64>, DMatrix<Complex64>, f64)> {
    if let (Some(dv), Some(dw)) = (sol.dv(p, k), sol.dw(p, k)) {
        return Ok((dv, dw, 0.0));
    }
    let d = fd::partial(|q| vw_vec(sol, q), p, k, cfg)?;
    let (dv, dw) = unpack_vw(sol.n(), sol.l(), &d.value);
    let scale = d.value.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok((dv, dw, d.disagreement / scale))
}

/// Complex covectors `du_i`, `deta_p`, `deta-bar_p` on `R^{n+2l}`.
fn du(dim: usize, i: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[i] = Complex64::new(1.0, 0.0);
    c
}

fn deta(n: usize, dim: usize, p: usize, conj: bool) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[x_index(n, p)] = Complex64::new(1.0, 0.0);
    c[y_index(n, p)] = Complex64::new(0.0, if conj { -1.0 } else { 1.0 });
    c
}

/// `coef * (a ^ b)` added into an antisymmetric matrix, `(a ^ b)(X, Y) = a(X) b(Y) - a(Y) b(X)`.
fn add_wedge(m: &mut DMatrix<Complex64>, coef: Complex64, a: &[Complex64], b: &[Complex64]) {
    let d = a.len();
    for r in 0..d {
        for c in 0..d {
            m[(r, c)] += coef * (a[r] * b[c] - a[c] * b[r]);
        }
    }
}

fn real_part(m: &DMatrix<Complex64>) -> (DMatrix<f64>, f64) {
    let imag = m.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
    (m.map(|c| c.re), imag)
}

/// Components of `F_j` on `du_i ^ deta_p`, `du_i ^ deta-bar_q`, `deta_p ^ deta-bar_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTable {
    pub du_deta: DMatrix<Complex64>,
    pub du_detabar: DMatrix<Complex64>,
    pub deta_detabar: DMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    pub tables: Vec<CurvatureTable>,
    /// Each `F_j` as a real antisymmetric matrix on `R^{n+2l}`.
    pub real: Vec<DMatrix<f64>>,
    /// Largest imaginary part dropped when forming the real matrices.
    pub imag_residual: f64,
    pub disagreement: f64,
}

/// `F_j = (i/2) dW^{pq}/du_j deta_p ^ deta-bar_q + i dV^{ij}/deta_p du_i ^ deta_p - i dV^{ij}/deta-bar_q du_i ^ deta-bar_q`.
pub fn curvature<S: GhSolution + ?Sized>(sol: &S, p: &[f64], cfg: &FdConfig) -> Result<Curvature> {
    check_point(sol, p)?;
    let (n, l, dim) = (sol.n(), sol.l(), sol.dim());
    let mut dvs = Vec::with_capacity(dim);
    let mut dws = Vec::with_capacity(dim);
    let mut disagreement = 0.0f64;
    for k in 0..dim {
        let (dv, dw, dis) = vw_partial(sol, p, k, cfg)?;
        dvs.push(dv);
        dws.push(dw);
        disagreement = disagreement.max(dis);
    }
    let mut tables = Vec::with_capacity(n);
    let mut real = Vec::with_capacity(n);
    let mut imag_residual = 0.0f64;
    for j in 0..n {
        let mut t = CurvatureTable {
            du_deta: DMatrix::zeros(n, l),
            du_detabar: DMatrix::zeros(n, l),
            deta_detabar: DMatrix::zeros(l, l),
        };
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..n {
            for q in 0..l {
                let dx = dvs[x_index(n, q)][(i, j)];
                let dy = dvs[y_index(n, q)][(i, j)];
                let d_eta = Complex64::new(0.5 * dx, -0.5 * dy);
                let d_etabar = Complex64::new(0.5 * dx, 0.5 * dy);
                t.du_deta[(i, q)] = I * d_eta;
                t.du_detabar[(i, q)] = -I * d_etabar;
                add_wedge(&mut m, t.du_deta[(i, q)], &du(dim, i), &deta(n, dim, q, false));
                add_wedge(&mut m, t.du_detabar[(i, q)], &du(dim, i), &deta(n, dim, q, true));
            }
        }
        for a in 0..l {
            for b in 0..l {
                t.deta_detabar[(a, b)] = 0.5 * I * dws[j][(a, b)];
                add_wedge(&mut m, t.deta_detabar[(a, b)], &deta(n, dim, a, false), &deta(n, dim, b, true));
            }
        }
        let (r, im) = real_part(&m);
        imag_residual = imag_residual.max(im);
        real.push(r);
        tables.push(t);
    }
    Ok(Curvature { tables, real, imag_residual, disagreement })
}

/// Coefficients of `A_j - d theta_j` on `deta_p` (`i Phi_{u_j eta_p}`) and on
/// `deta-bar_q` (`-i Phi_{u_j eta-bar_q}`), each `n x l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionTable {
    pub deta: DMatrix<Complex64>,
    pub detabar: DMatrix<Complex64>,
}

pub fn connection_form<S: GhSolution + ?Sized>(sol: &S, p: &[f64]) -> Result<ConnectionTable> {
    check_point(sol, p)?;
    let m = sol
        .mixed(p)
        .ok_or_else(|| Error::NoPotential("connection is only available in potential gauge".into()))??;
    Ok(ConnectionTable { deta: m.map(|c| I * c), detabar: m.map(|c| -I * c.conj()) })
}

/// Basic part of `A_j` as real covectors (rows `j`) on `R^{n+2l}`.
pub fn connection_real<S: GhSolution + ?Sized>(sol: &S, p: &[f64]) -> Result<DMatrix<f64>> {
    let t = connection_form(sol, p)?;
    let (n, l, dim) = (sol.n(), sol.l(), sol.dim());
    let mut a = DMatrix::<f64>::zeros(n, dim);
    for j in 0..n {
        for q in 0..l {
            let (c, cb) = (t.deta[(j, q)], t.detabar[(j, q)]);
            // c deta + cb deta-bar
            a[(j, x_index(n, q))] = (c + cb).re;
            a[(j, y_index(n, q))] = (I * c - I * cb).re;
        }
    }
    Ok(a)
}

/// Basic part of the Kahler form, `sum_j du_j ^ a_j + (i/2) W^{pq} deta_p ^ deta-bar_q`.
pub fn kahler_form<S: GhSolution + ?Sized>(sol: &S, p: &[f64]) -> Result<DMatrix<f64>> {
    let (n, l, dim) = (sol.n(), sol.l(), sol.dim());
    let a = connection_real(sol, p)?;
    let w = sol.w(p)?;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..n {
        let aj: Vec<Complex64> = (0..dim).map(|k| Complex64::new(a[(j, k)], 0.0)).collect();
        add_wedge(&mut m, Complex64::new(1.0, 0.0), &du(dim, j), &aj);
    }
    for a_ in 0..l {
        for b in 0..l {
            add_wedge(&mut m, 0.5 * I * w[(a_, b)], &deta(n, dim, a_, false), &deta(n, dim, b, true));
        }
    }
    Ok(real_part(&m).0)
}

/// Max over forms and `a < b < c` of `|d_a M_bc + d_b M_ca + d_c M_ab|` for a list of
/// 2-form fields `M`, with the relative Richardson disagreement.
fn exterior_derivative<F>(forms: F, p: &[f64], cfg: &FdConfig) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<DMatrix<f64>>>,
{
    let dim = p.len();
    let flat = |q: &[f64]| forms(q).map(|ms| ms.iter().flat_map(|m| m.iter().copied()).collect::<Vec<f64>>());
    let mut parts = Vec::with_capacity(dim);
    let mut dis = 0.0f64;
    for k in 0..dim {
        let d = fd::partial(flat, p, k, cfg)?;
        let scale = d.value.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        dis = dis.max(d.disagreement / scale);
        parts.push(d.value);
    }
    let count = parts.first().map_or(0, |v| v.len() / (dim * dim));
    let at = |k: usize, f: usize, r: usize, c: usize| parts[k][f * dim * dim + c * dim + r];
    let mut worst = 0.0f64;
    for f in 0..count {
        for a in 0..dim {
            for b in (a + 1)..dim {
                for c in (b + 1)..dim {
                    let v = at(a, f, b, c) + at(b, f, c, a) + at(c, f, a, b);
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    Ok((worst, dis))
}

/// `(i/2) dW^{pq} ^ deta_p ^ deta-bar_q - sum_j du_j ^ F_j`, the exterior derivative of the
/// Kahler form expressed through the curvature.
fn d_omega_via_curvature<S: GhSolution + ?Sized>(sol: &S, p: &[f64], cfg: &FdConfig) -> Result<(f64, f64)> {
    let (n, l, dim) = (sol.n(), sol.l(), sol.dim());
    let curv = curvature(sol, p, cfg)?;
    let mut dws = Vec::with_capacity(dim);
    let mut dis = curv.disagreement;
    for k in 0..dim {
        let (_, dw, d) = vw_partial(sol, p, k, cfg)?;
        dis = dis.max(d);
        dws.push(dw);
    }
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in (a + 1)..dim {
            for c in (b + 1)..dim {
                let idx = [a, b, c];
                let mut total = Complex64::new(0.0, 0.0);
                // alpha ^ M evaluated on (a, b, c)
                let wedge3 = |alpha: &dyn Fn(usize) -> Complex64, m: &dyn Fn(usize, usize) -> Complex64| {
                    alpha(idx[0]) * m(idx[1], idx[2]) + alpha(idx[1]) * m(idx[2], idx[0]) + alpha(idx[2]) * m(idx[0], idx[1])
                };
                for j in 0..n {
                    let f = &curv.real[j];
                    total -= wedge3(&|k| Complex64::new(f64::from(u8::from(k == j)), 0.0), &|r, s| Complex64::new(f[(r, s)], 0.0));
                }
                for pa in 0..l {
                    for qb in 0..l {
                        let e = deta(n, dim, pa, false);
                        let eb = deta(n, dim, qb, true);
                        let omega = |r: usize, s: usize| e[r] * eb[s] - e[s] * eb[r];
                        total += 0.5 * I * wedge3(&|k| dws[k][(pa, qb)], &omega);
                    }
                }
                worst = worst.max(total.re.abs());
            }
        }
    }
    Ok((worst, dis))
}

/// Pointwise `max |d^2 W^{pq}/du_i du_j + 4 d^2 V^{ij}/deta_p deta-bar_q|`.
fn integrability<S: GhSolution + ?Sized>(sol: &S, p: &[f64], cfg: &FdConfig) -> Result<(f64, f64)> {
    let (n, l) = (sol.n(), sol.l());
    let mut dis = 0.0f64;
    // second partials d_a d_b of the packed (V, W)
    let second = |a: usize, b: usize| -> Result<(DMatrix<f64>, DMatrix<Complex64>, f64)> {
        let d = fd::partial(
            |q| {
                let (dv, dw, _) = vw_partial(sol, q, b, cfg)?;
                let mut out: Vec<f64> = dv.transpose().iter().copied().collect();
                out.extend(dw.transpose().iter().map(|c| c.re));
                out.extend(dw.transpose().iter().map(|c| c.im));
                Ok::<_, Error>(out)
            },
            p,
            a,
            cfg,
        )?;
        let (v, w) = unpack_vw(n, l, &d.value);
        let scale = d.value.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok((v, w, d.disagreement / scale))
    };
    let mut worst = 0.0f64;
    let mut uu = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let (_, w, d) = second(i, j)?;
            dis = dis.max(d);
            uu[i][j] = Some(w.clone());
            uu[j][i] = Some(w);
        }
    }
    for pa in 0..l {
        for qb in 0..l {
            let (xp, yp, xq, yq) = (x_index(n, pa), y_index(n, pa), x_index(n, qb), y_index(n, qb));
            let (vxx, _, d1) = second(xp, xq)?;
            let (vyy, _, d2) = second(yp, yq)?;
            let (vxy, _, d3) = second(xp, yq)?;
            let (vyx, _, d4) = second(yp, xq)?;
            dis = dis.max(d1).max(d2).max(d3).max(d4);
            for i in 0..n {
                for j in 0..n {
                    let ddbar = 0.25
                        * Complex64::new(vxx[(i, j)] + vyy[(i, j)], vxy[(i, j)] - vyx[(i, j)]);
                    let wuu = uu[i][j].as_ref().expect("filled")[(pa, qb)];
                    worst = worst.max((wuu + 4.0 * ddbar).norm());
                }
            }
        }
    }
    Ok((worst, dis))
}

/// `{check, grid, maxResidual, argmaxPoint, step, tolerance, pass}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualReport {
    pub check: String,
    pub grid: String,
    pub max_residual: f64,
    pub argmax_point: Vec<f64>,
    pub step: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    /// Deterministic reduction over per-point residuals in grid order.
    pub fn from_residuals(
        check: &str,
        grid: &str,
        points: &[Vec<f64>],
        residuals: &[f64],
        step: Option<f64>,
        tolerance: f64,
    ) -> Self {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, &r) in residuals.iter().enumerate() {
            if r > best.0 || r.is_nan() {
                best = (if r.is_nan() { f64::INFINITY } else { r }, k);
            }
        }
        let (max_residual, argmax_point) = if residuals.is_empty() {
            (0.0, Vec::new())
        } else {
            (best.0, points[best.1].clone())
        };
        ResidualReport {
            check: check.to_string(),
            grid: grid.to_string(),
            max_residual,
            argmax_point,
            step,
            tolerance,
            pass: max_residual < tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosednessReport {
    pub d_f: ResidualReport,
    pub d_omega: ResidualReport,
    pub integrability: ResidualReport,
}

impl ClosednessReport {
    pub fn pass(&self) -> bool {
        self.d_f.pass && self.d_omega.pass && self.integrability.pass
    }
}

/// Finite-difference residuals of `dF_j = 0`, `d omega = 0` and the scalar
/// integrability condition over the given points.
pub fn verify_closed<S: GhSolution + ?Sized>(
    sol: &S,
    points: &[Vec<f64>],
    grid: &str,
    cfg: &FdConfig,
    tolerance: f64,
) -> Result<ClosednessReport> {
    let has_potential = points.first().map_or(false, |p| sol.mixed(p).is_some());
    let per_point: Vec<Result<[(f64, f64); 3]>> = points
        .par_iter()
        .map(|p| {
            check_point(sol, p)?;
            let df = exterior_derivative(|q| Ok(curvature(sol, q, cfg)?.real), p, cfg)?;
            let dom = if has_potential {
                exterior_derivative(|q| Ok(vec![kahler_form(sol, q)?]), p, cfg)?
            } else {
                d_omega_via_curvature(sol, p, cfg)?
            };
            let integ = integrability(sol, p, cfg)?;
            Ok([df, dom, integ])
        })
        .collect();
    let mut res = [Vec::new(), Vec::new(), Vec::new()];
    for (p, r) in points.iter().zip(per_point) {
        let r = r?;
        for k in 0..3 {
            if r[k].1 > 10.0 * tolerance {
                return Err(Error::StepTooLarge { disagreement: r[k].1, point: p.clone() });
            }
            res[k].push(r[k].0);
        }
    }
    let dom_name = if has_potential { "d_omega" } else { "d_omega_via_curvature" };
    Ok(ClosednessReport {
        d_f: ResidualReport::from_residuals("dF", grid, points, &res[0], Some(cfg.step), tolerance),
        d_omega: ResidualReport::from_residuals(dom_name, grid, points, &res[1], Some(cfg.step), tolerance),
        integrability: ResidualReport::from_residuals("integrability", grid, points, &res[2], Some(cfg.step), tolerance),
    })
}

/// `|det V^{-1} det W - 1|` over the points.
pub fn verify_compat<S: GhSolution + ?Sized>(sol: &S, points: &[Vec<f64>], grid: &str, tolerance: f64) -> Result<ResidualReport> {
    let res: Vec<Result<f64>> = points
        .par_iter()
        .map(|p| {
            check_point(sol, p)?;
            let dv = sol.v(p)?.determinant();
            let dw = sol.w(p)?.determinant().re;
            Ok((dw / dv - 1.0).abs())
        })
        .collect();
    let res: Vec<f64> = res.into_iter().collect::<Result<_>>()?;
    Ok(ResidualReport::from_residuals("det_compat", grid, points, &res, None, tolerance))
}

/// Symmetric/hermitian blocks from a potential, with the asymmetry that was averaged away.
#[derive(Debug, Clone, PartialEq)]
pub struct VwSample {
    pub v: DMatrix<f64>,
    pub w: DMatrix<Complex64>,
    pub asymmetry: f64,
    pub flagged: bool,
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type ThirdFn = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    All,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `r_min <= |p - center| <= r_max`.
    Annulus { center: Vec<f64>, r_min: f64, r_max: f64 },
}

impl Domain {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Domain::All => true,
            Domain::Box { lo, hi } => p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Domain::Annulus { center, r_min, r_max } => {
                let r = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                *r_min <= r && r <= *r_max
            }
        }
    }
}

/// A potential `Phi(u, eta)` with optional closed-form Hessian and third derivatives
/// in the real coordinates `(u, x, y)`.
#[derive(Clone)]
pub struct PotentialField {
    n: usize,
    l: usize,
    value: ScalarFn,
    hessian: Option<MatrixFn>,
    third: Option<ThirdFn>,
    pub domain: Domain,
    /// Steps for second differences of values when no closed-form Hessian is given.
    pub fd: FdConfig,
}

impl std::fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialField")
            .field("n", &self.n)
            .field("l", &self.l)
            .field("closed_hessian", &self.hessian.is_some())
            .field("closed_third", &self.third.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl PotentialField {
    pub fn new(n: usize, l: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, l, value: Arc::new(value), hessian: None, third: None, domain: Domain::All, fd: FdConfig::new(1e-3, 1) }
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    /// `third(p, k)` is `d/dp_k` of the Hessian.
    pub fn with_third(mut self, t: impl Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.third = Some(Arc::new(t));
        self
    }

    pub fn with_domain(mut self, d: Domain) -> Self {
        self.domain = d;
        self
    }

    pub fn evaluate(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }

    fn guard(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n + 2 * self.l {
            return Err(Error::DimensionMismatch { expected: self.n + 2 * self.l, got: p.len() });
        }
        if !self.domain.contains(p) {
            return Err(Error::DomainViolation(p.to_vec()));
        }
        Ok(())
    }

    /// Real Hessian in `(u, x, y)`, closed form or by Richardson-extrapolated second differences.
    pub fn hessian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.guard(p)?;
        if let Some(h) = &self.hessian {
            return Ok(h(p));
        }
        Ok(fd::hessian_scalar(&|q: &[f64]| (self.value)(q), p, &self.fd))
    }

    fn blocks(&self, h: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
        let (n, l) = (self.n, self.l);
        let v = h.view((0, 0), (n, n)).into_owned();
        let w = DMatrix::from_fn(l, l, |a, b| {
            let (xa, ya, xb, yb) = (x_index(n, a), y_index(n, a), x_index(n, b), y_index(n, b));
            Complex64::new(-(h[(xa, xb)] + h[(ya, yb)]), -(h[(xa, yb)] - h[(ya, xb)]))
        });
        let mixed = DMatrix::from_fn(n, l, |j, a| {
            Complex64::new(0.5 * h[(j, x_index(n, a))], -0.5 * h[(j, y_index(n, a))])
        });
        (v, w, mixed)
    }
}

fn is_positive_definite_real(m: &DMatrix<f64>) -> bool {
    m.nrows() == 0 || m.clone().cholesky().is_some()
}

/// Via the real form `[[Re, -Im], [Im, Re]]` of a hermitian matrix.
fn is_positive_definite_complex(m: &DMatrix<Complex64>) -> bool {
    let k = m.nrows();
    let real = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let z = m[(r % k, c % k)];
        match (r < k, c < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    is_positive_definite_real(&real)
}

/// `V = Phi_uu`, `W = -4 Phi_{eta eta-bar}` with symmetry enforced by averaging.
pub fn derive_vw(phi: &PotentialField, p: &[f64]) -> Result<VwSample> {
    let h = phi.hessian(p)?;
    let asymmetry = (&h - h.transpose()).abs().max();
    let hs = 0.5 * (&h + h.transpose());
    let (v, w, _) = phi.blocks(&hs);
    let w = (&w + w.adjoint()).map(|c| 0.5 * c);
    if !is_positive_definite_real(&v) {
        return Err(Error::NotPositiveDefinite { which: "V".into(), point: p.to_vec() });
    }
    if !is_positive_definite_complex(&w) {
        return Err(Error::NotPositiveDefinite { which: "W".into(), point: p.to_vec() });
    }
    Ok(VwSample { v, w, asymmetry, flagged: asymmetry > 1e-8 })
}

impl GhSolution for PotentialField {
    fn n(&self) -> usize {
        self.n
    }
    fn l(&self) -> usize {
        self.l
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(derive_vw(self, p)?.v)
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        Ok(derive_vw(self, p)?.w)
    }
    fn mixed(&self, p: &[f64]) -> Option<Result<DMatrix<Complex64>>> {
        Some(self.hessian(p).map(|h| self.blocks(&h).2))
    }
    fn dv(&self, p: &[f64], k: usize) -> Option<DMatrix<f64>> {
        let t = self.third.as_ref()?;
        let h = t(p, k);
        Some(self.blocks(&h).0)
    }
    fn dw(&self, p: &[f64], k: usize) -> Option<DMatrix<Complex64>> {
        let t = self.third.as_ref()?;
        let h = t(p, k);
        Some(self.blocks(&h).1)
    }
}

/// Chern flux `(1/2 pi) int_{S^2} F_j` over the sphere of the given radius centred at
/// `(center_u, eta = 0)` in the 3-plane spanned by the unit vector `normal` in `u`-space
/// and the `eta` plane (`l = 1`). Orientation: outward in the frame `(normal, x, y)`.
pub fn chern_flux<S: GhSolution + ?Sized>(
    sol: &S,
    center_u: &[f64],
    normal: &[f64],
    radius: f64,
    nodes: usize,
    cfg: &FdConfig,
) -> Result<Vec<f64>> {
    let (n, l, dim) = (sol.n(), sol.l(), sol.dim());
    if l != 1 {
        return Err(Error::InvalidInput(format!("Chern flux needs l = 1, got {l}")));
    }
    if center_u.len() != n || normal.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center_u.len() });
    }
    let nn = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(radius > 0.0) || nn == 0.0 {
        return Err(Error::InvalidInput("radius and normal must be nonzero".into()));
    }
    let nu: Vec<f64> = normal.iter().map(|v| v / nn).collect();
    if let Some(disc) = sol.discriminant() {
        for s in [-1.0, 1.0] {
            let pole: Vec<f64> = center_u.iter().zip(&nu).map(|(c, v)| c + s * radius * v).collect();
            if disc.distance(&pole) < 1e-9 * radius.max(1.0) {
                return Err(Error::SphereHitsDiscriminant);
            }
        }
    }
    let embed = |a: f64, b: f64, c: f64| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for i in 0..n {
            v[i] = a * nu[i];
        }
        v[x_index(n, 0)] = b;
        v[y_index(n, 0)] = c;
        v
    };
    let (ts, wts) = quad::gauss_legendre_on(nodes, 0.0, PI);
    let nphi = 2 * nodes;
    let cells: Vec<(f64, f64, f64)> = ts
        .iter()
        .zip(&wts)
        .flat_map(|(&t, &w)| (0..nphi).map(move |k| (t, w, 2.0 * PI * k as f64 / nphi as f64)))
        .collect();
    let vals: Vec<Result<Vec<f64>>> = cells
        .par_iter()
        .map(|&(t, w, ph)| {
            let (st, ct, sp, cp) = (t.sin(), t.cos(), ph.sin(), ph.cos());
            let off = embed(radius * ct, radius * st * cp, radius * st * sp);
            let mut x: Vec<f64> = off.clone();
            for i in 0..n {
                x[i] += center_u[i];
            }
            let xt = embed(-radius * st, radius * ct * cp, radius * ct * sp);
            let xp = embed(0.0, -radius * st * sp, radius * st * cp);
            let curv = curvature(sol, &x, cfg).map_err(|e| match e {
                Error::DomainViolation(_) | Error::OnDiscriminant => Error::SphereHitsDiscriminant,
                other => other,
            })?;
            let scale = w * 2.0 * PI / nphi as f64;
            Ok(curv
                .real
                .iter()
                .map(|f| {
                    let mut s = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            s += xt[a] * f[(a, b)] * xp[b];
                        }
                    }
                    s * scale
                })
                .collect())
        })
        .collect();
    let mut total = vec![0.0; n];
    for v in vals {
        for (t, x) in total.iter_mut().zip(v?) {
            *t += x;
        }
    }
    Ok(total.into_iter().map(|v| v / (2.0 * PI)).collect())
}

/// Flux through the sphere `alpha_ij` around `wall_ij` at `center_u`, co-oriented from
/// `Q_j` into `Q_i`. For a solution with the Chern class of the wall complex this is
/// `w_i - w_j` in the torus basis.
pub fn wall_flux<S: GhSolution + ?Sized>(
    sol: &S,
    wall: &Wall,
    center_u: &[f64],
    radius: f64,
    nodes: usize,
    cfg: &FdConfig,
) -> Result<Vec<f64>> {
    let nu: Vec<f64> = wall.normal.iter().map(|v| -v).collect();
    chern_flux(sol, center_u, &nu, radius, nodes, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompletenessVerdict {
    Growing,
    InconclusiveConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletenessReport {
    pub u_max: Vec<f64>,
    pub partial_integrals: Vec<f64>,
    pub verdict: CompletenessVerdict,
}

/// Partial integrals `int_0^{U} du_i / (V^{-1})^{ij}` along the ray from `base`
/// (with `u_i` replaced by the running value), for increasing `U` in `u_max`.
///
/// Verdict is `Growing` when the slope over the last segment is at least 1% of the
/// average slope so far.
pub fn completeness_probe<S: GhSolution + ?Sized>(
    sol: &S,
    base: &[f64],
    i: usize,
    j: usize,
    u_max: &[f64],
) -> Result<CompletenessReport> {
    check_point(sol, base)?;
    let n = sol.n();
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("direction indices must be < {n}")));
    }
    if u_max.len() < 2 || u_max.windows(2).any(|w| !(w[1] > w[0])) || !(u_max[0] > 0.0) {
        return Err(Error::InvalidInput("u_max must be positive and increasing, with at least two entries".into()));
    }
    let integrand = |s: f64| -> Result<f64> {
        let mut q = base.to_vec();
        q[i] = s;
        let v = sol.v(&q)?;
        let inv = v.try_inverse().ok_or_else(|| Error::DomainViolation(q.clone()))?;
        Ok(1.0 / inv[(i, j)])
    };
    let (gx, gw) = quad::gauss_legendre(16);
    let mut partial_integrals = Vec::with_capacity(u_max.len());
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &hi in u_max {
        let panels = (((hi - lo) / 0.25).ceil() as usize).max(1);
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let c = lo + (k as f64 + 0.5) * h;
            for (t, w) in gx.iter().zip(&gw) {
                acc += 0.5 * h * w * integrand(c + 0.5 * h * t)?;
            }
        }
        partial_integrals.push(acc);
        lo = hi;
    }
    let m = u_max.len();
    let last_slope = (partial_integrals[m - 1] - partial_integrals[m - 2]) / (u_max[m - 1] - u_max[m - 2]);
    let mean_slope = partial_integrals[m - 1] / u_max[m - 1];
    let verdict = if last_slope > 0.01 * mean_slope.abs() && last_slope > 0.0 {
        CompletenessVerdict::Growing
    } else {
        CompletenessVerdict::InconclusiveConvergent
    };
    Ok(CompletenessReport { u_max: u_max.to_vec(), partial_integrals, verdict })
}

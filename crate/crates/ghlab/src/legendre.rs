//! Split Monge-Ampere solutions `K(s, t)`, the partial Legendre transform to
//! affine coordinates, the s/t duality, singular 2D solutions with a logarithmic
//! point source, monodromy generators and period integrals of `beta`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, FdConfig};
use crate::gh::{Domain, ResidualReport};
use crate::lattice::{validate_dual_pair, wall_complex, DualSimplexPair, LatticeSimplex, WallComplex};
use crate::quad;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type ThirdFn = Arc<dyn Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync>;

/// Points closer than this to a singular point are treated as on the support.
const SUPPORT_EPS: f64 = 1e-12;

/// Discrete singular support of a split solution: isolated points of
/// `Pi(tau) x Pi(sigma)` with the log-mass of `V` at each, and the type weights
/// `delta_v` (in `N*`) and `delta_w` (in `N`) of the elementary loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SingularSupport {
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub pi_tau: Option<WallComplex>,
    pub pi_sigma: Option<WallComplex>,
    pub delta_v: Vec<i64>,
    pub delta_w: Vec<i64>,
    /// `"(sigma,tau)"` or, after duality, `"(tau,sigma)"`.
    pub kind: String,
}

impl SingularSupport {
    /// The support swapped to dual coordinates: points `(s, t) -> (t, s)`,
    /// wall complexes and type weights exchanged.
    fn dual(&self, n: usize, l: usize) -> Self {
        let kind = if self.kind == "(sigma,tau)" { "(tau,sigma)" } else { "(sigma,tau)" };
        SingularSupport {
            points: self.points.iter().map(|p| swap_coords(p, n, l)).collect(),
            masses: self.masses.clone(),
            pi_tau: self.pi_sigma.clone(),
            pi_sigma: self.pi_tau.clone(),
            delta_v: self.delta_w.clone(),
            delta_w: self.delta_v.clone(),
            kind: kind.to_string(),
        }
    }

    fn distance(&self, p: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|q| q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `(s, t) -> (t, s)` for `s` in `R^n`, `t` in `R^l`.
fn swap_coords(p: &[f64], n: usize, _l: usize) -> Vec<f64> {
    let mut q = p[n..].to_vec();
    q.extend_from_slice(&p[..n]);
    q
}

#[derive(Clone)]
struct Direct {
    value: Option<ScalarFn>,
    gradient: Option<VectorFn>,
    hessian: Option<MatrixFn>,
    third: Option<ThirdFn>,
}

#[derive(Clone)]
enum Source {
    Direct(Direct),
    /// `K*(s*, t*) = -K(t*, s*)` for the wrapped solution.
    Swapped(Arc<SplitMASolution>),
}

/// Blocks of `Hess K`: `V = K_ss`, `B = K_st`, `W = -K_tt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBlocks {
    pub v: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

/// A potential `K(s, t)` on a domain in `R^n x R^l` with optional closed-form
/// derivatives; missing derivatives fall back to finite differences.
#[derive(Clone)]
pub struct SplitMASolution {
    n: usize,
    l: usize,
    source: Source,
    pub domain: Domain,
    pub singular: Option<SingularSupport>,
    pub fd: FdConfig,
}

impl std::fmt::Debug for SplitMASolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitMASolution")
            .field("n", &self.n)
            .field("l", &self.l)
            .field("dual", &matches!(self.source, Source::Swapped(_)))
            .field("domain", &self.domain)
            .field("singular", &self.singular)
            .finish()
    }
}

impl SplitMASolution {
    pub fn new<F>(n: usize, l: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::empty(n, l, Some(Arc::new(value)))
    }

    /// A solution known only through its Hessian (no single-valued potential).
    pub fn from_hessian<H>(n: usize, l: usize, hessian: H) -> Self
    where
        H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::empty(n, l, None).with_hessian(hessian)
    }

    fn empty(n: usize, l: usize, value: Option<ScalarFn>) -> Self {
        SplitMASolution {
            n,
            l,
            source: Source::Direct(Direct { value, gradient: None, hessian: None, third: None }),
            domain: Domain::All,
            singular: None,
            fd: FdConfig::new(1e-3, 1),
        }
    }

    /// `K = s.V s / 2 + s.B t - t.W t / 2` with constant blocks.
    pub fn quadratic(v: DMatrix<f64>, b: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let (n, l) = (v.nrows(), w.nrows());
        if v.ncols() != n || w.ncols() != l {
            return Err(Error::InvalidInput("V and W must be square".into()));
        }
        if b.nrows() != n || b.ncols() != l {
            return Err(Error::DimensionMismatch { expected: n * l, got: b.nrows() * b.ncols() });
        }
        let mut h = DMatrix::zeros(n + l, n + l);
        h.view_mut((0, 0), (n, n)).copy_from(&v);
        h.view_mut((0, n), (n, l)).copy_from(&b);
        h.view_mut((n, 0), (l, n)).copy_from(&b.transpose());
        h.view_mut((n, n), (l, l)).copy_from(&(-&w));
        let (h1, h2, h3) = (h.clone(), h.clone(), h);
        let d = n + l;
        Ok(Self::new(n, l, move |p| {
            let x = DVector::from_column_slice(p);
            0.5 * x.dot(&(&h1 * &x))
        })
        .with_gradient(move |p| (&h2 * DVector::from_column_slice(p)).as_slice().to_vec())
        .with_hessian(move |_| h3.clone())
        .with_third(move |_, _| DMatrix::zeros(d, d)))
    }

    fn direct_mut(&mut self) -> &mut Direct {
        match &mut self.source {
            Source::Direct(d) => d,
            Source::Swapped(_) => panic!("closed forms cannot be attached to a dual solution"),
        }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.direct_mut().gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian<H>(mut self, h: H) -> Self
    where
        H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.direct_mut().hessian = Some(Arc::new(h));
        self
    }

    /// `third(p, k)` is the derivative of the Hessian along coordinate `k`.
    pub fn with_third<T>(mut self, t: T) -> Self
    where
        T: Fn(&[f64], usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.direct_mut().third = Some(Arc::new(t));
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_singular(mut self, support: SingularSupport) -> Self {
        self.singular = Some(support);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.n + self.l
    }

    pub fn is_dual(&self) -> bool {
        matches!(self.source, Source::Swapped(_))
    }

    fn guard(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        if !self.domain.contains(p) {
            return Err(Error::DomainViolation(p.to_vec()));
        }
        if let Some(s) = &self.singular {
            if s.distance(p) < SUPPORT_EPS {
                return Err(Error::SingularHessian(p.to_vec()));
            }
        }
        Ok(())
    }

    /// Dual index `k` corresponds to original index `orig(k)`.
    fn orig_index(&self, k: usize) -> usize {
        // self is the dual: its (n, l) are the inner (l, n)
        if k < self.n {
            self.l + k
        } else {
            k - self.n
        }
    }

    fn to_inner(&self, p: &[f64]) -> Vec<f64> {
        swap_coords(p, self.n, self.l)
    }

    fn permute_neg(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |a, b| -h[(self.orig_index(a), self.orig_index(b))])
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.guard(p)?;
        match &self.source {
            Source::Direct(d) => d
                .value
                .as_ref()
                .map(|f| f(p))
                .ok_or_else(|| Error::NoPotential("solution is given by its Hessian only".into())),
            Source::Swapped(inner) => Ok(-inner.value(&self.to_inner(p))?),
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.guard(p)?;
        match &self.source {
            Source::Direct(d) => {
                if let Some(g) = &d.gradient {
                    return Ok(g(p));
                }
                let f = d
                    .value
                    .as_ref()
                    .ok_or_else(|| Error::NoPotential("solution is given by its Hessian only".into()))?;
                let cfg = FdConfig::default();
                Ok((0..p.len()).map(|k| fd::partial_scalar(|q| f(q), p, k, &cfg)).collect())
            }
            Source::Swapped(inner) => {
                let g = inner.gradient(&self.to_inner(p))?;
                Ok((0..self.dim()).map(|k| -g[self.orig_index(k)]).collect())
            }
        }
    }

    pub fn hessian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.guard(p)?;
        match &self.source {
            Source::Direct(d) => {
                if let Some(h) = &d.hessian {
                    return Ok(h(p));
                }
                let f = d
                    .value
                    .as_ref()
                    .ok_or_else(|| Error::NoPotential("no value and no Hessian".into()))?;
                Ok(fd::hessian_scalar(&|q: &[f64]| f(q), p, &self.fd))
            }
            Source::Swapped(inner) => Ok(self.permute_neg(&inner.hessian(&self.to_inner(p))?)),
        }
    }

    /// Derivative of the Hessian along coordinate `k`.
    pub fn hessian_derivative(&self, p: &[f64], k: usize) -> Result<DMatrix<f64>> {
        self.guard(p)?;
        match &self.source {
            Source::Direct(d) => {
                if let Some(t) = &d.third {
                    return Ok(t(p, k));
                }
                let dim = self.dim();
                let der = fd::partial(|q| Ok::<_, Error>(self.hessian(q)?.as_slice().to_vec()), p, k, &FdConfig::default())?;
                Ok(DMatrix::from_column_slice(dim, dim, &der.value))
            }
            Source::Swapped(inner) => {
                let t = inner.hessian_derivative(&self.to_inner(p), self.orig_index(k))?;
                Ok(self.permute_neg(&t))
            }
        }
    }

    pub fn blocks(&self, p: &[f64]) -> Result<SplitBlocks> {
        let h = self.hessian(p)?;
        let (n, l) = (self.n, self.l);
        Ok(SplitBlocks {
            v: h.view((0, 0), (n, n)).into_owned(),
            b: h.view((0, n), (n, l)).into_owned(),
            w: -h.view((n, n), (l, l)).into_owned(),
        })
    }

    /// `|det V / det W - 1|`.
    pub fn det_equality_residual(&self, p: &[f64]) -> Result<f64> {
        let bl = self.blocks(p)?;
        let dw = bl.w.determinant();
        if dw == 0.0 {
            return Err(Error::SingularHessian(p.to_vec()));
        }
        Ok((bl.v.determinant() / dw - 1.0).abs())
    }

    /// A point used to probe invertibility of the blocks.
    fn probe_point(&self) -> Vec<f64> {
        let d = self.dim();
        match &self.domain {
            Domain::All => {
                let mut p = vec![0.0; d];
                if self.singular.as_ref().is_some_and(|s| s.distance(&p) < 1e-6) {
                    p[0] = 0.5;
                }
                p
            }
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Domain::Annulus { center, r_min, r_max } => {
                let mut p = center.clone();
                p[0] += 0.5 * (r_min + r_max);
                p
            }
        }
    }
}

fn check_invertible(m: &DMatrix<f64>, p: &[f64]) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let sv = m.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if !(lo > 1e-13 * hi.max(1e-300)) || !lo.is_finite() {
        return Err(Error::SingularHessian(p.to_vec()));
    }
    m.clone().try_inverse().ok_or_else(|| Error::SingularHessian(p.to_vec()))
}

/// `[[V^-1, -V^-1 B], [-(V^-1 B)^T, W + B^T V^-1 B]]`.
pub fn hess_psi_from_blocks(v: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, l) = (v.nrows(), w.nrows());
    let vinv = check_invertible(v, &[])?;
    let vb = &vinv * b;
    let mut h = DMatrix::zeros(n + l, n + l);
    h.view_mut((0, 0), (n, n)).copy_from(&vinv);
    h.view_mut((0, n), (n, l)).copy_from(&(-&vb));
    h.view_mut((n, 0), (l, n)).copy_from(&(-vb.transpose()));
    h.view_mut((n, n), (l, l)).copy_from(&(w + b.transpose() * &vb));
    Ok(h)
}

/// Affine coordinates `y = (K_s, t)` and the Hessian of the partial Legendre transform.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreImage {
    pub y: Vec<f64>,
    pub hess_psi: DMatrix<f64>,
    pub det: f64,
}

/// Hessian of `Psi` at the image of `p`, from the blocks of `Hess K` alone.
pub fn hess_psi(sol: &SplitMASolution, p: &[f64]) -> Result<DMatrix<f64>> {
    let bl = sol.blocks(p)?;
    hess_psi_from_blocks(&bl.v, &bl.b, &bl.w).map_err(|_| Error::SingularHessian(p.to_vec()))
}

pub fn partial_legendre(sol: &SplitMASolution, p: &[f64]) -> Result<LegendreImage> {
    let hess_psi = hess_psi(sol, p)?;
    let g = sol.gradient(p)?;
    let mut y = g[..sol.n].to_vec();
    y.extend_from_slice(&p[sol.n..]);
    let det = hess_psi.determinant();
    Ok(LegendreImage { y, hess_psi, det })
}

/// Closed-form Jacobian `d(y)/d(s,t) = [[V, B], [0, 1]]`.
pub fn legendre_jacobian(sol: &SplitMASolution, p: &[f64]) -> Result<DMatrix<f64>> {
    let bl = sol.blocks(p)?;
    let (n, l) = (sol.n, sol.l);
    let mut j = DMatrix::identity(n + l, n + l);
    j.view_mut((0, 0), (n, n)).copy_from(&bl.v);
    j.view_mut((0, n), (n, l)).copy_from(&bl.b);
    Ok(j)
}

/// `Psi(y) = <s, y_s> - K(s, t)` with `t = y_t` and `s` solving `K_s(s, t) = y_s`
/// by Newton iteration from `s0`. Returns `(Psi, s)`.
pub fn psi_value(sol: &SplitMASolution, y: &[f64], s0: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = sol.n;
    if y.len() != sol.dim() {
        return Err(Error::DimensionMismatch { expected: sol.dim(), got: y.len() });
    }
    if s0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s0.len() });
    }
    let t = &y[n..];
    let at = |s: &[f64]| {
        let mut p = s.to_vec();
        p.extend_from_slice(t);
        p
    };
    let mut s = s0.to_vec();
    for _ in 0..60 {
        let p = at(&s);
        let g = sol.gradient(&p)?;
        let r = DVector::from_iterator(n, (0..n).map(|i| g[i] - y[i]));
        let v = sol.blocks(&p)?.v;
        let step = v.lu().solve(&r).ok_or_else(|| Error::SingularHessian(p.clone()))?;
        for i in 0..n {
            s[i] -= step[i];
        }
        let scale = s.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if step.amax() <= 1e-14 * scale {
            let p = at(&s);
            let k = sol.value(&p)?;
            let psi = (0..n).map(|i| s[i] * y[i]).sum::<f64>() - k;
            return Ok((psi, s));
        }
    }
    Err(Error::RootFindingFailure(format!("Newton for K_s = {:?} did not converge", &y[..n])))
}

/// Maximum of `|det Hess Psi - 1|` over the given points.
pub fn verify_classical_ma(sol: &SplitMASolution, points: &[Vec<f64>], grid: &str, tol: f64) -> Result<ResidualReport> {
    let res: Vec<f64> = points
        .par_iter()
        .map(|p| Ok((hess_psi(sol, p)?.determinant() - 1.0).abs()))
        .collect::<Result<_>>()?;
    Ok(ResidualReport::from_residuals("classical_ma", grid, points, &res, None, tol))
}

/// Inverse of `[[A, B], [C, D]]` assembled blockwise from Schur complements.
pub fn block_inverse(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (k, m) = (a.nrows(), d.nrows());
    let ainv = check_invertible(a, &[])?;
    let dinv = check_invertible(d, &[])?;
    let s_a = check_invertible(&(a - b * &dinv * c), &[])?;
    let s_d = check_invertible(&(d - c * &ainv * b), &[])?;
    let mut out = DMatrix::zeros(k + m, k + m);
    out.view_mut((0, 0), (k, k)).copy_from(&s_a);
    out.view_mut((0, k), (k, m)).copy_from(&(-&s_a * b * &dinv));
    out.view_mut((k, 0), (m, k)).copy_from(&(-&s_d * c * &ainv));
    out.view_mut((k, k), (m, m)).copy_from(&s_d);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockIdentityReport {
    pub samples: usize,
    /// Max over samples of `|block_inverse - inverse|_max / max(1, |inverse|_max)`.
    pub max_inverse_error: f64,
    /// Max over samples of `|det A^-1 - det(D - C A^-1 B)|` relative to `max(1, |det A^-1|)`,
    /// for matrices normalized to determinant one.
    pub max_det_error: f64,
}

/// Random well-conditioned block matrices of shape `(k + m)^2`, normalized to
/// `det = 1`, checked against the block inverse and the Schur determinant identity.
pub fn block_identity_check(k: usize, m: usize, samples: usize, seed: u64) -> Result<BlockIdentityReport> {
    let d = k + m;
    if k == 0 || m == 0 {
        return Err(Error::InvalidInput("both blocks must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inv_err, mut det_err) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let mut mat: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0)) + DMatrix::identity(d, d) * 3.0;
        let det = mat.determinant();
        mat /= det.abs().powf(1.0 / d as f64);
        if det < 0.0 {
            mat.row_mut(0).neg_mut();
        }
        let a = mat.view((0, 0), (k, k)).into_owned();
        let b = mat.view((0, k), (k, m)).into_owned();
        let c = mat.view((k, 0), (m, k)).into_owned();
        let dd = mat.view((k, k), (m, m)).into_owned();
        let reference = mat.clone().try_inverse().ok_or_else(|| Error::SingularHessian(vec![]))?;
        let blockwise = block_inverse(&a, &b, &c, &dd)?;
        inv_err = inv_err.max((&blockwise - &reference).amax() / reference.amax().max(1.0));
        let ainv = check_invertible(&a, &[])?;
        let lhs = ainv.determinant();
        let rhs = (&dd - &c * &ainv * &b).determinant();
        det_err = det_err.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    Ok(BlockIdentityReport { samples, max_inverse_error: inv_err, max_det_error: det_err })
}

/// The solution with the roles of `s` and `t` exchanged, `K*(s*, t*) = -K(t*, s*)`.
/// Its blocks are `V* = W`, `B* = -B^T`, `W* = V`, so `det V* = det W*` is preserved,
/// and its partial Legendre transform gives the dual coordinates `(-K_t, s)`.
/// Applying it twice returns `K` exactly.
pub fn dual_transform(sol: &SplitMASolution) -> Result<SplitMASolution> {
    let (n, l) = (sol.n, sol.l);
    if let Source::Swapped(inner) = &sol.source {
        return Ok((**inner).clone());
    }
    let probe = sol.probe_point();
    let w = sol.blocks(&probe)?.w;
    check_invertible(&w, &probe)?;
    let domain = match &sol.domain {
        Domain::All => Domain::All,
        Domain::Box { lo, hi } => Domain::Box { lo: swap_coords(lo, n, l), hi: swap_coords(hi, n, l) },
        Domain::Annulus { center, r_min, r_max } => Domain::Annulus {
            center: swap_coords(center, n, l),
            r_min: *r_min,
            r_max: *r_max,
        },
    };
    Ok(SplitMASolution {
        n: l,
        l: n,
        source: Source::Swapped(Arc::new(sol.clone())),
        domain,
        singular: sol.singular.as_ref().map(|s| s.dual(n, l)),
        fd: sol.fd,
    })
}

/// Harmonic shift `h` of a singular 2D solution.
#[derive(Clone)]
pub enum Harmonic {
    /// `h = Re sum_k c_k z^k`, `z = s + i t`.
    Poly(Vec<Complex64>),
    /// An arbitrary function claimed harmonic; validated by a finite-difference Laplacian.
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Harmonic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Harmonic::Poly(c) => f.debug_tuple("Poly").field(c).finish(),
            Harmonic::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Harmonic {
    pub fn constant(c: f64) -> Self {
        Harmonic::Poly(vec![Complex64::new(c, 0.0)])
    }

    pub fn function<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Harmonic::Function(Arc::new(f))
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            Harmonic::Poly(c) => horner(c, Complex64::new(s, t)).re,
            Harmonic::Function(f) => f(s, t),
        }
    }
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

/// Five-point Laplacian with one Richardson level.
fn fd_laplacian(f: &(dyn Fn(f64, f64) -> f64 + Send + Sync), s: f64, t: f64, h: f64) -> f64 {
    let lap = |h: f64| (f(s + h, t) + f(s - h, t) + f(s, t + h) + f(s, t - h) - 4.0 * f(s, t)) / (h * h);
    (4.0 * lap(0.5 * h) - lap(h)) / 3.0
}

/// The holomorphic data `G = K_ss - i K_st` and `G'` of a harmonic potential.
#[derive(Clone)]
struct Harmonic2d {
    h: Harmonic,
}

impl Harmonic2d {
    fn g(&self, s: f64, t: f64) -> (Complex64, Complex64) {
        let z = Complex64::new(s, t);
        let src = -z.ln() / (2.0 * PI);
        let dsrc = -z.inv() / (2.0 * PI);
        match &self.h {
            Harmonic::Poly(c) => {
                let dc: Vec<Complex64> = c.iter().enumerate().skip(1).map(|(k, ck)| ck * k as f64).collect();
                (src + horner(c, z), dsrc + horner(&dc, z))
            }
            Harmonic::Function(f) => {
                let cfg = FdConfig::default();
                let p = [s, t];
                let hs = fd::partial_scalar(|q| f(q[0], q[1]), &p, 0, &cfg);
                let ht = fd::partial_scalar(|q| f(q[0], q[1]), &p, 1, &cfg);
                let conj = harmonic_conjugate(f.as_ref(), s, t);
                (src + Complex64::new(f(s, t), conj), dsrc + Complex64::new(hs, -ht))
            }
        }
    }

    fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
        let (g, _) = self.g(p[0], p[1]);
        DMatrix::from_row_slice(2, 2, &[g.re, -g.im, -g.im, -g.re])
    }

    fn third(&self, p: &[f64], k: usize) -> DMatrix<f64> {
        let (_, dg) = self.g(p[0], p[1]);
        let d = if k == 0 { dg } else { Complex64::i() * dg };
        DMatrix::from_row_slice(2, 2, &[d.re, -d.im, -d.im, -d.re])
    }
}

/// `Im g(s, t)` for the holomorphic `g` with `Re g = f` and `Im g(0) = 0`, by
/// integrating `-f_t ds + f_s dt` along the ray from the origin.
fn harmonic_conjugate(f: &(dyn Fn(f64, f64) -> f64 + Send + Sync), s: f64, t: f64) -> f64 {
    let cfg = FdConfig::default();
    let (x, w) = quad::gauss_legendre_on(32, 0.0, 1.0);
    x.iter()
        .zip(&w)
        .map(|(&tau, &wt)| {
            let p = [tau * s, tau * t];
            let fs = fd::partial_scalar(|q| f(q[0], q[1]), &p, 0, &cfg);
            let ft = fd::partial_scalar(|q| f(q[0], q[1]), &p, 1, &cfg);
            wt * (-ft * s + fs * t)
        })
        .sum()
}

/// The 2D dual pair `tau = {(0,0,1), (1,0,1)}`, `sigma = {(0,0,1), (0,1,1)}`.
pub fn model_pair_2d() -> DualSimplexPair {
    let tau = LatticeSimplex::new(vec![vec![0, 0, 1], vec![1, 0, 1]]).expect("valid simplex");
    let sigma = LatticeSimplex::new(vec![vec![0, 0, 1], vec![0, 1, 1]]).expect("valid simplex");
    validate_dual_pair(tau, sigma).expect("valid pair")
}

/// Singular split solution with `n = l = 1`:
/// `V = W = -(1/4 pi) log(s^2 + t^2) + h`, potential `K = Re F` with
/// `F'' = -(1/2 pi) log z + g(z)`, `Re g = h`, of type `(sigma, tau)` for the 2D model pair.
/// A `Function` shift has no closed-form potential; only derivatives of order 2 and 3 exist.
pub fn singular_2d(h: Harmonic, radius: f64) -> Result<SplitMASolution> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if let Harmonic::Function(f) = &h {
        let step = 4e-3 * radius.max(1.0);
        let mut pts = vec![(0.0, 0.0)];
        for i in 1..=12 {
            let r = radius * i as f64 / 12.0;
            for k in 0..24 {
                let th = 2.0 * PI * k as f64 / 24.0;
                pts.push((r * th.cos(), r * th.sin()));
            }
        }
        for (s, t) in pts {
            let lap = fd_laplacian(f.as_ref(), s, t, step);
            if lap.abs() > 1e-8 * f(s, t).abs().max(1.0) {
                return Err(Error::NotHarmonic { laplacian: lap, point: vec![s, t] });
            }
        }
    }
    for i in 1..=32 {
        let r = radius * i as f64 / 32.0;
        for k in 0..64 {
            let th = 2.0 * PI * k as f64 / 64.0;
            let (s, t) = (r * th.cos(), r * th.sin());
            let v = -r.ln() / (2.0 * PI) + h.eval(s, t);
            if !(v > 0.0) {
                return Err(Error::NotPositive(vec![s, t]));
            }
        }
    }
    let data = Harmonic2d { h: h.clone() };
    let (d1, d2) = (data.clone(), data);
    let mut sol = match &h {
        Harmonic::Poly(c) => {
            let (c1, c2) = (c.clone(), c.clone());
            SplitMASolution::new(1, 1, move |p| potential_f(&c1, Complex64::new(p[0], p[1])).re).with_gradient(move |p| {
                let f1 = potential_f1(&c2, Complex64::new(p[0], p[1]));
                vec![f1.re, -f1.im]
            })
        }
        Harmonic::Function(_) => SplitMASolution::empty(1, 1, None),
    };
    sol = sol
        .with_hessian(move |p| d1.hessian(p))
        .with_third(move |p, k| d2.third(p, k))
        .with_domain(Domain::Annulus { center: vec![0.0, 0.0], r_min: 0.0, r_max: radius });
    let pair = model_pair_2d();
    let support = SingularSupport {
        points: vec![vec![0.0, 0.0]],
        masses: vec![1.0],
        pi_tau: Some(wall_complex(&pair.tau)?),
        pi_sigma: Some(wall_complex(&pair.sigma)?),
        delta_v: pair.delta_v(0, 1),
        delta_w: pair.delta_w(0, 1),
        kind: "(sigma,tau)".into(),
    };
    Ok(sol.with_singular(support))
}

/// `F = -(1/2 pi)(z^2 log z / 2 - 3 z^2 / 4) + sum c_k z^{k+2} / ((k+1)(k+2))`.
fn potential_f(c: &[Complex64], z: Complex64) -> Complex64 {
    let src = -(0.5 * z * z * z.ln() - 0.75 * z * z) / (2.0 * PI);
    let poly: Complex64 = c
        .iter()
        .enumerate()
        .map(|(k, ck)| ck * z.powu(k as u32 + 2) / ((k + 1) * (k + 2)) as f64)
        .sum();
    src + poly
}

fn potential_f1(c: &[Complex64], z: Complex64) -> Complex64 {
    let src = -(z * z.ln() - z) / (2.0 * PI);
    let poly: Complex64 = c.iter().enumerate().map(|(k, ck)| ck * z.powu(k as u32 + 1) / (k + 1) as f64).sum();
    src + poly
}

/// `M = 1 + dw dv^T`, i.e. `y -> y + <v_{i2} - v_{i1}, y> (w_{j2} - w_{j1})`, exact.
pub fn monodromy_generator(pair: &DualSimplexPair, i1: usize, i2: usize, j1: usize, j2: usize) -> Result<DMatrix<i64>> {
    let (nv, nw) = (pair.sigma.vertices().len(), pair.tau.vertices().len());
    if i1 >= nv || i2 >= nv {
        return Err(Error::InvalidInput(format!("sigma vertex index out of range ({i1}, {i2})")));
    }
    if j1 >= nw || j2 >= nw {
        return Err(Error::InvalidInput(format!("tau vertex index out of range ({j1}, {j2})")));
    }
    let dv = pair.delta_v(i1, i2);
    let dw = pair.delta_w(j1, j2);
    let r = dv.len();
    Ok(DMatrix::from_fn(r, r, |a, b| i64::from(a == b) + dw[a] * dv[b]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartSide {
    /// `U_{v_i} = R^n x Q^sigma_i`.
    V,
    /// `U_{w_j} = Q^tau_j x R^l`.
    W,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub label: String,
    pub side: ChartSide,
    pub vertex: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyGenerator {
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
    pub matrix: DMatrix<i64>,
}

/// Charts `U_{v_i}`, `U_{w_j}` of `R^n x R^l` and the monodromy generator of every
/// elementary loop `(v_{i1} w_{j1} v_{i2} w_{j2})` with `i1 < i2`, `j1 < j2`.
#[derive(Debug, Clone)]
pub struct AffineChartAtlas {
    pub pair: DualSimplexPair,
    pub pi_tau: WallComplex,
    pub pi_sigma: WallComplex,
    pub charts: Vec<Chart>,
    pub generators: Vec<MonodromyGenerator>,
}

/// Linear forms `c_k` of the cones, recovered from the walls through vertex 0.
fn cone_forms(wc: &WallComplex, vertices: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; wc.ambient_dim]; vertices];
    for w in wc.walls.iter().filter(|w| w.i == 0) {
        c[w.j] = w.weight_coords.iter().map(|&x| -(x as f64)).collect();
    }
    c
}

fn in_cone(c: &[Vec<f64>], k: usize, x: &[f64]) -> bool {
    let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let own = dot(&c[k]);
    c.iter().all(|ci| dot(ci) <= own + 1e-12)
}

impl AffineChartAtlas {
    pub fn new(pair: &DualSimplexPair) -> Result<Self> {
        let pi_tau = wall_complex(&pair.tau)?;
        let pi_sigma = wall_complex(&pair.sigma)?;
        let (nv, nw) = (pair.sigma.vertices().len(), pair.tau.vertices().len());
        let mut charts: Vec<Chart> = (0..nv)
            .map(|i| Chart { label: format!("U_v{i}"), side: ChartSide::V, vertex: i })
            .collect();
        charts.extend((0..nw).map(|j| Chart { label: format!("U_w{j}"), side: ChartSide::W, vertex: j }));
        let mut generators = Vec::new();
        for i1 in 0..nv {
            for i2 in (i1 + 1)..nv {
                for j1 in 0..nw {
                    for j2 in (j1 + 1)..nw {
                        let matrix = monodromy_generator(pair, i1, i2, j1, j2)?;
                        generators.push(MonodromyGenerator { i1, i2, j1, j2, matrix });
                    }
                }
            }
        }
        Ok(Self { pair: pair.clone(), pi_tau, pi_sigma, charts, generators })
    }

    /// Whether `(s, t)` lies in the closed chart.
    pub fn contains(&self, chart: &Chart, p: &[f64]) -> bool {
        let n = self.pair.n;
        match chart.side {
            ChartSide::V => in_cone(&cone_forms(&self.pi_sigma, self.pair.sigma.vertices().len()), chart.vertex, &p[n..]),
            ChartSide::W => in_cone(&cone_forms(&self.pi_tau, self.pair.tau.vertices().len()), chart.vertex, &p[..n]),
        }
    }

    /// Affine coordinates on the chart: `(K_s, t)` on `U_v`, the dual `(-K_t, s)` on `U_w`.
    pub fn chart_coordinates(&self, sol: &SplitMASolution, chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(chart, p) {
            return Err(Error::DomainViolation(p.to_vec()));
        }
        match chart.side {
            ChartSide::V => Ok(partial_legendre(sol, p)?.y),
            ChartSide::W => {
                let dual = dual_transform(sol)?;
                Ok(partial_legendre(&dual, &swap_coords(p, sol.n, sol.l))?.y)
            }
        }
    }
}

/// A closed polygon in the `(s, t)` plane; the last vertex joins the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonLoop {
    pub vertices: Vec<[f64; 2]>,
}

impl PolygonLoop {
    /// Regular `k`-gon inscribed in the circle, counterclockwise.
    pub fn circle(center: [f64; 2], radius: f64, k: usize) -> Self {
        let vertices = (0..k)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / k as f64;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect();
        PolygonLoop { vertices }
    }

    pub fn reversed(&self) -> Self {
        PolygonLoop { vertices: self.vertices.iter().rev().copied().collect() }
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| (self.vertices[i], self.vertices[(i + 1) % k]))
    }

    /// Winding number about `q` by summing turning angles.
    pub fn winding(&self, q: [f64; 2]) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let (ax, ay, bx, by) = (a[0] - q[0], a[1] - q[1], b[0] - q[0], b[1] - q[1]);
                (ax * by - ay * bx).atan2(ax * bx + ay * by)
            })
            .sum::<f64>()
            / (2.0 * PI)
    }
}

fn segment_distance(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let tau = if len2 == 0.0 { 0.0 } else { (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let p = [a[0] + tau * d[0], a[1] + tau * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Period integrals `oint beta^{iq}` with
/// `beta^{iq} = dW^{pq}/ds_i dt_p - dV^{ij}/dt_q ds_j`, an `n x l` matrix.
/// Only defined for loops in the `(s, t)` plane, so `n = l = 1`.
/// Edges are split into panels no longer than half their distance to the
/// singular support, each integrated with `nodes` Gauss-Legendre points.
pub fn beta_integral(sol: &SplitMASolution, lp: &PolygonLoop, nodes: usize) -> Result<DMatrix<f64>> {
    if sol.n != 1 || sol.l != 1 {
        return Err(Error::DimensionMismatch { expected: 2, got: sol.dim() });
    }
    if lp.vertices.len() < 3 {
        return Err(Error::InvalidInput("a loop needs at least three vertices".into()));
    }
    let sing: Vec<[f64; 2]> = sol
        .singular
        .as_ref()
        .map(|s| s.points.iter().map(|p| [p[0], p[1]]).collect())
        .unwrap_or_default();
    for (a, b) in lp.edges() {
        if sing.iter().any(|&q| segment_distance(a, b, q) < 1e-9) {
            return Err(Error::LoopHitsSingularity);
        }
    }
    let (x, w) = quad::gauss_legendre_on(nodes.max(2), 0.0, 1.0);
    let mut total = 0.0;
    for (a, b) in lp.edges() {
        let mut stack = vec![(0.0f64, 1.0f64, 0u32)];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        while let Some((lo, hi, depth)) = stack.pop() {
            let at = |tau: f64| [a[0] + tau * (b[0] - a[0]), a[1] + tau * (b[1] - a[1])];
            let pa = at(lo);
            let pb = at(hi);
            let dist = sing.iter().map(|&q| segment_distance(pa, pb, q)).fold(f64::INFINITY, f64::min);
            if (hi - lo) * len > 0.5 * dist && depth < 48 {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
                continue;
            }
            let (ds, dt) = ((hi - lo) * (b[0] - a[0]), (hi - lo) * (b[1] - a[1]));
            for (&xi, &wi) in x.iter().zip(&w) {
                let p = at(lo + (hi - lo) * xi);
                let hs = sol.hessian_derivative(&p, 0)?;
                let ht = sol.hessian_derivative(&p, 1)?;
                // dW/ds = -K_tts, dV/dt = K_sst
                total += wi * (-hs[(1, 1)] * dt - ht[(0, 0)] * ds);
            }
        }
    }
    Ok(DMatrix::from_element(1, 1, total))
}

/// `{loop, windings, holonomyMatrix, expectedMatrix, maxAbsError}`; matrices are
/// `oint beta * dv (x) dw` and `-sum(winding * mass) * dv (x) dw` on the lattice rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HolonomyReport {
    #[serde(rename = "loop")]
    pub loop_vertices: Vec<[f64; 2]>,
    pub windings: Vec<i64>,
    pub holonomy_matrix: Vec<Vec<f64>>,
    pub expected_matrix: Vec<Vec<f64>>,
    pub max_abs_error: f64,
}

pub fn beta_holonomy(sol: &SplitMASolution, lp: &PolygonLoop, nodes: usize) -> Result<HolonomyReport> {
    let support = sol
        .singular
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("solution has no singular support".into()))?;
    let integral = beta_integral(sol, lp, nodes)?[(0, 0)];
    let mut windings = Vec::with_capacity(support.points.len());
    for p in &support.points {
        let w = lp.winding([p[0], p[1]]);
        if (w - w.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("non-integral winding {w}")));
        }
        windings.push(w.round() as i64);
    }
    let enclosed: f64 = windings.iter().zip(&support.masses).map(|(&k, m)| k as f64 * m).sum();
    let (dv, dw) = (&support.delta_v, &support.delta_w);
    let outer = |scale: f64| -> Vec<Vec<f64>> {
        dv.iter().map(|&a| dw.iter().map(|&b| scale * (a * b) as f64).collect()).collect()
    };
    let holonomy_matrix = outer(integral);
    let expected_matrix = outer(-enclosed);
    let max_abs_error = holonomy_matrix
        .iter()
        .flatten()
        .zip(expected_matrix.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(HolonomyReport { loop_vertices: lp.vertices.clone(), windings, holonomy_matrix, expected_matrix, max_abs_error })
}

/// Holonomy reports for independent loops, computed concurrently.
pub fn beta_holonomy_many(sol: &SplitMASolution, loops: &[PolygonLoop], nodes: usize) -> Result<Vec<HolonomyReport>> {
    loops.par_iter().map(|lp| beta_holonomy(sol, lp, nodes)).collect()
}

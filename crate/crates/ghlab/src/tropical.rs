//! Laurent polynomials, amoebas, Ronkin functions and their tropical limits.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{wall_complex, DualSimplexPair, LatticeSimplex, WallComplex};
use crate::{intlin, quad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exp: Vec<i64>,
    pub coef: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    l: usize,
    terms: Vec<Term>,
    /// Ambient shift applied to the exponents, when built from a simplex.
    shift: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    exp: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonPoly {
    terms: Vec<JsonTerm>,
}

impl LaurentPoly {
    pub fn new(l: usize, terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("polynomial needs at least one term".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.exp.len() != l {
                return Err(Error::DimensionMismatch { expected: l, got: t.exp.len() });
            }
            if t.coef.norm() == 0.0 || !t.coef.re.is_finite() || !t.coef.im.is_finite() {
                return Err(Error::InvalidInput(format!("term {k} has a zero or non-finite coefficient")));
            }
            if terms[..k].iter().any(|s| s.exp == t.exp) {
                return Err(Error::InvalidInput(format!("repeated exponent {:?}", t.exp)));
            }
        }
        Ok(Self { l, terms, shift: None })
    }

    /// Real-coefficient constructor from `(exponent, coefficient)` pairs.
    pub fn from_real(l: usize, terms: &[(&[i64], f64)]) -> Result<Self> {
        Self::new(
            l,
            terms
                .iter()
                .map(|(e, c)| Term { exp: e.to_vec(), coef: Complex64::new(*c, 0.0) })
                .collect(),
        )
    }

    /// `P_sigma = sum_i z^{v_i - v_0}` in the difference-lattice basis of `sigma`;
    /// the shift `v_0` is stored.
    pub fn from_sigma(pair: &DualSimplexPair) -> Result<Self> {
        Self::from_simplex(&pair.sigma)
    }

    pub fn from_simplex(s: &LatticeSimplex) -> Result<Self> {
        let basis = s.difference_basis()?;
        let d = basis.len();
        let r = s.ambient_rank();
        let bmat: Vec<Vec<i64>> = (0..r).map(|i| basis.iter().map(|b| b[i]).collect()).collect();
        let v0 = &s.vertices()[0];
        let terms = s
            .vertices()
            .iter()
            .map(|v| {
                let exp = if d == 0 {
                    Vec::new()
                } else {
                    intlin::solve(&bmat, d, &intlin::sub(v, v0))?
                        .ok_or_else(|| Error::DegenerateSimplex("vertex outside basis lattice".into()))?
                };
                Ok(Term { exp, coef: Complex64::new(1.0, 0.0) })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut p = Self::new(d, terms)?;
        p.shift = Some(v0.clone());
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: JsonPoly = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let l = raw.terms.first().map_or(0, |t| t.exp.len());
        let terms = raw
            .terms
            .into_iter()
            .map(|t| {
                let coef = match (t.re, t.im) {
                    (None, None) => Complex64::new(1.0, 0.0),
                    (re, im) => Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)),
                };
                Term { exp: t.exp, coef }
            })
            .collect();
        Self::new(l, terms)
    }

    pub fn to_json(&self) -> String {
        let raw = JsonPoly {
            terms: self
                .terms
                .iter()
                .map(|t| JsonTerm { exp: t.exp.clone(), re: Some(t.coef.re), im: Some(t.coef.im) })
                .collect(),
        };
        serde_json::to_string(&raw).expect("polynomial serializes")
    }

    pub fn nvars(&self) -> usize {
        self.l
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn shift(&self) -> Option<&[i64]> {
        self.shift.as_deref()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exp.iter().zip(z).map(|(&a, zk)| zk.powi(a as i32)).product::<Complex64>())
            .sum()
    }

    /// Size of the largest monomial on the fiber over `x`.
    fn scale(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef.norm() * dotf(&t.exp, x).exp())
            .fold(0.0, f64::max)
    }
}

fn dotf(a: &[i64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

/// Normalization of the Ronkin integrand: `kappa * mean log|P|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kappa {
    One,
    Two,
}

impl Kappa {
    pub fn value(self) -> f64 {
        match self {
            Kappa::One => 1.0,
            Kappa::Two => 2.0,
        }
    }

    pub fn from_int(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Kappa::One),
            2 => Ok(Kappa::Two),
            _ => Err(Error::InvalidInput(format!("kappa must be 1 or 2, got {k}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RonkinOptions {
    pub nodes: usize,
    pub kappa: Kappa,
    /// Stop doubling once two successive estimates differ by less than this.
    pub tol: f64,
    pub max_nodes: Option<usize>,
    pub seed: u64,
}

impl Default for RonkinOptions {
    fn default() -> Self {
        Self { nodes: 16, kappa: Kappa::One, tol: 1e-6, max_nodes: None, seed: 0x5eed }
    }
}

impl RonkinOptions {
    pub fn new(nodes: usize, kappa: Kappa) -> Self {
        Self { nodes, kappa, ..Self::default() }
    }

    fn cap(&self, l: usize) -> usize {
        self.max_nodes.unwrap_or(if l <= 1 { 1 << 22 } else { 1 << 11 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RonkinValue {
    pub value: f64,
    pub nodes: usize,
    pub converged: bool,
    pub jitter_retries: usize,
}

/// Per-axis tables of `z_k^a` on the node circle, for each exponent used.
struct AxisTable {
    exps: Vec<i64>,
    // vals[e][node]
    vals: Vec<Vec<Complex64>>,
}

fn axis_table(p: &LaurentPoly, k: usize, x: f64, n: usize, frac: f64) -> AxisTable {
    let mut exps: Vec<i64> = p.terms.iter().map(|t| t.exp[k]).collect();
    exps.sort_unstable();
    exps.dedup();
    let h = 2.0 * PI / n as f64;
    let vals = exps
        .iter()
        .map(|&a| {
            (0..n)
                .map(|j| {
                    let th = (j as f64 + frac) * h;
                    Complex64::from_polar((a as f64 * x).exp(), a as f64 * th)
                })
                .collect()
        })
        .collect();
    AxisTable { exps, vals }
}

impl AxisTable {
    fn idx(&self, a: i64) -> usize {
        self.exps.binary_search(&a).expect("exponent in table")
    }
}

/// What to average over the torus.
#[derive(Clone, Copy)]
enum Integrand {
    LogAbs,
    /// `Re(z_k dP/dz_k / P)`
    Grad(usize),
}

/// One trapezoid estimate; `None` if some node sits on the zero set.
fn torus_mean(p: &LaurentPoly, x: &[f64], n: usize, frac: &[f64], what: Integrand) -> Option<f64> {
    let l = p.l;
    let eps = 1e-13 * p.scale(x);
    let tables: Vec<AxisTable> = (0..l).map(|k| axis_table(p, k, x[k], n, frac[k])).collect();
    let idx: Vec<Vec<usize>> = p
        .terms
        .iter()
        .map(|t| (0..l).map(|k| tables[k].idx(t.exp[k])).collect())
        .collect();
    let point = |nodes: &[usize]| -> Option<f64> {
        let mut val = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        for (t, ix) in p.terms.iter().zip(&idx) {
            let mut m = t.coef;
            for k in 0..l {
                m *= tables[k].vals[ix[k]][nodes[k]];
            }
            val += m;
            if let Integrand::Grad(g) = what {
                der += m * t.exp[g] as f64;
            }
        }
        if val.norm() <= eps {
            return None;
        }
        Some(match what {
            Integrand::LogAbs => val.norm().ln(),
            Integrand::Grad(_) => (der / val).re,
        })
    };
    match l {
        0 => point(&[]),
        1 => {
            let mut s = 0.0;
            for j in 0..n {
                s += point(&[j])?;
            }
            Some(s / n as f64)
        }
        2 => {
            let rows: Vec<Option<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += point(&[i, j])?;
                    }
                    Some(s)
                })
                .collect();
            let mut s = 0.0;
            for r in rows {
                s += r?;
            }
            Some(s / (n * n) as f64)
        }
        _ => None,
    }
}

fn check_args(p: &LaurentPoly, x: &[f64], opts: &RonkinOptions) -> Result<()> {
    if p.l > 2 {
        return Err(Error::InvalidInput(format!("Ronkin quadrature supports l <= 2, got {}", p.l)));
    }
    if x.len() != p.l {
        return Err(Error::DimensionMismatch { expected: p.l, got: x.len() });
    }
    if opts.nodes < 16 {
        return Err(Error::InvalidInput(format!("need at least 16 nodes, got {}", opts.nodes)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    Ok(())
}

/// Torus average with jitter retries and node doubling.
fn adaptive_mean(p: &LaurentPoly, x: &[f64], opts: &RonkinOptions, what: Integrand) -> Result<RonkinValue> {
    check_args(p, x, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut frac = vec![0.0; p.l];
    let cap = opts.cap(p.l).max(opts.nodes);
    for retry in 0..=3 {
        if retry > 0 {
            for f in frac.iter_mut() {
                *f = rng.gen_range(0.1..0.9);
            }
        }
        let mut n = opts.nodes;
        let Some(mut prev) = torus_mean(p, x, n, &frac, what) else { continue };
        loop {
            if n * 2 > cap {
                return Ok(RonkinValue { value: prev, nodes: n, converged: p.l == 0, jitter_retries: retry });
            }
            n *= 2;
            let Some(next) = torus_mean(p, x, n, &frac, what) else { break };
            let done = (next - prev).abs() < opts.tol;
            prev = next;
            if done {
                return Ok(RonkinValue { value: prev, nodes: n, converged: true, jitter_retries: retry });
            }
        }
    }
    Err(Error::SingularFiber(x.to_vec()))
}

/// Ronkin function `kappa * mean_{|z| = e^x} log|P|` with default options.
pub fn ronkin(p: &LaurentPoly, x: &[f64], nodes: usize, kappa: Kappa) -> Result<f64> {
    Ok(ronkin_with(p, x, &RonkinOptions::new(nodes, kappa))?.value)
}

pub fn ronkin_with(p: &LaurentPoly, x: &[f64], opts: &RonkinOptions) -> Result<RonkinValue> {
    let mut v = adaptive_mean(p, x, opts, Integrand::LogAbs)?;
    v.value *= opts.kappa.value();
    Ok(v)
}

/// Gradient of the Ronkin function, `kappa * mean Re(z_k dP/dz_k / P)`.
pub fn ronkin_gradient(p: &LaurentPoly, x: &[f64], opts: &RonkinOptions) -> Result<Vec<f64>> {
    (0..p.l)
        .map(|k| Ok(adaptive_mean(p, x, opts, Integrand::Grad(k))?.value * opts.kappa.value()))
        .collect()
}

/// `N(lambda t) / lambda`.
pub fn ronkin_rescaled(p: &LaurentPoly, t: &[f64], lambda: f64, nodes: usize, kappa: Kappa) -> Result<f64> {
    ronkin_rescaled_with(p, t, lambda, &RonkinOptions::new(nodes, kappa))
}

pub fn ronkin_rescaled_with(p: &LaurentPoly, t: &[f64], lambda: f64, opts: &RonkinOptions) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveArgument(lambda));
    }
    let x: Vec<f64> = t.iter().map(|v| v * lambda).collect();
    Ok(ronkin_with(p, &x, opts)?.value / lambda)
}

/// `kappa * max_i (<a_i, t> + log|c_i|)`.
pub fn tropical_limit(p: &LaurentPoly, t: &[f64], kappa: Kappa) -> f64 {
    kappa.value()
        * p.terms
            .iter()
            .map(|term| dotf(&term.exp, t) + term.coef.norm().ln())
            .fold(f64::NEG_INFINITY, f64::max)
}

/// Limit of `N(lambda t) / lambda` as `lambda -> inf`: `kappa * max_i <a_i, t>`,
/// whose corner locus is the spine.
pub fn spine_function(p: &LaurentPoly, t: &[f64], kappa: Kappa) -> f64 {
    kappa.value() * p.terms.iter().map(|term| dotf(&term.exp, t)).fold(f64::NEG_INFINITY, f64::max)
}

/// Gradient of `spine_function`: `kappa` times the exponent of a maximizing term.
pub fn spine_gradient(p: &LaurentPoly, t: &[f64], kappa: Kappa) -> Vec<f64> {
    let mut best: Option<(f64, &Term)> = None;
    for term in &p.terms {
        let v = dotf(&term.exp, t);
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, term));
        }
    }
    let (_, term) = best.expect("nonempty polynomial");
    term.exp.iter().map(|&a| kappa.value() * a as f64).collect()
}

/// Spine of the amoeba of `P_sigma`: the wall complex of `sigma`.
pub fn spine(pair: &DualSimplexPair) -> Result<WallComplex> {
    wall_complex(&pair.sigma)
}

/// Roots of a univariate Laurent polynomial `sum c_k z^{e_k}` in `C*`.
pub fn laurent_roots(coefs: &[(i64, Complex64)]) -> Result<Vec<Complex64>> {
    let lo = coefs.iter().map(|c| c.0).min().unwrap_or(0);
    let hi = coefs.iter().map(|c| c.0).max().unwrap_or(0);
    let deg = (hi - lo) as usize;
    let mut a = vec![Complex64::new(0.0, 0.0); deg + 1];
    for &(e, c) in coefs {
        a[(e - lo) as usize] += c;
    }
    // trim vanishing leading / trailing coefficients
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::RootFindingFailure("identically zero polynomial".into()));
    }
    let mut hi_i = deg;
    while hi_i > 0 && a[hi_i].norm() <= 1e-14 * scale {
        hi_i -= 1;
    }
    let mut lo_i = 0;
    while lo_i < hi_i && a[lo_i].norm() <= 1e-14 * scale {
        lo_i += 1;
    }
    let a = &a[lo_i..=hi_i];
    let d = a.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = a[d];
    let comp = DMatrix::<Complex64>::from_fn(d, d, |i, j| {
        if i == 0 {
            -a[d - 1 - j] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = companion_eigenvalues(comp)?;
    let horner = |z: Complex64| {
        let mut v = Complex64::new(0.0, 0.0);
        let mut dv = Complex64::new(0.0, 0.0);
        for c in a.iter().rev() {
            dv = dv * z + v;
            v = v * z + c;
        }
        (v, dv)
    };
    let mut roots = Vec::with_capacity(d);
    for mut z in eig.iter().copied() {
        for _ in 0..8 {
            let (v, dv) = horner(z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            z -= step;
            if step.norm() <= 1e-16 * z.norm() {
                break;
            }
        }
        let size: f64 = a.iter().enumerate().map(|(k, c)| c.norm() * z.norm().powi(k as i32)).sum();
        let (v, _) = horner(z);
        if v.norm() > 1e-10 * size {
            return Err(Error::RootFindingFailure(format!("residual {:e} at root {z}", v.norm() / size)));
        }
        roots.push(z);
    }
    Ok(roots)
}

/// Eigenvalues by complex Schur iteration. Companion matrices of `z^d - c`
/// are scaled permutations on which shifted QR can stall, so a failed attempt
/// is retried on a fixed random unitary conjugate.
fn companion_eigenvalues(comp: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let d = comp.nrows();
    if let Some(e) = nalgebra::Schur::try_new(comp.clone(), 1e-15, 2000).and_then(|s| s.eigenvalues()) {
        return Ok(e.iter().copied().collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    let g = DMatrix::<Complex64>::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let q = g.qr().q();
    let conj = q.adjoint() * comp * &q;
    nalgebra::Schur::try_new(conj, 1e-15, 4000)
        .and_then(|s| s.eigenvalues())
        .map(|e| e.iter().copied().collect())
        .ok_or_else(|| Error::RootFindingFailure("Schur iteration did not converge".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmoebaOptions {
    pub tol: f64,
    /// Phase samples for the `l = 2` sweep.
    pub sweep: usize,
}

impl Default for AmoebaOptions {
    fn default() -> Self {
        Self { tol: 1e-9, sweep: 2048 }
    }
}

/// Whether the torus fiber `log|z| = x` meets `{P = 0}`.
pub fn amoeba_contains(p: &LaurentPoly, x: &[f64], tol: f64) -> Result<bool> {
    amoeba_contains_with(p, x, &AmoebaOptions { tol, ..AmoebaOptions::default() })
}

pub fn amoeba_contains_with(p: &LaurentPoly, x: &[f64], opts: &AmoebaOptions) -> Result<bool> {
    if x.len() != p.l {
        return Err(Error::DimensionMismatch { expected: p.l, got: x.len() });
    }
    match p.l {
        0 => Ok(false),
        1 => {
            let coefs: Vec<(i64, Complex64)> = p.terms.iter().map(|t| (t.exp[0], t.coef)).collect();
            let roots = laurent_roots(&coefs)?;
            Ok(roots.iter().any(|z| (z.norm().ln() - x[0]).abs() <= opts.tol))
        }
        2 => amoeba_sweep(p, x, opts),
        l => Err(Error::InvalidInput(format!("amoeba test supports l <= 2, got {l}"))),
    }
}

fn amoeba_sweep(p: &LaurentPoly, x: &[f64], opts: &AmoebaOptions) -> Result<bool> {
    // group terms by exponent of z2; coefficients are Laurent in z1
    let mut e2: Vec<i64> = p.terms.iter().map(|t| t.exp[1]).collect();
    e2.sort_unstable();
    e2.dedup();
    if e2.len() == 1 {
        let q = LaurentPoly::new(1, p.terms.iter().map(|t| Term { exp: vec![t.exp[0]], coef: t.coef }).collect())?;
        return amoeba_contains_with(&q, &x[..1], opts);
    }
    let r1 = x[0].exp();
    let mut prev_inside: Option<usize> = None;
    for k in 0..opts.sweep {
        let th = 2.0 * PI * (k as f64 + 0.5) / opts.sweep as f64;
        let z1 = Complex64::from_polar(r1, th);
        let coefs: Vec<(i64, Complex64)> = e2
            .iter()
            .map(|&b| {
                let c = p
                    .terms
                    .iter()
                    .filter(|t| t.exp[1] == b)
                    .map(|t| t.coef * z1.powi(t.exp[0] as i32))
                    .sum();
                (b, c)
            })
            .collect();
        let scale = coefs.iter().map(|c| c.1.norm()).fold(0.0, f64::max);
        if scale <= 1e-14 * p.scale(x) {
            return Ok(true);
        }
        let roots = laurent_roots(&coefs)?;
        let logs: Vec<f64> = roots.iter().map(|z| z.norm().ln() - x[1]).collect();
        if logs.iter().any(|v| v.abs() <= opts.tol) {
            return Ok(true);
        }
        let inside = logs.iter().filter(|&&v| v < 0.0).count();
        if prev_inside.is_some_and(|c| c != inside) {
            return Ok(true);
        }
        prev_inside = Some(inside);
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianMass {
    /// `int_box Hess N`, via the divergence theorem on the gradient.
    pub ronkin: DMatrix<f64>,
    /// The same quantity for the tropical limit (weighted spine mass in the box).
    pub spine: DMatrix<f64>,
}

/// Integrated Hessian of the Ronkin function over the box `[lo, hi]`.
///
/// Entry `(i, j)` is `int_{d box} n_i dN/dx_j`, equal to `int_box d_i d_j N`.
pub fn ronkin_hessian_mass(p: &LaurentPoly, lo: &[f64], hi: &[f64], opts: &RonkinOptions) -> Result<HessianMass> {
    let l = p.l;
    if lo.len() != l || hi.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: lo.len() });
    }
    if (0..l).any(|k| !(hi[k] > lo[k])) {
        return Err(Error::InvalidInput("empty box".into()));
    }
    let grad = |x: &[f64]| ronkin_gradient(p, x, opts);
    let tgrad = |x: &[f64]| Ok(spine_gradient(p, x, opts.kappa));
    Ok(HessianMass { ronkin: boundary_flux(l, lo, hi, &grad)?, spine: boundary_flux(l, lo, hi, &tgrad)? })
}

fn boundary_flux<G>(l: usize, lo: &[f64], hi: &[f64], grad: &G) -> Result<DMatrix<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut m = DMatrix::zeros(l, l);
    match l {
        1 => {
            let (a, b) = (grad(lo)?, grad(hi)?);
            m[(0, 0)] = b[0] - a[0];
        }
        2 => {
            for i in 0..2 {
                let o = 1 - i;
                let (xs, ws) = quad::gauss_legendre_on(24, lo[o], hi[o]);
                for (s, w) in xs.iter().zip(&ws) {
                    for (face, sign) in [(hi[i], 1.0), (lo[i], -1.0)] {
                        let mut pt = [0.0; 2];
                        pt[i] = face;
                        pt[o] = *s;
                        let g = grad(&pt)?;
                        for j in 0..2 {
                            m[(i, j)] += sign * w * g[j];
                        }
                    }
                }
            }
        }
        _ => return Err(Error::InvalidInput(format!("Hessian mass supports l = 1 or 2, got {l}"))),
    }
    Ok(m)
}

/// One row of a rescaled Ronkin sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RonkinSample {
    pub t: Vec<f64>,
    pub lambda: f64,
    pub n_lambda: f64,
    pub n_inf: f64,
    pub abs_err: f64,
}

/// Rescaled Ronkin values against the `lambda -> inf` limit, in input order.
pub fn ronkin_grid(p: &LaurentPoly, points: &[Vec<f64>], lambda: f64, opts: &RonkinOptions) -> Result<Vec<RonkinSample>> {
    points
        .par_iter()
        .map(|t| {
            let n_lambda = ronkin_rescaled_with(p, t, lambda, opts)?;
            let n_inf = spine_function(p, t, opts.kappa);
            Ok(RonkinSample { t: t.clone(), lambda, n_lambda, n_inf, abs_err: (n_lambda - n_inf).abs() })
        })
        .collect()
}

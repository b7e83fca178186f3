//! Degeneration experiments: Fourier modes of fields periodic in the fiber
//! coordinate, exponential decay fits, zero-mode collapse distances and fiber
//! diameters under rescaling.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gh::GhSolution;
use crate::legendre::SplitMASolution;
use crate::solutions::{OoguriVafa, Semiflat};
use crate::tropical::{ronkin_grid, LaurentPoly, RonkinOptions};

/// A scalar field `V(base, y)` periodic in `y`, with a decay parameter `beta(base)`
/// (the distance to the discriminant for the explicit families).
pub trait PeriodicField: Sync {
    fn period(&self) -> f64 {
        2.0 * PI
    }
    fn eval(&self, base: &[f64], y: f64) -> Result<f64>;
    fn beta(&self, base: &[f64]) -> f64;
}

impl PeriodicField for OoguriVafa {
    fn eval(&self, base: &[f64], y: f64) -> Result<f64> {
        if base.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: base.len() });
        }
        self.value(&[base[0], base[1], y])
    }
    fn beta(&self, base: &[f64]) -> f64 {
        self.radius(base[0], base[1])
    }
}

/// Constant in `y`; only `n = 1` (scalar `V`) is supported.
impl PeriodicField for Semiflat {
    fn eval(&self, base: &[f64], _y: f64) -> Result<f64> {
        if self.n() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.n() });
        }
        Ok(self.v(base)?[(0, 0)])
    }
    fn beta(&self, _base: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// `V = 1 + sum_{m=1}^{M} 2 e^{-rate beta m} cos(m y)` with `beta = |base|`,
/// so that `V^{+-m} = e^{-rate beta |m|}` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticField {
    pub rate: f64,
    pub m_max: usize,
}

impl PeriodicField for SyntheticField {
    fn eval(&self, base: &[f64], y: f64) -> Result<f64> {
        let b = self.beta(base);
        Ok(1.0 + (1..=self.m_max).map(|m| 2.0 * (-self.rate * b * m as f64).exp() * (m as f64 * y).cos()).sum::<f64>())
    }
    fn beta(&self, base: &[f64]) -> f64 {
        base.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A field given by closures.
pub struct FnField<F, B> {
    pub value: F,
    pub beta: B,
    pub period: f64,
}

impl<F, B> FnField<F, B>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
    B: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(value: F, beta: B) -> Self {
        FnField { value, beta, period: 2.0 * PI }
    }
}

impl<F, B> PeriodicField for FnField<F, B>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
    B: Fn(&[f64]) -> f64 + Sync,
{
    fn period(&self) -> f64 {
        self.period
    }
    fn eval(&self, base: &[f64], y: f64) -> Result<f64> {
        Ok((self.value)(base, y))
    }
    fn beta(&self, base: &[f64]) -> f64 {
        (self.beta)(base)
    }
}

/// Energy fraction in the two highest resolved frequencies above which the
/// sampling is declared aliased.
const ALIASING_RATIO: f64 = 1e-10;

/// Modes `V^m`, `m = -M..=M` (index `m + M`), by the trapezoid rule on `nodes`
/// equispaced points. Exact for fields band-limited below `nodes / 2`; the energy
/// in the top two frequencies `|m| >= nodes/2 - 1` must be below `1e-10` of the total.
pub fn fourier_modes<F: PeriodicField + ?Sized>(field: &F, base: &[f64], m_max: usize, nodes: usize) -> Result<Vec<Complex64>> {
    if nodes < 2 * m_max + 4 {
        return Err(Error::InvalidInput(format!("{nodes} nodes cannot resolve |m| <= {m_max} with a guard band")));
    }
    let period = field.period();
    let samples: Vec<f64> = (0..nodes)
        .map(|k| field.eval(base, period * k as f64 / nodes as f64))
        .collect::<Result<_>>()?;
    let coeff = |m: i64| -> Complex64 {
        samples
            .iter()
            .enumerate()
            .map(|(k, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (m * k as i64) as f64 / nodes as f64))
            .sum::<Complex64>()
            / nodes as f64
    };
    let half = (nodes / 2) as i64;
    let total: f64 = samples.iter().map(|v| v * v).sum::<f64>() / nodes as f64;
    let top: f64 = [half - 1, half]
        .iter()
        .flat_map(|&m| if m == half && nodes % 2 == 0 { vec![m] } else { vec![m, -m] })
        .map(|m| coeff(m).norm_sqr())
        .sum();
    if total > 0.0 && top > ALIASING_RATIO * total {
        return Err(Error::AliasingDetected(top / total));
    }
    let m = m_max as i64;
    Ok((-m..=m).map(coeff).collect())
}

/// Fit of `log|V^m| = log C - rate beta |m| + power log(beta |m|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModeFit {
    pub m: i64,
    pub c: f64,
    pub rate: f64,
    pub power: f64,
    /// Max absolute residual of the fit, in log scale.
    pub residual: f64,
    /// All magnitudes below `1e-12`: nothing to fit.
    pub skipped: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecayReport {
    pub lambda: f64,
    pub mode_indices: Vec<i64>,
    pub points: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
    /// `magnitudes[k][i] = |V^{m_k}|` at point `i`.
    pub magnitudes: Vec<Vec<f64>>,
    pub fits: Vec<ModeFit>,
    pub norm: String,
}

/// One CSV row `m,beta,abs_mode,log_abs_mode,fit_pred`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub m: i64,
    pub beta: f64,
    pub abs_mode: f64,
    pub log_abs_mode: f64,
    pub fit_pred: f64,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.fits.iter().all(|f| f.pass)
    }

    pub fn rows(&self) -> Vec<DecayRow> {
        let mut rows = Vec::new();
        for (k, fit) in self.fits.iter().enumerate() {
            for (i, &b) in self.betas.iter().enumerate() {
                let a = self.magnitudes[k][i];
                let x = b * fit.m.unsigned_abs() as f64;
                let fit_pred = if fit.skipped { f64::NAN } else { fit.c.ln() - fit.rate * x + fit.power * x.ln() };
                rows.push(DecayRow { m: fit.m, beta: b, abs_mode: a, log_abs_mode: a.ln(), fit_pred });
            }
        }
        rows
    }
}

/// Minimum number of grid points per fit.
pub const MIN_FIT_POINTS: usize = 8;
/// Smallest admissible `beta` on the grid.
pub const MIN_BETA: f64 = 0.2;

/// Per mode `m = 1..=M`, regress `log|V^m|` on `(1, -beta|m|, log(beta|m|))` over
/// the grid. The power term absorbs the algebraic prefactor of the decay (for
/// Bessel modes, `K_0(x) ~ sqrt(pi/2x) e^{-x}`). A mode passes when its rate is in
/// `[0.9, 1.1]` and the max log residual is below `0.1`.
pub fn decay_fit<F: PeriodicField + ?Sized>(
    field: &F,
    points: &[Vec<f64>],
    m_max: usize,
    lambda: f64,
    nodes: usize,
) -> Result<DecayReport> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { got: points.len(), needed: MIN_FIT_POINTS });
    }
    if m_max == 0 {
        return Err(Error::InvalidInput("need at least one mode".into()));
    }
    let betas: Vec<f64> = points.iter().map(|p| field.beta(p)).collect();
    if let Some(k) = betas.iter().position(|&b| !(b >= MIN_BETA)) {
        return Err(Error::DomainViolation(points[k].clone()));
    }
    let modes: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|p| fourier_modes(field, p, m_max, nodes))
        .collect::<Result<_>>()?;
    let mode_indices: Vec<i64> = (1..=m_max as i64).collect();
    let magnitudes: Vec<Vec<f64>> = mode_indices
        .iter()
        .map(|&m| modes.iter().map(|v| v[(m + m_max as i64) as usize].norm()).collect())
        .collect();
    let fits = mode_indices
        .iter()
        .zip(&magnitudes)
        .map(|(&m, mags)| fit_mode(m, &betas, mags))
        .collect::<Result<_>>()?;
    Ok(DecayReport {
        lambda,
        mode_indices,
        points: points.to_vec(),
        betas,
        magnitudes,
        fits,
        norm: "log-linear regression with algebraic prefactor".into(),
    })
}

fn fit_mode(m: i64, betas: &[f64], mags: &[f64]) -> Result<ModeFit> {
    if mags.iter().all(|&a| a < 1e-12) {
        return Ok(ModeFit { m, c: 0.0, rate: 0.0, power: 0.0, residual: 0.0, skipped: true, pass: true });
    }
    let used: Vec<(f64, f64)> = betas
        .iter()
        .zip(mags)
        .filter(|(_, &a)| a > 0.0)
        .map(|(&b, &a)| (b * m.unsigned_abs() as f64, a.ln()))
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { got: used.len(), needed: MIN_FIT_POINTS });
    }
    let a = DMatrix::from_fn(used.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => -used[i].0,
        _ => used[i].0.ln(),
    });
    let y = DVector::from_iterator(used.len(), used.iter().map(|u| u.1));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("decay regression failed: {e}")))?;
    let residual = (&a * &coef - &y).amax();
    let rate = coef[1];
    Ok(ModeFit {
        m,
        c: coef[0].exp(),
        rate,
        power: coef[2],
        residual,
        skipped: false,
        pass: (0.9..=1.1).contains(&rate) && residual < 0.1,
    })
}

/// Rescaled fiber circle length at `(base, y)` and its split-limit reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FiberDiameter {
    pub lambda: f64,
    pub beta: f64,
    /// `2 pi / sqrt(V)`.
    pub diameter: f64,
    /// `diameter / lambda`.
    pub rescaled: f64,
    /// `2 pi / (lambda sqrt(V^0))`, from the zero mode.
    pub reference: f64,
    pub ratio: f64,
}

/// Fiber length `2 pi sqrt(V^{-1})` of the circle direction at a point, with the
/// `1/lambda` rescaled value compared against the zero-mode (limit) prediction.
pub fn fiber_diameter<F: PeriodicField + ?Sized>(field: &F, base: &[f64], y: f64, lambda: f64, nodes: usize) -> Result<FiberDiameter> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveArgument(lambda));
    }
    let v = field.eval(base, y)?;
    if !(v > 0.0) {
        return Err(Error::DomainViolation(base.to_vec()));
    }
    let v0 = fourier_modes(field, base, 0, nodes)?[0].re;
    if !(v0 > 0.0) {
        return Err(Error::DomainViolation(base.to_vec()));
    }
    let diameter = 2.0 * PI / v.sqrt();
    let rescaled = diameter / lambda;
    let reference = 2.0 * PI / (lambda * v0.sqrt());
    Ok(FiberDiameter { lambda, beta: field.beta(base), diameter, rescaled, reference, ratio: rescaled / reference })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CollapseReport {
    pub lambdas: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    pub sup_distance: Vec<f64>,
    pub fiber_diameter: Vec<FiberDiameter>,
    pub non_increasing: bool,
    pub strictly_decreasing: bool,
    pub norm: String,
}

const SUP_NORM: &str = "sup norm on a compact grid at distance >= 0.2 from the discriminant";

fn validate_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("empty lambda list".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("lambda values must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("lambda values must be ascending".into()));
    }
    Ok(())
}

/// Increases below this (absolute plus relative) are treated as round-off.
const TREND_SLACK: f64 = 1e-12;

fn trend(d: &[f64]) -> (bool, bool) {
    let non_inc = d.windows(2).all(|w| w[1] <= w[0] + TREND_SLACK * (1.0 + w[0].abs()));
    let strict = d.windows(2).all(|w| w[1] < w[0]);
    (non_inc, strict)
}

/// Family of fields indexed by `lambda`.
pub type FieldFamily<'a> = dyn Fn(f64) -> Result<Box<dyn PeriodicField + Send + Sync>> + Sync + 'a;

/// `sup_grid |V^0_lambda(lambda s, lambda t) - V(s, t)|` for each `lambda`, where `V`
/// is the `1 x 1` block of the split limit; fiber diameters at the first grid point.
pub fn collapse_distance(
    family: &FieldFamily<'_>,
    limit: &SplitMASolution,
    lambdas: &[f64],
    grid: &[Vec<f64>],
    nodes: usize,
) -> Result<CollapseReport> {
    validate_lambdas(lambdas)?;
    if limit.n() != 1 || limit.l() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, got: limit.dim() });
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let sing = limit.singular.as_ref().map(|s| s.points.clone()).unwrap_or_default();
    for p in grid {
        let d = sing
            .iter()
            .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
            .fold(f64::INFINITY, f64::min);
        if d < 0.2 || p.len() != 2 {
            return Err(Error::DomainViolation(p.clone()));
        }
    }
    let limit_v: Vec<f64> = grid
        .iter()
        .map(|p| Ok(limit.blocks(p)?.v[(0, 0)]))
        .collect::<Result<_>>()?;
    let mut sup_distance = Vec::with_capacity(lambdas.len());
    let mut diam = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let field = family(lam)?;
        let dists: Vec<f64> = grid
            .par_iter()
            .zip(&limit_v)
            .map(|(p, &v)| {
                let base = [lam * p[0], lam * p[1]];
                Ok((fourier_modes(field.as_ref(), &base, 0, nodes)?[0].re - v).abs())
            })
            .collect::<Result<_>>()?;
        sup_distance.push(dists.iter().copied().fold(0.0, f64::max));
        diam.push(fiber_diameter(field.as_ref(), &[lam * grid[0][0], lam * grid[0][1]], 0.0, lam, nodes)?);
    }
    let (non_increasing, strictly_decreasing) = trend(&sup_distance);
    Ok(CollapseReport {
        lambdas: lambdas.to_vec(),
        grid: grid.to_vec(),
        sup_distance,
        fiber_diameter: diam,
        non_increasing,
        strictly_decreasing,
        norm: SUP_NORM.into(),
    })
}

/// Rescaled Ronkin functions `N(lambda t)/lambda` against their tropical limit.
pub fn ronkin_collapse(p: &LaurentPoly, lambdas: &[f64], grid: &[Vec<f64>], opts: &RonkinOptions) -> Result<CollapseReport> {
    validate_lambdas(lambdas)?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let sup_distance = lambdas
        .iter()
        .map(|&lam| Ok(ronkin_grid(p, grid, lam, opts)?.iter().map(|s| s.abs_err).fold(0.0, f64::max)))
        .collect::<Result<Vec<f64>>>()?;
    let (non_increasing, strictly_decreasing) = trend(&sup_distance);
    Ok(CollapseReport {
        lambdas: lambdas.to_vec(),
        grid: grid.to_vec(),
        sup_distance,
        fiber_diameter: Vec::new(),
        non_increasing,
        strictly_decreasing,
        norm: SUP_NORM.into(),
    })
}

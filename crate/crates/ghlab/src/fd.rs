//! Central finite differences with Richardson extrapolation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Base step, relative to `max(1, |p_k|)`.
    pub step: f64,
    /// Richardson levels (0 = plain central difference).
    pub levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-4, levels: 1 }
    }
}

impl FdConfig {
    pub fn new(step: f64, levels: usize) -> Self {
        Self { step, levels }
    }

    pub fn step_at(&self, p: &[f64], k: usize) -> f64 {
        self.step * p[k].abs().max(1.0)
    }
}

/// A derivative estimate and its Richardson disagreement
/// `max |D(h) - D(h/2)| / 3`, the usual error estimate for the finer of the two
/// finest plain central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub value: Vec<f64>,
    pub disagreement: f64,
}

fn shifted(p: &[f64], k: usize, d: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += d;
    q
}

/// Partial derivative along coordinate `k` of a vector-valued function.
pub fn partial<F, E>(f: F, p: &[f64], k: usize, cfg: &FdConfig) -> Result<Derivative, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let h0 = cfg.step_at(p, k);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(cfg.levels + 1);
    for lev in 0..=cfg.levels {
        let h = h0 / (1u64 << lev) as f64;
        let a = f(&shifted(p, k, h))?;
        let b = f(&shifted(p, k, -h))?;
        table.push(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect());
    }
    let disagreement = if table.len() > 1 {
        let (c, f2) = (&table[table.len() - 2], &table[table.len() - 1]);
        c.iter().zip(f2).map(|(x, y)| (x - y).abs() / 3.0).fold(0.0, f64::max)
    } else {
        0.0
    };
    // Richardson: eliminate h^2, h^4, ...
    let mut cur = table;
    let mut factor = 4.0;
    while cur.len() > 1 {
        cur = cur
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0)).collect())
            .collect();
        factor *= 4.0;
    }
    Ok(Derivative { value: cur.pop().expect("nonempty"), disagreement })
}

/// Scalar convenience wrapper.
pub fn partial_scalar<F: Fn(&[f64]) -> f64>(f: F, p: &[f64], k: usize, cfg: &FdConfig) -> f64 {
    let r: Result<Derivative, ()> = partial(|q| Ok(vec![f(q)]), p, k, cfg);
    r.expect("infallible").value[0]
}

/// Second partial `d_a d_b f` of a scalar function by nested central differences.
pub fn second_scalar<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64], a: usize, b: usize, cfg: &FdConfig) -> f64 {
    partial_scalar(|q| partial_scalar(f, q, b, cfg), p, a, cfg)
}

/// Hessian of a scalar function from Richardson-extrapolated second differences
/// (plain second difference on the diagonal, four-point stencil off it).
pub fn hessian_scalar<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64], cfg: &FdConfig) -> DMatrix<f64> {
    let d = p.len();
    let f0 = f(p);
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let est = |h: f64| -> f64 {
                let at = |da: f64, db: f64| {
                    let mut q = p.to_vec();
                    q[a] += da;
                    q[b] += db;
                    f(&q)
                };
                if a == b {
                    (at(h, 0.0) - 2.0 * f0 + at(-h, 0.0)) / (h * h)
                } else {
                    (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
                }
            };
            let h0 = cfg.step * p[a].abs().max(p[b].abs()).max(1.0);
            let mut table: Vec<f64> = (0..=cfg.levels).map(|k| est(h0 / (1u64 << k) as f64)).collect();
            let mut factor = 4.0;
            while table.len() > 1 {
                table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
                factor *= 4.0;
            }
            m[(a, b)] = table[0];
            m[(b, a)] = table[0];
        }
    }
    m
}

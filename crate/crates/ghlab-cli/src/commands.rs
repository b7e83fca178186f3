//! The nine subcommands.

use std::collections::VecDeque;
use std::f64::consts::PI;

use clap::{Parser, Subcommand};
use ghlab::decay::{self, PeriodicField};
use ghlab::fd::FdConfig;
use ghlab::gh::{self, ResidualReport};
use ghlab::legendre::{self, Harmonic, PolygonLoop, SplitMASolution};
use ghlab::solutions::{self, ModeSum, OoguriVafa};
use ghlab::tropical::{self, Kappa, LaurentPoly, RonkinOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, Params, RunConfig};
use crate::output::{fmt, Check, Emitter};
use crate::poly::parse_poly;
use crate::svg::{Axes, Series};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "ghlab", version, about = "Generalized Gibbons-Hawking experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closedness and det V = det W for the flat C^{n+1} solution.
    VerifyFlat(Params),
    /// Harmonicity, closedness and Chern flux for Taub-NUT.
    VerifyTaubnut(Params),
    /// Sample the periodic (Ooguri-Vafa) solution; Helmholtz and flux checks.
    Ov(Params),
    /// Rescaled Ronkin function of a polynomial on a range.
    Ronkin(Params),
    /// Amoeba membership on a range or grid.
    Amoeba(Params),
    /// Partial Legendre transform and block identities.
    Legendre(Params),
    /// Period of beta around the model singularity.
    Holonomy(Params),
    /// Fourier-mode decay fit for the periodic solution.
    Decay(Params),
    /// Collapse distances for the periodic or rescaled-Ronkin family.
    Collapse(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyFlat(_) => "verify-flat",
            Command::VerifyTaubnut(_) => "verify-taubnut",
            Command::Ov(_) => "ov",
            Command::Ronkin(_) => "ronkin",
            Command::Amoeba(_) => "amoeba",
            Command::Legendre(_) => "legendre",
            Command::Holonomy(_) => "holonomy",
            Command::Decay(_) => "decay",
            Command::Collapse(_) => "collapse",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::VerifyFlat(p)
            | Command::VerifyTaubnut(p)
            | Command::Ov(p)
            | Command::Ronkin(p)
            | Command::Amoeba(p)
            | Command::Legendre(p)
            | Command::Holonomy(p)
            | Command::Decay(p)
            | Command::Collapse(p) => p,
        }
    }
}

/// Runs the command and returns whether every check passed.
pub fn run(cmd: &Command) -> Result<bool, CliError> {
    let params = cmd.params();
    let cfg = config::merge(params)?;
    let em = Emitter::new(cmd.name(), cfg.clone(), &params.out)?;
    match cmd {
        Command::VerifyFlat(_) => verify_flat(&cfg, em),
        Command::VerifyTaubnut(_) => verify_taubnut(&cfg, em),
        Command::Ov(_) => ov(&cfg, em),
        Command::Ronkin(_) => ronkin(&cfg, em),
        Command::Amoeba(_) => amoeba(&cfg, em),
        Command::Legendre(_) => legendre(&cfg, em),
        Command::Holonomy(_) => holonomy(&cfg, em),
        Command::Decay(_) => decay(&cfg, em),
        Command::Collapse(_) => collapse(&cfg, em),
    }
}

fn need_poly(cfg: &RunConfig) -> Result<LaurentPoly, CliError> {
    let s = cfg.poly.as_deref().ok_or_else(|| CliError::Config("field 'poly': required".into()))?;
    Ok(parse_poly(s)?)
}

fn kappa(cfg: &RunConfig) -> Result<Kappa, CliError> {
    Kappa::from_int(cfg.kappa.unwrap_or(1)).map_err(|e| CliError::Config(format!("field 'kappa': {e}")))
}

fn first_lambda(cfg: &RunConfig) -> f64 {
    cfg.lambda.as_ref().map_or(1.0, |l| l[0])
}

/// Low-discrepancy sequence in `[0, 1)^d` (Kronecker with square roots of primes).
fn kronecker(k: usize, d: usize) -> Vec<f64> {
    const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    (0..d).map(|i| ((k + 1) as f64 * PRIMES[i % 8].sqrt()).fract()).collect()
}

/// Points in the spherical shell `r0 <= |p| <= r1` of `R^3`.
fn shell(count: usize, r0: f64, r1: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let q = kronecker(k, 3);
            let r = r0 + (r1 - r0) * q[0];
            let ct = 2.0 * q[1] - 1.0;
            let st = (1.0 - ct * ct).sqrt();
            let ph = 2.0 * PI * q[2];
            vec![r * ct, r * st * ph.cos(), r * st * ph.sin()]
        })
        .collect()
}

fn residual_check(r: &ResidualReport) -> Check {
    Check::below(r.check.clone(), r.max_residual, r.tolerance)
}

fn verify_flat(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let n = cfg.n.unwrap_or(1);
    if !(1..=2).contains(&n) {
        return Err(CliError::Config(format!("field 'n': must be 1 or 2, got {n}")));
    }
    let g = cfg.grid.unwrap_or(16);
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let fd = FdConfig::new(cfg.step.unwrap_or(1e-4), 1);
    let sol = solutions::FlatToric::new(n)?;
    let mut pts = Vec::with_capacity(g * g);
    for k in 0..g * g {
        let q = kronecker(k, 2 * (n + 1));
        let z: Vec<Complex64> = (0..=n).map(|i| Complex64::from_polar(0.5 * 4f64.powf(q[2 * i]), 2.0 * PI * q[2 * i + 1])).collect();
        pts.push(solutions::flat_solution(n, &z)?.point);
    }
    let grid = format!("{} points, 0.5 <= |z_i| <= 2", pts.len());
    let closed = gh::verify_closed(&sol, &pts, &grid, &fd, tol)?;
    let compat = gh::verify_compat(&sol, &pts, &grid, tol)?;
    let reports = [closed.d_f, closed.d_omega, closed.integrability, compat];
    for r in &reports {
        em.check(residual_check(r));
    }
    em.finish(json!({ "n": n, "reports": reports }))
}

fn verify_taubnut(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let ell = cfg.ell.unwrap_or(1.0);
    let a = cfg.a.unwrap_or(1.0);
    let g = cfg.grid.unwrap_or(16);
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let (r0, r1) = (cfg.r_min.unwrap_or(0.5), cfg.r_max.unwrap_or(2.0));
    let fd = FdConfig::new(cfg.step.unwrap_or(1e-3), 1);
    let sol = solutions::taub_nut(ell, a)?;
    let pts = shell(g * g, r0, r1);
    let grid = format!("{} points, {r0} <= r <= {r1}", pts.len());
    let lap: Vec<f64> = pts.iter().map(|p| sol.laplacian(p).map(f64::abs)).collect::<Result<_, _>>()?;
    let lap = ResidualReport::from_residuals("laplacian", &grid, &pts, &lap, None, tol.min(1e-8));
    let closed = gh::verify_closed(&sol, &pts, &grid, &fd, tol)?;
    let compat = gh::verify_compat(&sol, &pts, &grid, tol)?;
    let radius = 0.5 * (r0 + r1);
    let flux = gh::chern_flux(&sol, &[0.0], &[1.0], radius, 24, &fd)?[0];
    let reports = [lap, closed.d_f, closed.d_omega, closed.integrability, compat];
    for r in &reports {
        em.check(residual_check(r));
    }
    em.check(Check::below("chern_flux", (flux + ell).abs(), 1e-6));
    em.finish(json!({ "ell": ell, "a": a, "reports": reports, "chernFlux": flux, "expectedFlux": -ell, "fluxRadius": radius }))
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

fn ov(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let lambda = first_lambda(cfg);
    let m_max = cfg.m.unwrap_or(40);
    let a = cfg.a.unwrap_or(1.0);
    let g = cfg.grid.unwrap_or(16);
    let (r0, r1) = (cfg.r_min.unwrap_or(0.1), cfg.r_max.unwrap_or(2.0));
    let tol = cfg.tolerance.unwrap_or(1e-8);
    let sol = OoguriVafa::builder(lambda, m_max, a).domain(r0, r1).build()?;
    let us = linspace(r0, r1, g);
    let ys: Vec<f64> = (0..g).map(|k| -PI + 2.0 * PI * k as f64 / g as f64).collect();
    let mut header: Vec<String> = ["u", "x", "y", "V"].iter().map(|s| s.to_string()).collect();
    for m in 0..=m_max {
        header.push(format!("re_V{m}"));
        header.push(format!("im_V{m}"));
    }
    let cells: Vec<(f64, f64)> = us.iter().flat_map(|&u| ys.iter().map(move |&y| (u, y))).collect();
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|&(u, y)| -> ghlab::Result<Vec<String>> {
            let mut row = vec![fmt(u), fmt(0.0), fmt(y), fmt(sol.value(&[u, 0.0, y])?)];
            for m in 0..=m_max as i64 {
                let c = sol.mode(m, sol.radius(u, 0.0))?;
                row.push(fmt(c.re));
                row.push(fmt(c.im));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    em.csv(&header, &rows)?;

    let mut helm = 0.0f64;
    for m in -(m_max.min(10) as i64)..=m_max.min(10) as i64 {
        for &r in &us {
            helm = helm.max(sol.helmholtz_residual(m, r)?);
        }
    }
    em.check(Check::below("helmholtz", helm, tol));
    let full = OoguriVafa::builder(lambda, m_max, a).domain(r0, r1).mode_sum(ModeSum::Complete).build()?;
    let radii = [0.3, 0.5];
    let mut fluxes = Vec::new();
    let mut truncated = Vec::new();
    for &r in &radii {
        let f = solutions::ov_total_flux(&full, r)?;
        em.check(Check::below(format!("flux_r{r}"), (f + 2.0 * PI).abs() / (2.0 * PI), 0.01));
        fluxes.push(f);
        truncated.push(solutions::ov_total_flux(&sol, r)?);
    }
    em.finish(json!({
        "lambda": lambda, "M": m_max, "a": a,
        "maxHelmholtzResidual": helm,
        "fluxRadii": radii, "completeFlux": fluxes, "truncatedFlux": truncated, "expectedFlux": -2.0 * PI,
    }))
}

/// Range samples; for `l = 2` the same range on both axes.
fn range_points(cfg: &RunConfig, l: usize, default: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let axis = config::parse_range(cfg.range.as_deref().unwrap_or(default))?;
    Ok(match l {
        1 => axis.iter().map(|&t| vec![t]).collect(),
        _ => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
    })
}

fn ronkin(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let p = need_poly(cfg)?;
    let l = p.nvars();
    let lambdas = cfg.lambda.clone().unwrap_or_else(|| vec![1.0]);
    let mut opts = RonkinOptions::new(cfg.nodes.unwrap_or(16), kappa(cfg)?);
    opts.tol = cfg.tolerance.unwrap_or(opts.tol);
    opts.seed = cfg.seed.unwrap_or(opts.seed);
    let pts = range_points(cfg, l, if l == 1 { "-3:3:0.1" } else { "-2:2:0.25" })?;
    let mut header: Vec<String> = (1..=l).map(|k| format!("t{k}")).collect();
    header.extend(["lambda", "N_lambda", "N_inf", "abs_err"].iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut sup = Vec::new();
    let mut convex = 0.0f64;
    for &lam in &lambdas {
        let samples = tropical::ronkin_grid(&p, &pts, lam, &opts)?;
        for s in &samples {
            let mut r: Vec<String> = s.t.iter().map(|&v| fmt(v)).collect();
            r.extend([fmt(s.lambda), fmt(s.n_lambda), fmt(s.n_inf), fmt(s.abs_err)]);
            rows.push(r);
        }
        sup.push(samples.iter().map(|s| s.abs_err).fold(0.0, f64::max));
        if l == 1 {
            // midpoint convexity: N(t) <= (N(t-h) + N(t+h)) / 2
            for w in samples.windows(3) {
                convex = convex.max(2.0 * w[1].n_lambda - w[0].n_lambda - w[2].n_lambda);
            }
            series.push(Series { label: format!("lambda={lam}"), points: samples.iter().map(|s| (s.t[0], s.n_lambda)).collect() });
        }
    }
    em.csv(&header, &rows)?;
    if l == 1 {
        em.check(Check::below("convexity", convex, 10.0 * opts.tol));
        if cfg.svg.unwrap_or(false) {
            series.push(Series {
                label: "limit".into(),
                points: pts.iter().map(|t| (t[0], tropical::spine_function(&p, t, opts.kappa))).collect(),
            });
            em.svg(&series, &Axes { x_label: "t".into(), y_label: "N(lambda t)/lambda".into(), title: "rescaled Ronkin function".into(), ..Axes::default() })?;
        }
    }
    em.check(Check::flag(
        "distance_non_increasing",
        sup.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs())),
    ));
    em.finish(json!({ "poly": p.to_json().parse::<Value>().unwrap_or(Value::Null), "lambdas": lambdas, "supDistance": sup }))
}

/// Connected components of the `false` cells of a boolean grid (4-neighbour).
fn components(mask: &[bool], rows: usize, cols: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    for start in 0..mask.len() {
        if mask[start] || seen[start] {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            let (i, j) = (c / cols, c % cols);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(c - cols);
            }
            if i + 1 < rows {
                nb.push(c + cols);
            }
            if j > 0 {
                nb.push(c - 1);
            }
            if j + 1 < cols {
                nb.push(c + 1);
            }
            for d in nb {
                if !mask[d] && !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    count
}

fn amoeba(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let p = need_poly(cfg)?;
    let l = p.nvars();
    let tol = cfg.tolerance.unwrap_or(1e-9);
    let pts = range_points(cfg, l, if l == 1 { "-3:3:0.01" } else { "-3:3:0.1" })?;
    let inside: Vec<bool> = pts.par_iter().map(|x| tropical::amoeba_contains(&p, x, tol)).collect::<Result<_, _>>()?;
    let mut header: Vec<String> = (1..=l).map(|k| format!("x{k}")).collect();
    header.push("inside".into());
    let rows: Vec<Vec<String>> = pts
        .iter()
        .zip(&inside)
        .map(|(x, &b)| {
            let mut r: Vec<String> = x.iter().map(|&v| fmt(v)).collect();
            r.push(if b { "1" } else { "0" }.into());
            r
        })
        .collect();
    em.csv(&header, &rows)?;
    let side = if l == 1 { pts.len() } else { (pts.len() as f64).sqrt().round() as usize };
    let comps = if l == 1 { components(&inside, 1, side) } else { components(&inside, side, side) };
    // complement components are bounded by the lattice points of the Newton polytope,
    // here by those of its bounding box
    let mut bound = 1usize;
    for k in 0..l {
        let e: Vec<i64> = p.terms().iter().map(|t| t.exp[k]).collect();
        bound *= (e.iter().max().unwrap() - e.iter().min().unwrap() + 1) as usize;
    }
    em.check(Check::flag("complement_components_bounded", comps <= bound));
    em.finish(json!({
        "samples": pts.len(),
        "insideCount": inside.iter().filter(|&&b| b).count(),
        "complementComponents": comps,
        "componentBound": bound,
    }))
}

fn legendre(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let tol = cfg.tolerance.unwrap_or(1e-10);
    let g = cfg.grid.unwrap_or(8);
    let samples = cfg.points.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(1);
    let v = cfg.a.unwrap_or(1.0);
    if !(v > 0.0) {
        return Err(CliError::Config(format!("field 'a': must be positive, got {v}")));
    }
    let mut quad_worst = 0.0f64;
    for b in linspace(-2.0, 2.0, g) {
        let sol = SplitMASolution::quadratic(DMatrix::from_element(1, 1, v), DMatrix::from_element(1, 1, b), DMatrix::from_element(1, 1, v))?;
        quad_worst = quad_worst.max((legendre::partial_legendre(&sol, &[0.3, -0.4])?.det - 1.0).abs());
    }
    em.check(Check::below("quadratic_det_hess_psi", quad_worst, tol));

    let ec = SplitMASolution::new(1, 1, |p| p[0].exp() * p[1].cos())
        .with_gradient(|p| vec![p[0].exp() * p[1].cos(), -p[0].exp() * p[1].sin()]);
    let ss = linspace(-1.0, 1.0, g);
    let ts = linspace(-1.2, 1.2, g);
    let cells: Vec<(f64, f64)> = ss.iter().flat_map(|&s| ts.iter().map(move |&t| (s, t))).collect();
    let rows: Vec<(f64, f64, Vec<f64>, f64, f64)> = cells
        .par_iter()
        .map(|&(s, t)| -> ghlab::Result<_> {
            let img = legendre::partial_legendre(&ec, &[s, t])?;
            let fd = psi_fd_det(&ec, &img.y, s)?;
            Ok((s, t, img.y, img.det, fd))
        })
        .collect::<Result<_, _>>()?;
    let fd_worst = rows.iter().map(|r| (r.4 - 1.0).abs()).fold(0.0, f64::max);
    em.check(Check::below("exp_cos_fd_det", fd_worst, 1e-6));
    let header: Vec<String> = ["s", "t", "y1", "y2", "det_hess_psi", "det_fd"].iter().map(|s| s.to_string()).collect();
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|r| vec![fmt(r.0), fmt(r.1), fmt(r.2[0]), fmt(r.2[1]), fmt(r.3), fmt(r.4)]).collect();
    em.csv(&header, &csv_rows)?;

    let sizes = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (1, 3), (2, 3), (3, 3)];
    let per = samples.div_ceil(sizes.len());
    let mut blocks = Vec::new();
    for (k, &(a, b)) in sizes.iter().enumerate() {
        blocks.push(legendre::block_identity_check(a, b, per, seed + k as u64)?);
    }
    let inv = blocks.iter().map(|r| r.max_inverse_error).fold(0.0, f64::max);
    let det = blocks.iter().map(|r| r.max_det_error).fold(0.0, f64::max);
    em.check(Check::below("block_inverse", inv, 1e-10));
    em.check(Check::below("block_determinant", det, 1e-10));
    em.finish(json!({ "quadraticScale": v, "blockReports": blocks }))
}

/// `det Hess Psi` at `y` by a Richardson-extrapolated central-difference Hessian.
fn psi_fd_det(sol: &SplitMASolution, y: &[f64], s0: f64) -> ghlab::Result<f64> {
    let psi = |q: &[f64]| legendre::psi_value(sol, q, &[s0]).map(|r| r.0);
    let plain = |h: f64| -> ghlab::Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                let at = |da: f64, db: f64| {
                    let mut q = y.to_vec();
                    q[a] += da;
                    q[b] += db;
                    psi(&q)
                };
                m[(a, b)] = (at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h);
            }
        }
        Ok(m)
    };
    let h = 1e-3;
    Ok(((plain(0.5 * h)? * 4.0 - plain(h)?) / 3.0).determinant())
}

fn holonomy(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let a = cfg.a.unwrap_or(1.0);
    let r = cfg.radius.unwrap_or(1.0);
    let k = cfg.grid.unwrap_or(64);
    let nodes = cfg.nodes.unwrap_or(8);
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let sol = legendre::singular_2d(Harmonic::constant(a), 2.0 * r)?;
    let around = PolygonLoop::circle([0.0, 0.0], r, k);
    let away = PolygonLoop::circle([1.5 * r, 0.0], 0.4 * r, k);
    let loops = vec![around.clone(), around.reversed(), away];
    let reps = legendre::beta_holonomy_many(&sol, &loops, nodes)?;
    em.check(Check::below("enclosing", reps[0].max_abs_error, tol));
    em.check(Check::below("reversed", reps[1].max_abs_error, tol));
    em.check(Check::below("non_enclosing", reps[2].max_abs_error, tol));
    let flip = reps[0]
        .holonomy_matrix
        .iter()
        .flatten()
        .zip(reps[1].holonomy_matrix.iter().flatten())
        .fold(0.0f64, |acc, (x, y)| acc.max((x + y).abs()));
    em.check(Check::below("orientation_flip", flip, tol));
    let m = legendre::monodromy_generator(&legendre::model_pair_2d(), 0, 1, 0, 1)?;
    let id = DMatrix::<i64>::identity(m.nrows(), m.ncols());
    let nil = &m - &id;
    em.check(Check::flag("monodromy_unipotent", (&nil * &nil).iter().all(|&v| v == 0)));
    let rows: Vec<Vec<String>> = reps
        .iter()
        .enumerate()
        .map(|(i, rep)| vec![i.to_string(), rep.windings[0].to_string(), fmt(rep.holonomy_matrix[1][0]), fmt(rep.expected_matrix[1][0]), fmt(rep.max_abs_error)])
        .collect();
    let header: Vec<String> = ["loop", "winding", "period", "expected", "abs_err"].iter().map(|s| s.to_string()).collect();
    em.csv(&header, &rows)?;
    let mono: Vec<Vec<i64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    em.finish(json!({ "a": a, "radius": r, "reports": reps, "monodromy": mono }))
}

fn decay(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let lambda = first_lambda(cfg);
    let modes = cfg.m.unwrap_or(5);
    let (r0, r1) = (cfg.r_min.unwrap_or(0.5), cfg.r_max.unwrap_or(3.0));
    let k = cfg.points.unwrap_or(16);
    let nodes = cfg.nodes.unwrap_or(128);
    let sol = OoguriVafa::builder(lambda, 40.max(modes), cfg.a.unwrap_or(1.0)).domain(r0.min(0.1), r1.max(2.0)).build()?;
    let pts: Vec<Vec<f64>> = if k < 2 { vec![vec![r0, 0.0]; k] } else { linspace(r0, r1, k).into_iter().map(|u| vec![u, 0.0]).collect() };
    let rep = decay::decay_fit(&sol, &pts, modes, lambda, nodes)?;
    for f in &rep.fits {
        let name = format!("mode{}_rate", f.m);
        em.check(if f.skipped { Check::flag(name, true) } else { Check::below(name, (f.rate - 1.0).abs(), 0.1) });
    }
    let rows: Vec<Vec<String>> = rep
        .rows()
        .iter()
        .map(|r| vec![r.m.to_string(), fmt(r.beta), fmt(r.abs_mode), fmt(r.log_abs_mode), fmt(r.fit_pred)])
        .collect();
    let header: Vec<String> = ["m", "beta", "abs_mode", "log_abs_mode", "fit_pred"].iter().map(|s| s.to_string()).collect();
    em.csv(&header, &rows)?;
    if cfg.svg.unwrap_or(false) {
        let series: Vec<Series> = rep
            .mode_indices
            .iter()
            .zip(&rep.magnitudes)
            .map(|(m, mags)| Series { label: format!("m={m}"), points: rep.betas.iter().copied().zip(mags.iter().copied()).collect() })
            .collect();
        em.svg(&series, &Axes { x_label: "beta".into(), y_label: "|V^m|".into(), y_log: true, title: "Fourier mode decay".into(), ..Axes::default() })?;
    }
    em.finish(serde_json::to_value(&rep).unwrap_or(Value::Null))
}

fn ring_grid() -> Vec<Vec<f64>> {
    let mut g = Vec::new();
    for i in 0..4 {
        let rho = 0.3 + 0.2 * i as f64;
        for k in 0..8 {
            let th = 2.0 * PI * k as f64 / 8.0 + 0.1;
            g.push(vec![rho * th.cos(), rho * th.sin()]);
        }
    }
    g
}

fn collapse(cfg: &RunConfig, mut em: Emitter) -> Result<bool, CliError> {
    let lambdas = cfg.lambda.clone().unwrap_or_else(|| vec![1.0, 5.0, 25.0]);
    let (rep, family) = match &cfg.poly {
        Some(_) => {
            let p = need_poly(cfg)?;
            let mut opts = RonkinOptions::new(cfg.nodes.unwrap_or(64), kappa(cfg)?);
            opts.tol = cfg.tolerance.unwrap_or(1e-9);
            let grid = range_points(cfg, p.nvars(), if p.nvars() == 1 { "-1:1:0.1" } else { "-1:1:0.25" })?;
            (decay::ronkin_collapse(&p, &lambdas, &grid, &opts)?, "ronkin")
        }
        None => {
            let a = cfg.a.unwrap_or(1.0);
            let m = cfg.m.unwrap_or(40);
            let limit = legendre::singular_2d(Harmonic::constant(a), 1.0)?;
            let family = move |lam: f64| -> ghlab::Result<Box<dyn PeriodicField + Send + Sync>> {
                Ok(Box::new(OoguriVafa::builder(lam, m, a).domain(0.1, 2.0 * lam.max(1.0)).build()?))
            };
            (decay::collapse_distance(&family, &limit, &lambdas, &ring_grid(), cfg.nodes.unwrap_or(128))?, "periodic")
        }
    };
    em.check(Check::flag("non_increasing", rep.non_increasing));
    for f in &rep.fiber_diameter {
        if f.lambda >= 10.0 && f.beta >= 1.0 {
            em.check(Check::flag(format!("fiber_ratio_lambda{}", f.lambda), (0.5..=2.0).contains(&f.ratio)));
        }
    }
    let header: Vec<String> = ["lambda", "sup_distance", "fiber_diameter", "fiber_ratio"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = rep
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let (d, r) = rep.fiber_diameter.get(i).map_or((String::new(), String::new()), |f| (fmt(f.rescaled), fmt(f.ratio)));
            vec![fmt(l), fmt(rep.sup_distance[i]), d, r]
        })
        .collect();
    em.csv(&header, &rows)?;
    if cfg.svg.unwrap_or(false) {
        let series = vec![Series { label: "sup distance".into(), points: rep.lambdas.iter().copied().zip(rep.sup_distance.iter().copied()).collect() }];
        em.svg(&series, &Axes { x_label: "lambda".into(), y_label: "distance".into(), x_log: true, title: format!("collapse ({family})"), ..Axes::default() })?;
    }
    em.finish(json!({ "family": family, "report": rep }))
}

//! Lattice simplices at affine distance one, dual pairs, their normal-cone
//! wall complexes, discriminant distances and weighted wall pairings.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intlin;
use crate::quad;

/// A lattice simplex in `Z^r`, with its affine-distance-one certificate if one exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeSimplex {
    vertices: Vec<Vec<i64>>,
    #[serde(skip)]
    certificate: Option<Vec<i64>>,
}

impl LatticeSimplex {
    pub fn new(vertices: Vec<Vec<i64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::DegenerateSimplex("no vertices".into()));
        }
        let r = vertices[0].len();
        if r == 0 {
            return Err(Error::InvalidInput("ambient rank must be positive".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != r) {
            return Err(Error::DimensionMismatch { expected: r, got: v.len() });
        }
        for a in 0..vertices.len() {
            for b in (a + 1)..vertices.len() {
                if vertices[a] == vertices[b] {
                    return Err(Error::DegenerateSimplex(format!("vertices {a} and {b} coincide")));
                }
            }
        }
        let diffs: Vec<Vec<i64>> = vertices[1..].iter().map(|v| intlin::sub(v, &vertices[0])).collect();
        if !diffs.is_empty() && intlin::rank(&diffs, r)? != diffs.len() {
            return Err(Error::DegenerateSimplex("vertices are affinely dependent".into()));
        }
        let certificate = intlin::solve(&vertices, r, &vec![1; vertices.len()])?;
        Ok(Self { vertices, certificate })
    }

    /// Parses `{"vertices": [[...], ...]}`.
    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            vertices: Vec<Vec<i64>>,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(raw.vertices)
    }

    /// Standard simplex `{e_0, ..., e_n}` in `Z^{n+1}`.
    pub fn standard(n: usize) -> Self {
        let vs = (0..=n)
            .map(|i| (0..=n).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::new(vs).expect("standard simplex is valid")
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn ambient_rank(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Integer `rho` with `<w_i, rho> = 1` for every vertex.
    pub fn certificate(&self) -> Option<&[i64]> {
        self.certificate.as_deref()
    }

    /// Canonical basis of the saturated lattice spanned by vertex differences.
    pub fn difference_basis(&self) -> Result<Vec<Vec<i64>>> {
        let diffs: Vec<Vec<i64>> = self.vertices[1..]
            .iter()
            .map(|v| intlin::sub(v, &self.vertices[0]))
            .collect();
        intlin::saturated_basis(&diffs, self.ambient_rank())
    }
}

/// Dual simplices `tau` in `N` and `sigma` in `N*` with `<v_i, w_j> = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualSimplexPair {
    pub tau: LatticeSimplex,
    pub sigma: LatticeSimplex,
    pub n: usize,
    pub l: usize,
    pub rho: Vec<i64>,
    pub pairing: Vec<Vec<i64>>,
}

pub fn validate_dual_pair(tau: LatticeSimplex, sigma: LatticeSimplex) -> Result<DualSimplexPair> {
    let (n, l) = (tau.dim(), sigma.dim());
    let r = tau.ambient_rank();
    if sigma.ambient_rank() != r {
        return Err(Error::DimensionMismatch { expected: r, got: sigma.ambient_rank() });
    }
    if r != n + l + 1 {
        return Err(Error::DimensionMismatch { expected: n + l + 1, got: r });
    }
    let rho = tau.certificate().ok_or(Error::NoCertificate)?.to_vec();
    let mut pairing = vec![vec![0; n + 1]; l + 1];
    for (i, v) in sigma.vertices().iter().enumerate() {
        for (j, w) in tau.vertices().iter().enumerate() {
            let value = intlin::dot(v, w);
            if value != 1 {
                return Err(Error::PairingViolation { i, j, value });
            }
            pairing[i][j] = value;
        }
    }
    Ok(DualSimplexPair { tau, sigma, n, l, rho, pairing })
}

impl DualSimplexPair {
    pub fn delta_w(&self, j1: usize, j2: usize) -> Vec<i64> {
        intlin::sub(&self.tau.vertices()[j2], &self.tau.vertices()[j1])
    }

    pub fn delta_v(&self, i1: usize, i2: usize) -> Vec<i64> {
        intlin::sub(&self.sigma.vertices()[i2], &self.sigma.vertices()[i1])
    }
}

/// One wall `{l_i = l_j >= l_k}` separating the normal cones of vertices `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Wall {
    pub i: usize,
    pub j: usize,
    /// Rows `a` with `a . u = 0`.
    pub eqs: Vec<Vec<i64>>,
    /// Rows `a` with `a . u >= 0`.
    pub ineqs: Vec<Vec<i64>>,
    /// Ambient lattice vector `w_i - w_j`.
    pub weight: Vec<i64>,
    /// The same weight in the chosen difference basis.
    pub weight_coords: Vec<i64>,
    /// Co-orientation: points from the cone of `i` into the cone of `j`.
    pub normal: Vec<f64>,
    pub orientation: i8,
}

impl Wall {
    /// The same wall seen from the other side: weight and orientation negate.
    pub fn reversed(&self) -> Wall {
        Wall {
            i: self.j,
            j: self.i,
            eqs: self.eqs.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
            ineqs: self.ineqs.clone(),
            weight: self.weight.iter().map(|v| -v).collect(),
            weight_coords: self.weight_coords.iter().map(|v| -v).collect(),
            normal: self.normal.iter().map(|v| -v).collect(),
            orientation: -self.orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WallComplex {
    pub walls: Vec<Wall>,
    pub ambient_dim: usize,
    /// Difference basis used for the quotient coordinates (ambient vectors).
    pub basis: Vec<Vec<i64>>,
}

/// Normal-cone wall arrangement of a simplex in the dual of its difference lattice,
/// using the canonical (HNF) basis of the saturated difference lattice.
pub fn wall_complex(simplex: &LatticeSimplex) -> Result<WallComplex> {
    let basis = simplex.difference_basis()?;
    WallComplex::with_basis(simplex, basis)
}

impl WallComplex {
    /// Wall complex in quotient coordinates relative to a caller-chosen basis,
    /// which must contain every vertex difference in its integer span.
    pub fn with_basis(simplex: &LatticeSimplex, basis: Vec<Vec<i64>>) -> Result<Self> {
        let d = simplex.dim();
        if basis.len() != d {
            return Err(Error::DegenerateSimplex(format!(
                "basis has {} vectors, simplex dimension is {d}",
                basis.len()
            )));
        }
        let r = simplex.ambient_rank();
        if basis.iter().any(|b| b.len() != r) {
            return Err(Error::DimensionMismatch { expected: r, got: basis[0].len() });
        }
        let vs = simplex.vertices();
        let bmat: Vec<Vec<i64>> = (0..r).map(|i| basis.iter().map(|b| b[i]).collect()).collect();
        let coords = |v: &[i64]| -> Result<Vec<i64>> {
            if d == 0 {
                return Ok(Vec::new());
            }
            intlin::solve(&bmat, d, v)?.ok_or_else(|| {
                Error::DegenerateSimplex("vertex difference outside the basis lattice".into())
            })
        };
        let c: Vec<Vec<i64>> = vs
            .iter()
            .map(|v| coords(&intlin::sub(v, &vs[0])))
            .collect::<Result<_>>()?;
        let mut walls = Vec::new();
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                let eq = intlin::sub(&c[i], &c[j]);
                let ineqs = (0..vs.len())
                    .filter(|&k| k != i && k != j)
                    .map(|k| intlin::sub(&c[i], &c[k]))
                    .collect();
                let nrm = eq.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
                walls.push(Wall {
                    i,
                    j,
                    eqs: vec![eq.clone()],
                    ineqs,
                    weight: intlin::sub(&vs[i], &vs[j]),
                    weight_coords: eq.clone(),
                    normal: eq.iter().map(|&v| -(v as f64) / nrm).collect(),
                    orientation: 1,
                });
            }
        }
        Ok(Self { walls, ambient_dim: d, basis })
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    /// Weight of the wall between cones `i` and `j`, in either order.
    pub fn weight(&self, i: usize, j: usize) -> Option<Vec<i64>> {
        self.walls.iter().find_map(|w| {
            if (w.i, w.j) == (i, j) {
                Some(w.weight.clone())
            } else if (w.j, w.i) == (i, j) {
                Some(w.reversed().weight)
            } else {
                None
            }
        })
    }

    /// Product with `R^k` (extra free coordinates appended).
    pub fn extrude(&self, k: usize) -> WallComplex {
        let pad = |r: &Vec<i64>| {
            let mut r = r.clone();
            r.extend(std::iter::repeat(0).take(k));
            r
        };
        let walls = self
            .walls
            .iter()
            .map(|w| {
                let mut normal = w.normal.clone();
                normal.extend(std::iter::repeat(0.0).take(k));
                Wall {
                    eqs: w.eqs.iter().map(pad).collect(),
                    ineqs: w.ineqs.iter().map(pad).collect(),
                    normal,
                    ..w.clone()
                }
            })
            .collect();
        WallComplex { walls, ambient_dim: self.ambient_dim + k, basis: self.basis.clone() }
    }

    /// Euclidean distance from `p` to the union of the walls (`+inf` if empty).
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.walls
            .iter()
            .map(|w| cone_distance(&w.eqs, &w.ineqs, p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wall complex serializes")
    }
}

fn to_f(rows: &[&Vec<i64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j] as f64)
}

/// Distance from `p` to the cone `{E u = 0, G u >= 0}` by enumerating active sets.
fn cone_distance(eqs: &[Vec<i64>], ineqs: &[Vec<i64>], p: &[f64]) -> f64 {
    let d = p.len();
    let pv = DVector::from_column_slice(p);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << ineqs.len()) {
        let mut rows: Vec<&Vec<i64>> = eqs.iter().collect();
        rows.extend(ineqs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, r)| r));
        let x = if rows.is_empty() {
            pv.clone()
        } else {
            let a = to_f(&rows, d);
            let gram = &a * a.transpose();
            let pinv = match gram.pseudo_inverse(1e-12) {
                Ok(m) => m,
                Err(_) => continue,
            };
            &pv - a.transpose() * (pinv * (&a * &pv))
        };
        let feasible = ineqs.iter().all(|g| {
            let s: f64 = g.iter().zip(x.iter()).map(|(&a, &b)| a as f64 * b).sum();
            s >= -1e-12 * (1.0 + x.norm())
        });
        if feasible {
            best = best.min((&x - &pv).norm());
        }
    }
    best
}

/// Distance from `(u, x)` to `Pi(tau) x Pi(sigma)`; `+inf` if either factor is empty.
pub fn distance_to_discriminant(u: &[f64], x: &[f64], pi_tau: &WallComplex, pi_sigma: &WallComplex) -> f64 {
    let dt = pi_tau.distance(u);
    let ds = pi_sigma.distance(x);
    if dt.is_infinite() || ds.is_infinite() {
        return f64::INFINITY;
    }
    dt.hypot(ds)
}

/// Axis-aligned box in `R^d`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Pairs a weighted wall complex with a `(d-1)`-form.
///
/// `form(p)` returns the `d` components of the form, component `k` being the
/// coefficient of `du_1 ^ .. ^ du_d` with `du_{k+1}` omitted. Only `d <= 2` is supported.
/// Returns `sum_walls weight * int_wall form` in ambient lattice coordinates.
pub fn pair_current<F>(complex: &WallComplex, form: F, region: &Region) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let d = complex.ambient_dim;
    if region.lo.len() != d || region.hi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: region.lo.len() });
    }
    let r = complex.basis.first().map_or(0, |b| b.len());
    let mut total = vec![0.0; r];
    for w in &complex.walls {
        let integral = match d {
            1 => {
                let inside = region.lo[0] <= 0.0 && 0.0 <= region.hi[0];
                if inside {
                    form(&[0.0])[0]
                } else {
                    0.0
                }
            }
            2 => wall_line_integral(w, &form, region)?,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "current pairing supports dimension <= 2, got {d}"
                )))
            }
        };
        for (t, &wt) in total.iter_mut().zip(&w.weight) {
            *t += wt as f64 * integral;
        }
    }
    Ok(total)
}

fn wall_line_integral<F>(w: &Wall, form: &F, region: &Region) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let e = &w.eqs[0];
    let len = ((e[0] * e[0] + e[1] * e[1]) as f64).sqrt();
    // tangent with det[normal, t] > 0
    let (nx, ny) = (w.normal[0], w.normal[1]);
    let t = [-ny, nx];
    debug_assert!((e[0] as f64 * t[0] + e[1] as f64 * t[1]).abs() < 1e-12 * len);
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
    for g in &w.ineqs {
        let s = g[0] as f64 * t[0] + g[1] as f64 * t[1];
        if s > 1e-14 {
            a = a.max(0.0);
        } else if s < -1e-14 {
            b = b.min(0.0);
        }
    }
    for k in 0..2 {
        if t[k].abs() < 1e-14 {
            if region.lo[k] > 0.0 || region.hi[k] < 0.0 {
                return Ok(0.0);
            }
            continue;
        }
        let (p, q) = (region.lo[k] / t[k], region.hi[k] / t[k]);
        a = a.max(p.min(q));
        b = b.min(p.max(q));
    }
    if a >= b {
        return Ok(0.0);
    }
    // pullback of the 1-form: c0 du_2 - ... component 0 omits du_1
    let pull = |s: f64| -> f64 {
        let p = [s * t[0], s * t[1]];
        let c = form(&p);
        c[1] * t[0] + c[0] * t[1]
    };
    if a.is_finite() && b.is_finite() {
        return Ok(quad::composite_gauss_legendre(&pull, a, b, 256, 8));
    }
    // unbounded: require decay, then integrate with s = tan(phi)
    for &sgn in &[-1.0, 1.0] {
        let s = sgn * 1e6;
        if s >= a && s <= b && pull(s).abs() * 1e6 > 1e-3 {
            {
                return Err(Error::QuadratureFailure("form does not decay along an unbounded wall".into()));
            }
        }
    }
    let pa = if a.is_finite() { a.atan() } else { -std::f64::consts::FRAC_PI_2 };
    let pb = if b.is_finite() { b.atan() } else { std::f64::consts::FRAC_PI_2 };
    let g = |phi: f64| {
        let c = phi.cos();
        if c.abs() < 1e-300 {
            0.0
        } else {
            pull(phi.tan()) / (c * c)
        }
    };
    Ok(quad::composite_gauss_legendre(&g, pa, pb, 256, 8))
}

//! Exact integer linear algebra on small dense matrices: column Hermite
//! normal form, integer solves and integer kernels.
//!
//! Matrices are row-major `Vec<Vec<i64>>`; intermediate work is done in
//! `i128` and converted back with overflow checks.

use crate::error::{Error, Result};

type Mat = Vec<Vec<i128>>;

fn widen(a: &[Vec<i64>]) -> Mat {
    a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect()
}

fn narrow(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::InvalidInput("integer overflow in lattice computation".into()))
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g >= 0.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Column operation: (c_p, c_j) <- (x c_p + y c_j, -b/g c_p + a/g c_j).
fn combine(m: &mut Mat, p: usize, j: usize, x: i128, y: i128, bg: i128, ag: i128) {
    for row in m.iter_mut() {
        let (cp, cj) = (row[p], row[j]);
        row[p] = x * cp + y * cj;
        row[j] = -bg * cp + ag * cj;
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn add_col(m: &mut Mat, dst: usize, src: usize, k: i128) {
    for row in m.iter_mut() {
        row[dst] += k * row[src];
    }
}

/// Column-style Hermite normal form `A U = H`.
///
/// `H` is lower echelon: pivot `k` sits in row `pivot_rows[k]`, is positive,
/// and entries to its left in that row are reduced into `[0, pivot)`.
/// Columns `rank..` of `H` are zero and the same columns of `U` span the
/// integer kernel of `A`.
#[derive(Debug, Clone)]
pub struct ColumnHnf {
    pub h: Vec<Vec<i64>>,
    pub u: Vec<Vec<i64>>,
    pub pivot_rows: Vec<usize>,
}

impl ColumnHnf {
    pub fn rank(&self) -> usize {
        self.pivot_rows.len()
    }
}

pub fn column_hnf(a: &[Vec<i64>], cols: usize) -> Result<ColumnHnf> {
    let rows = a.len();
    if a.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged integer matrix".into()));
    }
    let mut h = widen(a);
    let mut u: Mat = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut pivot_rows = Vec::new();
    let mut p = 0usize;
    for i in 0..rows {
        if p == cols {
            break;
        }
        for j in (p + 1)..cols {
            if h[i][j] == 0 {
                continue;
            }
            if h[i][p] == 0 {
                swap_cols(&mut h, p, j);
                swap_cols(&mut u, p, j);
                continue;
            }
            let (a0, b0) = (h[i][p], h[i][j]);
            let (g, x, y) = ext_gcd(a0, b0);
            let (ag, bg) = (a0 / g, b0 / g);
            combine(&mut h, p, j, x, y, bg, ag);
            combine(&mut u, p, j, x, y, bg, ag);
        }
        if h[i][p] == 0 {
            continue;
        }
        if h[i][p] < 0 {
            for row in h.iter_mut() {
                row[p] = -row[p];
            }
            for row in u.iter_mut() {
                row[p] = -row[p];
            }
        }
        let piv = h[i][p];
        for j in 0..p {
            let q = h[i][j].div_euclid(piv);
            if q != 0 {
                add_col(&mut h, j, p, -q);
                add_col(&mut u, j, p, -q);
            }
        }
        pivot_rows.push(i);
        p += 1;
    }
    let conv = |m: Mat| -> Result<Vec<Vec<i64>>> {
        m.into_iter()
            .map(|r| r.into_iter().map(narrow).collect())
            .collect()
    };
    Ok(ColumnHnf { h: conv(h)?, u: conv(u)?, pivot_rows })
}

/// Rank over the rationals.
pub fn rank(a: &[Vec<i64>], cols: usize) -> Result<usize> {
    Ok(column_hnf(a, cols)?.rank())
}

/// An integer solution of `A x = b` (free variables set to zero), or `None`.
pub fn solve(a: &[Vec<i64>], cols: usize, b: &[i64]) -> Result<Option<Vec<i64>>> {
    if b.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let f = column_hnf(a, cols)?;
    let mut y = vec![0i128; cols];
    for (k, &row) in f.pivot_rows.iter().enumerate() {
        let mut acc = b[row] as i128;
        for j in 0..k {
            acc -= f.h[row][j] as i128 * y[j];
        }
        let piv = f.h[row][k] as i128;
        if acc % piv != 0 {
            return Ok(None);
        }
        y[k] = acc / piv;
    }
    for (row, hr) in f.h.iter().enumerate() {
        let lhs: i128 = hr.iter().zip(&y).map(|(&h, &v)| h as i128 * v).sum();
        if lhs != b[row] as i128 {
            return Ok(None);
        }
    }
    let x: Vec<i64> = (0..cols)
        .map(|i| narrow(f.u[i].iter().zip(&y).map(|(&u, &v)| u as i128 * v).sum()))
        .collect::<Result<_>>()?;
    Ok(Some(x))
}

/// Canonical basis (reduced column HNF) of the lattice spanned by `vectors`,
/// all of length `dim`. Zero vectors and dependencies are removed.
pub fn lattice_basis(vectors: &[Vec<i64>], dim: usize) -> Result<Vec<Vec<i64>>> {
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidInput("vectors of unequal length".into()));
    }
    let a: Vec<Vec<i64>> = (0..dim)
        .map(|i| vectors.iter().map(|v| v[i]).collect())
        .collect();
    let f = column_hnf(&a, vectors.len())?;
    Ok((0..f.rank())
        .map(|k| (0..dim).map(|i| f.h[i][k]).collect())
        .collect())
}

/// Canonical basis of the integer kernel `{x in Z^cols : A x = 0}`.
pub fn kernel(a: &[Vec<i64>], cols: usize) -> Result<Vec<Vec<i64>>> {
    let f = column_hnf(a, cols)?;
    let raw: Vec<Vec<i64>> = (f.rank()..cols)
        .map(|k| (0..cols).map(|i| f.u[i][k]).collect())
        .collect();
    if raw.is_empty() {
        return Ok(raw);
    }
    lattice_basis(&raw, cols)
}

/// Basis of the saturation `(span L) ∩ Z^dim` of the lattice spanned by `vectors`.
pub fn saturated_basis(vectors: &[Vec<i64>], dim: usize) -> Result<Vec<Vec<i64>>> {
    if vectors.iter().all(|v| v.iter().all(|&c| c == 0)) {
        return Ok(Vec::new());
    }
    // annihilator of the span, then its annihilator
    let ann = kernel(vectors, dim)?;
    if ann.is_empty() {
        return lattice_basis(
            &(0..dim)
                .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
                .collect::<Vec<_>>(),
            dim,
        );
    }
    kernel(&ann, dim)
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

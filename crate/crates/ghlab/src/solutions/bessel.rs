//! Modified Bessel function of the second kind, order zero.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K_0(x)` for `x > 0`.
///
/// Power series with the `-log(x/2) I_0` term below 2; above, Steed's
/// continued fraction (Temme's form of CF2 at order zero).
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonpositiveArgument(x));
    }
    Ok(if x < 2.0 { k0_series(x) } else { k0_cf2(x).0 })
}

/// `K_1(x) = -K_0'(x)` for `x > 0`, by the same two branches.
pub fn bessel_k1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonpositiveArgument(x));
    }
    Ok(if x < 2.0 { k1_series(x) } else { k0_cf2(x).1 })
}

fn k1_series(x: f64) -> f64 {
    // K_1 = 1/x + log(x/2) I_1 - (x/4) sum (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i1 = 1.0;
    let mut hk = 0.0;
    let mut rest = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        i1 += term;
        let psi_sum = 2.0 * hk + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA;
        rest += term * psi_sum;
        if term * psi_sum.abs() < 1e-18 * rest.abs().max(1.0) {
            break;
        }
    }
    1.0 / x + (0.5 * x).ln() * 0.5 * x * i1 - 0.25 * x * rest
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut rest = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        rest += term * harmonic;
        if term * harmonic < 1e-18 * rest.abs().max(1.0) {
            break;
        }
    }
    -((0.5 * x).ln() + EULER_GAMMA) * i0 + rest
}

/// `(K_0, K_1)` by Steed's continued fraction.
fn k0_cf2(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    (k0, k0 * (x + 0.5 - a1 * h) / x)
}

/// Leading terms of the large-argument expansion
/// `sqrt(pi / 2x) e^{-x} sum_k a_k x^{-k}`, with `a_k = prod_j (-(2j-1)^2) / (k! 8^k)`.
pub fn k0_asymptotic(x: f64, terms: usize) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonpositiveArgument(x));
    }
    let mut sum = 0.0;
    let mut a = 1.0;
    for k in 0..terms {
        if k > 0 {
            let j = k as f64;
            a *= -(2.0 * j - 1.0).powi(2) / (j * 8.0 * x);
        }
        sum += a;
    }
    Ok((PI / (2.0 * x)).sqrt() * (-x).exp() * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_agree_at_switch() {
        let s = k0_series(2.0);
        let c = k0_cf2(2.0);
        assert!((s - c.0).abs() < 1e-14 * s);
        assert!((k1_series(2.0) - c.1).abs() < 1e-14 * c.1);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
    }
}

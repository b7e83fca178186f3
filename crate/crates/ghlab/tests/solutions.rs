use std::f64::consts::PI;

use ghlab::fd::FdConfig;
use ghlab::gh::{self, GhSolution, PotentialField};
use ghlab::solutions::*;
use ghlab::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `int_0^inf cosh(k t)^p e^{-x cosh t} dt` by the trapezoid rule, halving the step
/// until two estimates agree; exponentially convergent for this integrand.
fn k_integral(x: f64, with_cosh: bool) -> f64 {
    let f = |t: f64| {
        let c = t.cosh();
        (if with_cosh { c } else { 1.0 }) * (-x * c).exp()
    };
    let upper = ((50.0 + x.ln().abs()) / x).acosh().max(1.0) + 2.0;
    let mut h = 0.25;
    let mut prev = f64::NAN;
    loop {
        let n = (upper / h).ceil() as usize;
        let s = h * (0.5 * f(0.0) + (1..=n).map(|k| f(k as f64 * h)).sum::<f64>());
        if (s - prev).abs() <= 1e-15 * s {
            return s;
        }
        prev = s;
        h *= 0.5;
    }
}

fn c1(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn k0_matches_integral_oracle() {
    let mut worst = 0.0f64;
    let mut x = 0.05;
    while x <= 30.0 {
        let k = bessel_k0(x).unwrap();
        let o = k_integral(x, false);
        worst = worst.max((k - o).abs() / o);
        x *= 1.07;
    }
    for x in [0.05, 1.999_999, 2.0, 2.000_001, 30.0] {
        let o = k_integral(x, false);
        worst = worst.max((bessel_k0(x).unwrap() - o).abs() / o);
    }
    assert!(worst < 1e-10, "max relative error {worst:e}");
}

#[test]
fn k1_matches_integral_oracle() {
    for x in [0.05, 0.4, 1.0, 1.9, 2.1, 7.0, 25.0] {
        let o = k_integral(x, true);
        let k = bessel_k1(x).unwrap();
        assert!((k - o).abs() < 1e-10 * o, "x = {x}: {k} vs {o}");
    }
}

#[test]
fn k0_reference_values() {
    // frozen from the trapezoid oracle above
    assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-9);
    assert!((k_integral(1.0, false) - 0.421_024_438_240_708_3).abs() < 1e-14);
    let x = 10.0;
    let ratio = bessel_k0(x).unwrap() / ((PI / (2.0 * x)).sqrt() * (-x).exp());
    assert!((0.9..=1.0).contains(&ratio), "ratio {ratio}");
    let x = 1e-4;
    // K_0(x) = -log(x/2) - gamma + O(x^2 log x)
    assert!((bessel_k0(x).unwrap() + (x / 2.0).ln() + EULER_GAMMA).abs() < 1e-6);
}

#[test]
fn k0_asymptotic_series_tracks_k0() {
    for x in [8.0, 12.0, 20.0] {
        let k = bessel_k0(x).unwrap();
        let errs: Vec<f64> = [1, 2, 4, 8].iter().map(|&t| (k0_asymptotic(x, t).unwrap() - k).abs() / k).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "x = {x}: {errs:?}");
        assert!(errs[3] < 1e-6);
    }
    assert!(matches!(k0_asymptotic(-1.0, 3), Err(Error::NonpositiveArgument(_))));
    assert!(matches!(bessel_k0(0.0), Err(Error::NonpositiveArgument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k0_positive_decreasing_log_convex(x in 0.05f64..29.0, h in 0.01f64..0.3) {
        let (a, b, c) = (bessel_k0(x).unwrap(), bessel_k0(x + h).unwrap(), bessel_k0(x + 2.0 * h).unwrap());
        prop_assert!(a > 0.0 && b > 0.0 && c > 0.0);
        prop_assert!(b < a && c < b);
        prop_assert!(c.ln() - 2.0 * b.ln() + a.ln() >= -1e-9);
    }
}

#[test]
fn flat_examples() {
    let s = flat_solution(1, &[c1(1.0), c1(1.0)]).unwrap();
    assert_eq!(s.u, vec![0.0]);
    assert!((s.eta - c1(1.0)).norm() < 1e-15);
    assert!((s.v[(0, 0)] - 0.5).abs() < 1e-15 && (s.w[(0, 0)].re - 0.5).abs() < 1e-15);

    let s = flat_solution(1, &[c1(1.0), c1(2.0)]).unwrap();
    assert_eq!(s.u, vec![1.5]);
    assert!((s.eta - c1(2.0)).norm() < 1e-15);
    assert!((s.v[(0, 0)] - 0.2).abs() < 1e-15 && (s.w[(0, 0)].re - 0.2).abs() < 1e-15);

    // the base-point evaluator inverts the moment map
    let sol = FlatToric::new(1).unwrap();
    let v = sol.v(&s.point).unwrap();
    assert!((v[(0, 0)] - 0.2).abs() < 1e-14);
}

#[test]
fn flat_rejects_discriminant_and_bad_n() {
    let z = [c1(0.0), c1(1e-9), c1(3.0)];
    assert!(matches!(flat_solution(2, &z), Err(Error::OnDiscriminant)));
    assert!(matches!(flat_solution(1, &[c1(0.0), c1(0.0)]), Err(Error::OnDiscriminant)));
    assert!(flat_solution(3, &[c1(1.0); 4]).is_err());
    assert!(matches!(flat_solution(1, &[c1(1.0)]), Err(Error::DimensionMismatch { .. })));
    // a single vanishing coordinate is fine
    assert!(flat_solution(2, &[c1(0.0), c1(1.0), c1(2.0)]).is_ok());
    assert!(matches!(FlatToric::new(1).unwrap().v(&[0.0, 0.0, 0.0]), Err(Error::OnDiscriminant)));
}

fn random_z(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Complex64> {
    (0..=n).map(|_| Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..2.0 * PI))).collect()
}

#[test]
fn flat_n2_determinants_agree_on_torus() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sol = FlatToric::new(2).unwrap();
    for _ in 0..1000 {
        let z: Vec<Complex64> = (0..3).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect();
        let s = flat_solution(2, &z).unwrap();
        assert!((s.v.determinant() - s.w[(0, 0)].re).abs() < 1e-12);
        // the base-point evaluator (Newton solve for |z_0|^2) agrees with the z-side formulas
        let v = sol.v(&s.point).unwrap();
        assert!((&v - &s.v).abs().max() < 1e-12);
    }
}

/// `A_j - d theta_j = -W |z_0 .. z_n / z_j|^2 d arg(eta)` as a real covector on `(u, x, y)`.
fn closed_form_connection(z: &[Complex64], j: usize, w: f64, n: usize) -> Vec<f64> {
    let eta: Complex64 = z.iter().product();
    let c = -w * (eta / z[j]).norm_sqr() / eta.norm_sqr();
    let mut a = vec![0.0; n + 2];
    a[n] = -c * eta.im;
    a[n + 1] = c * eta.re;
    a
}

#[test]
fn flat_connection_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2] {
        let sol = FlatToric::new(n).unwrap();
        for _ in 0..200 {
            let z = random_z(&mut rng, n, 0.5, 2.0);
            let s = flat_solution(n, &z).unwrap();
            let a = gh::connection_real(&sol, &s.point).unwrap();
            for j in 0..n {
                let o = closed_form_connection(&z, j + 1, s.w[(0, 0)].re, n);
                for k in 0..n + 2 {
                    assert!((a[(j, k)] - o[k]).abs() < 1e-12, "n={n} j={j} k={k}");
                }
            }
        }
    }
}

#[test]
fn flat_connection_coefficients() {
    let s = flat_solution(1, &[c1(1.0), c1(1.0)]).unwrap();
    // W |z_0|^2 = 1/2 in front of d arg(eta) = dy at eta = 1
    assert!((s.connection.deta[(0, 0)] - Complex64::new(0.0, 0.25)).norm() < 1e-15);
    assert!((s.connection.detabar[(0, 0)] - Complex64::new(0.0, -0.25)).norm() < 1e-15);
    let s = flat_solution(1, &[c1(1.0), c1(2.0)]).unwrap();
    let (c, cb) = (s.connection.deta[(0, 0)], s.connection.detabar[(0, 0)]);
    assert!((cb - c.conj()).norm() < 1e-15);
}

#[test]
fn flat_curvature_is_derivative_of_connection() {
    let cfg = FdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2] {
        let sol = FlatToric::new(n).unwrap();
        for _ in 0..10 {
            let p = flat_solution(n, &random_z(&mut rng, n, 0.6, 1.8)).unwrap().point;
            let d = p.len();
            let curv = gh::curvature(&sol, &p, &cfg).unwrap();
            let da: Vec<Vec<f64>> = (0..d)
                .map(|k| {
                    ghlab::fd::partial(|q| gh::connection_real(&sol, q).map(|m| m.iter().copied().collect()), &p, k, &cfg)
                        .unwrap()
                        .value
                })
                .collect();
            for j in 0..n {
                for a in 0..d {
                    for b in 0..d {
                        // column-major (j, b) entry of the n x d covector table
                        let dadb = da[a][b * n + j] - da[b][a * n + j];
                        assert!((dadb - curv.real[j][(a, b)]).abs() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn taub_nut_examples() {
    let t = taub_nut(2.0, 0.0).unwrap();
    assert_eq!(t.value(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
    let t = taub_nut(1.0, 1.0).unwrap();
    assert_eq!(t.value(&[0.0, 1.0, 0.0]).unwrap(), 1.5);
    assert_eq!(t.v(&[0.0, 1.0, 0.0]).unwrap()[(0, 0)], t.w(&[0.0, 1.0, 0.0]).unwrap()[(0, 0)].re);
    assert!(taub_nut(0.0, 1.0).is_err());
    assert!(taub_nut(1.0, -1.0).is_err());
    assert!(matches!(t.value(&[0.0, 0.0, 0.0]), Err(Error::DomainViolation(_))));
}

#[test]
fn taub_nut_harmonic_on_annulus() {
    let t = taub_nut(1.7, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = FdConfig::new(1e-3, 2);
    for k in 0..1000 {
        let r = rng.gen_range(0.5..2.0);
        let (th, ph): (f64, f64) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let p = [r * th.cos(), r * th.sin() * ph.cos(), r * th.sin() * ph.sin()];
        assert!(t.laplacian(&p).unwrap().abs() < 1e-8);
        if k % 50 == 0 {
            // closed-form second derivatives against differences of the value
            let d2 = t.second_diagonal(&p).unwrap();
            for i in 0..3 {
                let fd = ghlab::fd::second_scalar(&|q: &[f64]| t.value(q).unwrap(), &p, i, i, &cfg);
                assert!((fd - d2[i]).abs() < 1e-6 * d2[i].abs().max(1.0));
            }
        }
    }
}

#[test]
fn taub_nut_radial_trend() {
    let t = taub_nut(1.0, 0.7).unwrap();
    let vals: Vec<f64> = [0.5, 1.0, 2.0, 10.0, 1e3, 1e6].iter().map(|&r| t.value(&[r, 0.0, 0.0]).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
    assert!((vals[5] - 0.7).abs() < 1e-6);
}

#[test]
fn semiflat_quadratic_and_concave() {
    let psi = PotentialField::new(2, 0, |p: &[f64]| 0.5 * (p[0] * p[0] + p[1] * p[1]));
    let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64 * 0.3, -0.2]).collect();
    let s = semiflat(psi, &pts).unwrap();
    let v = s.v(&[0.4, 0.1]).unwrap();
    assert!((v - DMatrix::identity(2, 2)).abs().max() < 1e-8);
    let rep = gh::verify_compat(&s, &pts, "line", 1e-8).unwrap();
    assert!(rep.pass, "{rep:?}");

    let bad = PotentialField::new(1, 0, |p: &[f64]| -p[0] * p[0]);
    assert!(matches!(semiflat(bad, &[vec![0.0]]), Err(Error::NotConvex(_))));
    let wrong_l = PotentialField::new(1, 1, |p: &[f64]| p[0] * p[0]);
    assert!(semiflat(wrong_l, &[]).is_err());
}

#[test]
fn ov_mode_examples() {
    let ov = ooguri_vafa(1.0, 40, 1.0).unwrap();
    assert!((ov.mode(0, 1.0).unwrap() - c1(1.0)).norm() < 1e-15);
    let m2 = ov.mode(2, 1.5).unwrap();
    assert!((m2.re - k_integral(3.0, false) / (2.0 * PI)).abs() < 1e-12 && m2.im == 0.0);
    assert_eq!(ov.mode(41, 1.0).unwrap(), c1(0.0));
}

#[test]
fn ov_helmholtz_residuals() {
    let ov = ooguri_vafa(2.0, 40, 1.0).unwrap();
    for m in -10i64..=10 {
        for r in [0.1, 0.25, 0.5, 1.0, 2.5] {
            let res = ov.helmholtz_residual(m, r).unwrap();
            assert!(res < 1e-8, "m={m} r={r} residual {res:e}");
        }
    }
}

#[test]
fn ov_reality_and_y_average() {
    let coefs: Vec<Complex64> = (1..=6).map(|m| Complex64::new(1.0 / m as f64, 0.3 * (m as f64).sin())).collect();
    let ov = OoguriVafa::builder(3.0, 6, 2.0).coefficients(coefs).build().unwrap();
    for m in 1..=6 {
        let a = ov.mode(m, 0.7).unwrap();
        let b = ov.mode(-m, 0.7).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
    }
    for (u, x) in [(0.3, 0.4), (1.0, -0.2)] {
        let avg = ov.y_average(u, x, 64).unwrap();
        let v0 = ov.mode(0, ov.radius(u, x)).unwrap().re;
        assert!((avg - v0).abs() < 1e-12);
    }
    // synthesis from the modes reproduces the field
    let (r, y) = (0.8, 1.1);
    let synth: Complex64 = (-6i64..=6).map(|m| ov.mode(m, r).unwrap() * Complex64::from_polar(1.0, m as f64 * y)).sum();
    assert!((synth.re - ov.value_ry(r, y).unwrap()).abs() < 1e-13 && synth.im.abs() < 1e-13);
}

#[test]
fn ov_positivity_is_enforced() {
    assert!(matches!(ooguri_vafa(1.0, 10, -1.0), Err(Error::NotPositive(_))));
    assert!(matches!(OoguriVafa::builder(1.0, 10, 0.2).domain(0.1, 20.0).build(), Err(Error::NotPositive(_))));
    assert!(ooguri_vafa(1.0, 0, 1.0).is_err());
    assert!(ooguri_vafa(0.0, 3, 1.0).is_err());
}

#[test]
fn ov_complete_sum_matches_reference() {
    // unit-coefficient mode sums evaluated to 30 digits by direct summation of K_0 modes
    let reference = [
        (0.5, 0.3, 1.546_361_245_266_770_3),
        (1.0, 2.0, 0.929_966_859_999_657_5),
        (0.2, -3.0, 0.909_674_358_641_614_7),
        (1.5, 1.0, 0.965_402_282_660_693_5),
    ];
    let ov = OoguriVafa::builder(1.0, 40, 1.0).mode_sum(ModeSum::Complete).build().unwrap();
    for (r, y, v) in reference {
        assert!((ov.value_ry(r, y).unwrap() - v).abs() < 1e-11, "r={r} y={y}");
        // periodicity in y
        assert!((ov.value_ry(r, y + 2.0 * PI).unwrap() - v).abs() < 1e-11);
    }
    let tr = ooguri_vafa(1.0, 60, 1.0).unwrap();
    for (r, y) in [(0.5, 0.1), (0.9, -2.5), (1.7, 3.0)] {
        assert!((tr.value_ry(r, y).unwrap() - ov.value_ry(r, y).unwrap()).abs() < 1e-10);
        let (g1, g2) = (tr.gradient_ry(r, y).unwrap(), ov.gradient_ry(r, y).unwrap());
        assert!((g1[0] - g2[0]).abs() < 1e-9 && (g1[1] - g2[1]).abs() < 1e-9);
    }
    assert!(OoguriVafa::builder(1.0, 2, 1.0)
        .coefficients(vec![c1(1.0), c1(0.5)])
        .mode_sum(ModeSum::Complete)
        .build()
        .is_err());
}

#[test]
fn ov_flux_complete_sum() {
    let ov = OoguriVafa::builder(1.0, 40, 1.0).mode_sum(ModeSum::Complete).build().unwrap();
    let f3 = ov_total_flux(&ov, 0.3).unwrap();
    let f5 = ov_total_flux(&ov, 0.5).unwrap();
    assert!((f3 + 2.0 * PI).abs() < 1e-8 * 2.0 * PI);
    assert!((f3 - f5).abs() < 0.005 * f3.abs());
    let off = ov_flux_through(&ov, [1.5, 0.0, 0.0], 0.5).unwrap();
    assert!(off.abs() < 1e-4);
    assert!(matches!(ov_flux_through(&ov, [0.3, 0.0, 0.0], 0.3), Err(Error::QuadratureFailure(_))));
}

#[test]
fn ov_flux_truncated_follows_dirichlet_kernel() {
    // with |m| <= M the source is the Dirichlet kernel in y, so the enclosed charge is
    // -(2R + 4 sum_{m<=M} sin(m R)/m)
    let ov = ooguri_vafa(1.0, 40, 1.0).unwrap();
    for r in [0.3, 0.5, 1.0] {
        let expect = -(2.0 * r + 4.0 * (1..=40).map(|m| (m as f64 * r).sin() / m as f64).sum::<f64>());
        let f = ov_total_flux(&ov, r).unwrap();
        assert!((f - expect).abs() < 1e-4, "R={r}: {f} vs {expect}");
    }
}

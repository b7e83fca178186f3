use std::f64::consts::PI;

use ghlab::decay::*;
use ghlab::gh::PotentialField;
use ghlab::legendre::{singular_2d, Harmonic};
use ghlab::solutions::{ooguri_vafa, semiflat, ModeSum, OoguriVafa};
use ghlab::tropical::{Kappa, LaurentPoly, RonkinOptions};
use ghlab::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn cos_field() -> FnField<impl Fn(&[f64], f64) -> f64 + Sync, impl Fn(&[f64]) -> f64 + Sync> {
    FnField::new(|_b: &[f64], y: f64| y.cos(), |_b: &[f64]| 1.0)
}

#[test]
fn fourier_examples() {
    let v = fourier_modes(&cos_field(), &[0.0], 3, 16).unwrap();
    for (k, c) in v.iter().enumerate() {
        let m = k as i64 - 3;
        let expect = if m.abs() == 1 { 0.5 } else { 0.0 };
        assert!((c.re - expect).abs() < 1e-15 && c.im.abs() < 1e-15, "m = {m}: {c}");
    }
    let flat = FnField::new(|b: &[f64], _y: f64| 2.0 + b[0], |_b: &[f64]| 1.0);
    let v = fourier_modes(&flat, &[0.5], 4, 32).unwrap();
    assert!((v[4].re - 2.5).abs() < 1e-15);
    assert!(v.iter().enumerate().filter(|(k, _)| *k != 4).all(|(_, c)| c.norm() < 1e-15));
}

#[test]
fn fourier_recovers_ooguri_vafa_coefficients() {
    let c: Vec<Complex64> = (1..=12).map(|m| Complex64::from_polar(1.0 / m as f64, 0.7 * m as f64)).collect();
    let ov = OoguriVafa::builder(3.0, 12, 1.0).coefficients(c).source(0.2, -0.1).build().unwrap();
    for base in [[0.9, 0.4], [-0.3, 1.2], [0.25, -0.1]] {
        let v = fourier_modes(&ov, &base, 12, 64).unwrap();
        let r = ov.radius(base[0], base[1]);
        for m in -12i64..=12 {
            let expect = ov.mode(m, r).unwrap();
            assert!((v[(m + 12) as usize] - expect).norm() < 1e-10, "m = {m}");
        }
    }
}

#[test]
fn fourier_errors() {
    let ov = OoguriVafa::builder(1.0, 1, 1.0).mode_sum(ModeSum::Complete).build().unwrap();
    assert!(matches!(fourier_modes(&ov, &[0.2, 0.0], 2, 16), Err(Error::AliasingDetected(_))));
    assert!(fourier_modes(&ov, &[0.2, 0.0], 2, 256).is_ok());
    assert!(matches!(fourier_modes(&cos_field(), &[0.0], 8, 16), Err(Error::InvalidInput(_))));
}

fn radial_grid(lo: f64, hi: f64, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| vec![lo + (hi - lo) * i as f64 / (k - 1) as f64, 0.0]).collect()
}

#[test]
fn ooguri_vafa_decay_slopes() {
    let ov = ooguri_vafa(1.0, 40, 1.0).unwrap();
    let wide = decay_fit(&ov, &radial_grid(0.5, 3.0, 16), 5, 1.0, 128).unwrap();
    assert!(wide.pass(), "{:?}", wide.fits);
    for f in &wide.fits {
        assert!((f.rate - 1.0).abs() < 0.1 && f.residual < 0.1);
    }
    // least-squares slopes of log K0(m r) on (1, -m r, log(m r)), 16 equispaced r, from scipy
    let frozen = [
        (0.5, 3.0, 1, 1.0287657443588276),
        (0.5, 3.0, 5, 1.0022336707090136),
        (2.0, 4.0, 1, 1.009172318809684),
        (0.5, 1.0, 1, 1.0674846754508884),
    ];
    for (lo, hi, m, slope) in frozen {
        let rep = decay_fit(&ov, &radial_grid(lo, hi, 16), 5, 1.0, 128).unwrap();
        let got = rep.fits[m - 1].rate;
        assert!((got - slope).abs() < 1e-6, "[{lo}, {hi}] m = {m}: {got} vs {slope}");
    }
    let outer = decay_fit(&ov, &radial_grid(2.0, 4.0, 16), 5, 1.0, 128).unwrap();
    let inner = decay_fit(&ov, &radial_grid(0.5, 1.0, 16), 5, 1.0, 128).unwrap();
    for (o, i) in outer.fits.iter().zip(&inner.fits) {
        assert!((o.rate - 1.0).abs() < (i.rate - 1.0).abs(), "m = {}", o.m);
    }
}

#[test]
fn synthetic_rate_two_recovered() {
    let field = SyntheticField { rate: 2.0, m_max: 6 };
    let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.3 + 0.1 * i as f64, 0.05 * i as f64]).collect();
    let rep = decay_fit(&field, &pts, 5, 1.0, 64).unwrap();
    for f in &rep.fits {
        assert!((f.rate - 2.0).abs() < 1e-9, "{f:?}");
        assert!(f.power.abs() < 1e-8 && (f.c - 1.0).abs() < 1e-8);
        assert!(!f.pass);
    }
    let rows = rep.rows();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| (r.fit_pred - r.log_abs_mode).abs() < 1e-8));
}

#[test]
fn semiflat_modes_skipped() {
    let pot = PotentialField::new(1, 0, |p| 0.5 * p[0] * p[0]);
    let sf = semiflat(pot, &[vec![0.0]]).unwrap();
    let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let rep = decay_fit(&sf, &pts, 3, 1.0, 32).unwrap();
    assert!(rep.pass());
    assert!(rep.fits.iter().all(|f| f.skipped));
    assert!(rep.magnitudes.iter().flatten().all(|&a| a < 1e-12));
}

#[test]
fn decay_errors() {
    let ov = ooguri_vafa(1.0, 40, 1.0).unwrap();
    assert!(matches!(
        decay_fit(&ov, &radial_grid(0.5, 3.0, 7), 3, 1.0, 128),
        Err(Error::InsufficientPoints { got: 7, needed: 8 })
    ));
    assert!(matches!(decay_fit(&ov, &radial_grid(0.1, 3.0, 10), 3, 1.0, 128), Err(Error::DomainViolation(_))));
}

#[test]
fn decay_report_json() {
    let rep = decay_fit(&SyntheticField { rate: 1.0, m_max: 2 }, &radial_grid(0.5, 2.0, 8), 2, 1.0, 16).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    for key in ["lambda", "modeIndices", "magnitudes", "fits", "betas"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(json["fits"][0].get("pass").is_some());
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

fn ov_family(lam: f64) -> ghlab::Result<Box<dyn PeriodicField + Send + Sync>> {
    Ok(Box::new(OoguriVafa::builder(lam, 40, 1.0).domain(0.1, 2.0 * lam.max(1.0)).build()?))
}

#[test]
fn collapse_of_ooguri_vafa_family() {
    let limit = singular_2d(Harmonic::constant(1.0), 1.0).unwrap();
    let rep = collapse_distance(&ov_family, &limit, &[1.0, 5.0, 25.0], &ring_grid(), 128).unwrap();
    assert!(rep.sup_distance.iter().all(|&d| d < 1e-12), "{:?}", rep.sup_distance);
    assert!(rep.non_increasing);
    assert_eq!(rep.fiber_diameter.len(), 3);
}

#[test]
fn collapse_of_perturbed_family() {
    let limit = singular_2d(Harmonic::constant(1.0), 1.0).unwrap();
    let family = |lam: f64| -> ghlab::Result<Box<dyn PeriodicField + Send + Sync>> {
        Ok(Box::new(FnField::new(
            move |b: &[f64], y: f64| {
                let rho = b[0].hypot(b[1]) / lam;
                1.0 - rho.ln() / (2.0 * PI) + (-(rho * rho)).exp() / lam + 0.01 * y.sin()
            },
            |b: &[f64]| b[0].hypot(b[1]),
        )))
    };
    let lams = [1.0, 2.0, 4.0, 8.0];
    let rep = collapse_distance(&family, &limit, &lams, &ring_grid(), 32).unwrap();
    // sup of exp(-rho^2)/lambda on the grid is attained at rho = 0.3
    let peak = (-0.09f64).exp();
    for (d, l) in rep.sup_distance.iter().zip(&lams) {
        assert!((d * l - peak).abs() < 1e-12, "{d}");
    }
    assert!(rep.strictly_decreasing);
}

#[test]
fn collapse_errors() {
    let limit = singular_2d(Harmonic::constant(1.0), 1.0).unwrap();
    let near = vec![vec![0.1, 0.05]];
    assert!(matches!(collapse_distance(&ov_family, &limit, &[1.0], &near, 128), Err(Error::DomainViolation(_))));
    assert!(matches!(
        collapse_distance(&ov_family, &limit, &[5.0, 1.0], &ring_grid(), 128),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn ronkin_collapse_matches_root_formula() {
    // 1 + z + z^2/4 = (z + 2)^2 / 4, so N(x) = log(1/4) + 2 max(x, log 2)
    let p = LaurentPoly::from_real(1, &[(&[0], 1.0), (&[1], 1.0), (&[2], 0.25)]).unwrap();
    let grid: Vec<Vec<f64>> = [-1.0, -0.6, -0.3, 0.3, 0.5, 0.9].iter().map(|&t| vec![t]).collect();
    let lams = [1.0, 5.0, 25.0];
    let opts = RonkinOptions { tol: 1e-9, ..RonkinOptions::new(64, Kappa::One) };
    let rep = ronkin_collapse(&p, &lams, &grid, &opts).unwrap();
    for (d, &lam) in rep.sup_distance.iter().zip(&lams) {
        let oracle = grid
            .iter()
            .map(|t| {
                let x = lam * t[0];
                let n = 0.25f64.ln() + 2.0 * x.max(2f64.ln());
                (n / lam - (2.0 * t[0]).max(0.0)).abs()
            })
            .fold(0.0, f64::max);
        assert!((d - oracle).abs() < 1e-6, "lambda {lam}: {d} vs {oracle}");
    }
    assert!(rep.strictly_decreasing);
}

#[test]
fn fiber_diameter_examples() {
    let pot = PotentialField::new(1, 0, |p| 0.5 * p[0] * p[0]);
    let sf = semiflat(pot, &[vec![0.0]]).unwrap();
    for lam in [1.0, 10.0] {
        let f = fiber_diameter(&sf, &[0.3], 0.0, lam, 16).unwrap();
        // V from a finite-difference Hessian
        assert!((f.diameter - 2.0 * PI).abs() < 1e-8);
        assert!((f.rescaled - 2.0 * PI / lam).abs() < 1e-8);
        assert!((f.ratio - 1.0).abs() < 1e-12);
    }
    let ov = ooguri_vafa(10.0, 40, 1.0).unwrap();
    let f = fiber_diameter(&ov, &[2.0, 0.0], 0.0, 10.0, 128).unwrap();
    assert!(f.diameter > 0.0 && f.diameter.is_finite());
    assert!((0.5..=2.0).contains(&f.ratio), "{f:?}");
    let ds: Vec<f64> = [1.0, 0.5, 0.25, 0.12]
        .iter()
        .map(|&r| fiber_diameter(&ov, &[r, 0.0], 1.0, 10.0, 128).unwrap().diameter)
        .collect();
    assert!(ds.windows(2).all(|w| w[1] < w[0]), "{ds:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_then_extraction_is_identity(
        m in 1usize..12,
        coefs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        c0 in -1.0f64..1.0,
    ) {
        let c: Vec<Complex64> = coefs[..m].iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let c2 = c.clone();
        let field = FnField::new(
            move |_b: &[f64], y: f64| {
                c0 + c2.iter().enumerate().map(|(k, ck)| 2.0 * (ck * Complex64::from_polar(1.0, (k + 1) as f64 * y)).re).sum::<f64>()
            },
            |_b: &[f64]| 1.0,
        );
        let v = fourier_modes(&field, &[0.0], m, 4 * m + 4).unwrap();
        prop_assert!((v[m] - Complex64::new(c0, 0.0)).norm() < 1e-12);
        for k in 1..=m {
            prop_assert!((v[m + k] - c[k - 1]).norm() < 1e-12);
            prop_assert!((v[m - k] - c[k - 1].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn ronkin_collapse_non_increasing(
        a in 0.2f64..3.0,
        t0 in 0.25f64..1.0,
    ) {
        // (1 + z/a): tropical corner at log a, rescaled distance log-scaled by 1/lambda
        let p = LaurentPoly::from_real(1, &[(&[0], 1.0), (&[1], 1.0 / a)]).unwrap();
        let grid = vec![vec![-t0], vec![t0]];
        let opts = RonkinOptions { tol: 1e-9, ..RonkinOptions::new(64, Kappa::One) };
        let rep = ronkin_collapse(&p, &[1.0, 5.0, 25.0], &grid, &opts).unwrap();
        prop_assert!(rep.non_increasing, "{:?}", rep.sup_distance);
    }
}

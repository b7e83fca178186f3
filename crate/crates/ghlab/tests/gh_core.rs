use std::f64::consts::PI;

use ghlab::fd::FdConfig;
use ghlab::gh::*;
use ghlab::solutions::*;
use ghlab::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Forwards `V`, `W` and the connection but hides closed-form derivatives, forcing FD.
struct FdOnly<'a, S: GhSolution>(&'a S);

impl<S: GhSolution> GhSolution for FdOnly<'_, S> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn l(&self) -> usize {
        self.0.l()
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.0.v(p)
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        self.0.w(p)
    }
    fn mixed(&self, p: &[f64]) -> Option<Result<DMatrix<Complex64>>> {
        self.0.mixed(p)
    }
}

/// `W` scaled by `1 + eps`.
struct Perturbed<'a, S: GhSolution>(&'a S, f64);

impl<S: GhSolution> GhSolution for Perturbed<'_, S> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn l(&self) -> usize {
        self.0.l()
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.0.v(p)
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        Ok(self.0.w(p)? * Complex64::new(1.0 + self.1, 0.0))
    }
}

/// `V = W = f(u)` for a scalar profile; `n = l = 1`.
struct Profile<F: Fn(f64) -> f64 + Sync>(F);

impl<F: Fn(f64) -> f64 + Sync> GhSolution for Profile<F> {
    fn n(&self) -> usize {
        1
    }
    fn l(&self) -> usize {
        1
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, (self.0)(p[0])))
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        Ok(DMatrix::from_element(1, 1, Complex64::new((self.0)(p[0]), 0.0)))
    }
}

fn quadratic() -> PotentialField {
    PotentialField::new(1, 1, |p: &[f64]| 0.5 * p[0] * p[0] - 0.25 * (p[1] * p[1] + p[2] * p[2]))
}

/// A potential for the flat metric on `C^2` (`n = 1`): with `rho = sqrt(u^2 + |eta|^2)`,
/// `Phi = (u log(u + rho) - rho)/2` gives `Phi_uu = 1/(2 rho)` and `Laplacian_eta Phi = -1/(2 rho)`.
fn flat_c2_potential() -> PotentialField {
    PotentialField::new(1, 1, |p: &[f64]| {
        let (u, s2) = (p[0], p[1] * p[1] + p[2] * p[2]);
        let rho = (u * u + s2).sqrt();
        let upr = if u >= 0.0 { u + rho } else { s2 / (rho - u) };
        0.5 * (u * upr.ln() - rho)
    })
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn derive_vw_examples() {
    let s = derive_vw(&quadratic(), &[0.3, -0.2, 0.9]).unwrap();
    assert!((s.v[(0, 0)] - 1.0).abs() < 1e-8);
    assert!((s.w[(0, 0)] - c(1.0, 0.0)).norm() < 1e-8);
    assert!(!s.flagged);

    let p = flat_solution(1, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap().point;
    let s = derive_vw(&flat_c2_potential(), &p).unwrap();
    assert!((s.v[(0, 0)] - 0.5).abs() < 1e-6);
    assert!((s.w[(0, 0)] - c(0.5, 0.0)).norm() < 1e-6);

    let concave = PotentialField::new(1, 1, |p: &[f64]| -0.5 * p[0] * p[0] - 0.25 * (p[1] * p[1] + p[2] * p[2]));
    assert!(matches!(derive_vw(&concave, &[0.0; 3]), Err(Error::NotPositiveDefinite { ref which, .. }) if which == "V"));
    let bad_w = PotentialField::new(1, 1, |p: &[f64]| 0.5 * p[0] * p[0] + 0.25 * (p[1] * p[1] + p[2] * p[2]));
    assert!(matches!(derive_vw(&bad_w, &[0.0; 3]), Err(Error::NotPositiveDefinite { ref which, .. }) if which == "W"));

    let boxed = quadratic().with_domain(Domain::Box { lo: vec![-1.0; 3], hi: vec![1.0; 3] });
    assert!(matches!(derive_vw(&boxed, &[2.0, 0.0, 0.0]), Err(Error::DomainViolation(_))));
    assert!(matches!(derive_vw(&quadratic(), &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn derive_vw_flags_asymmetric_hessian() {
    let skew = quadratic().with_hessian(|_p: &[f64]| {
        DMatrix::from_row_slice(3, 3, &[1.0, 1e-6, 0.0, -1e-6, -0.5, 0.0, 0.0, 0.0, -0.5])
    });
    let s = derive_vw(&skew, &[0.0; 3]).unwrap();
    assert!(s.flagged && (s.asymmetry - 2e-6).abs() < 1e-15);
    assert_eq!(s.v[(0, 0)], 1.0);
}

#[test]
fn flat_potential_matches_closed_form_solution() {
    let phi = flat_c2_potential();
    let sol = FlatToric::new(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let z: Vec<Complex64> = (0..2).map(|_| Complex64::from_polar(rng.gen_range(0.6..1.8), rng.gen_range(0.0..2.0 * PI))).collect();
        let p = flat_solution(1, &z).unwrap().point;
        let s = derive_vw(&phi, &p).unwrap();
        assert!((s.v[(0, 0)] - sol.v(&p).unwrap()[(0, 0)]).abs() < 1e-6);
        assert!((s.w[(0, 0)] - sol.w(&p).unwrap()[(0, 0)]).norm() < 1e-6);
        let a = connection_form(&phi, &p).unwrap();
        let b = connection_form(&sol, &p).unwrap();
        assert!((a.deta[(0, 0)] - b.deta[(0, 0)]).norm() < 1e-6);
    }
}

#[test]
fn connection_examples() {
    let t = connection_form(&quadratic(), &[0.4, 0.1, -0.3]).unwrap();
    assert!(t.deta[(0, 0)].norm() < 1e-8 && t.detabar[(0, 0)].norm() < 1e-8);
    let sol = FlatToric::new(1).unwrap();
    let p = flat_solution(1, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap().point;
    let t = connection_form(&sol, &p).unwrap();
    assert_eq!(t.detabar[(0, 0)], t.deta[(0, 0)].conj());
    let tn = taub_nut(1.0, 0.0).unwrap();
    assert!(matches!(connection_form(&tn, &[1.0, 0.0, 0.0]), Err(Error::NoPotential(_))));
}

#[test]
fn curvature_examples() {
    let cfg = FdConfig::default();
    let f = curvature(&quadratic(), &[0.2, 0.5, -0.1], &cfg).unwrap();
    assert!(f.real[0].abs().max() < 1e-8);

    let tn = taub_nut(1.3, 0.0).unwrap();
    let f = curvature(&tn, &[1.0, 0.0, 0.0], &cfg).unwrap();
    assert_eq!(f.tables[0].du_deta[(0, 0)], c(0.0, 0.0));
    // dV/du = -l/2 at (1, 0, 0): (i/2) dW/du on deta ^ deta-bar
    assert!((f.tables[0].deta_detabar[(0, 0)] - c(0.0, -0.325)).norm() < 1e-15);
    assert_eq!(f.imag_residual, 0.0);
}

#[test]
fn curvature_closed_form_matches_fd() {
    let cfg = FdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let tn = taub_nut(0.8, 0.4).unwrap();
    let ov = ooguri_vafa(1.0, 20, 1.0).unwrap();
    let f2 = FlatToric::new(2).unwrap();
    for _ in 0..40 {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
        if p[0].hypot(p[1]) < 0.2 {
            continue;
        }
        for sol in [&tn as &dyn GhSolution, &ov] {
            let a = curvature(sol, &p, &cfg).unwrap();
            let b = curvature(&FdOnly(&DynRef(sol)), &p, &cfg).unwrap();
            assert!((&a.real[0] - &b.real[0]).abs().max() < 1e-6);
        }
        let z: Vec<Complex64> = (0..3).map(|_| Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI))).collect();
        let q = flat_solution(2, &z).unwrap().point;
        let a = curvature(&f2, &q, &cfg).unwrap();
        let b = curvature(&FdOnly(&f2), &q, &cfg).unwrap();
        for j in 0..2 {
            assert!((&a.real[j] - &b.real[j]).abs().max() < 1e-6);
        }
    }
}

struct DynRef<'a>(&'a dyn GhSolution);

impl GhSolution for DynRef<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn l(&self) -> usize {
        self.0.l()
    }
    fn v(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.0.v(p)
    }
    fn w(&self, p: &[f64]) -> Result<DMatrix<Complex64>> {
        self.0.w(p)
    }
}

fn annulus_points(rng: &mut ChaCha8Rng, count: usize, r0: f64, r1: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let r = rng.gen_range(r0..r1);
            let (th, ph): (f64, f64) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
            vec![r * th.cos(), r * th.sin() * ph.cos(), r * th.sin() * ph.sin()]
        })
        .collect()
}

#[test]
fn verify_closed_examples() {
    let cfg = FdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let pts = annulus_points(&mut rng, 20, 0.0, 2.0);
    let q = verify_closed(&quadratic().with_hessian(|_p: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -0.5, -0.5]))), &pts, "ball", &cfg, 1e-6).unwrap();
    assert!(q.d_f.max_residual < 1e-12 && q.d_omega.max_residual < 1e-12 && q.integrability.max_residual < 1e-12);

    let pts = annulus_points(&mut rng, 200, 0.5, 2.0);
    let t = verify_closed(&taub_nut(1.0, 0.5).unwrap(), &pts, "annulus 0.5..2", &cfg, 1e-6).unwrap();
    assert!(t.pass(), "{t:?}");

    let ov = ooguri_vafa(1.0, 40, 1.0).unwrap();
    let pts: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let (r, a): (f64, f64) = (rng.gen_range(0.1..2.0), rng.gen_range(0.0..2.0 * PI));
            vec![r * a.cos(), r * a.sin(), rng.gen_range(-PI..PI)]
        })
        .collect();
    let o = verify_closed(&ov, &pts, "r in 0.1..2", &cfg, 1e-6).unwrap();
    assert!(o.pass(), "{o:?}");
    assert_eq!(o.d_omega.check, "d_omega_via_curvature");
}

#[test]
fn verify_closed_reports_step_too_large() {
    let wild = Profile(|u: f64| 2.0 + (300.0 * u).sin());
    let r = verify_closed(&wild, &[vec![0.1, 0.2, 0.3]], "pt", &FdConfig::default(), 1e-6);
    assert!(matches!(r, Err(Error::StepTooLarge { .. })), "{r:?}");
}

#[test]
fn closedness_residual_is_second_order_in_step() {
    // plain central differences (no Richardson) on the FD-only Taub-NUT field
    let tn = taub_nut(1.0, 0.0).unwrap();
    let sol = FdOnly(&tn);
    let pts = vec![vec![0.6, 0.3, -0.2]];
    let res = |h: f64| verify_closed(&sol, &pts, "pt", &FdConfig::new(h, 0), 1.0).unwrap().d_f.max_residual;
    let (a, b) = (res(2e-2), res(1e-2));
    let ratio = a / b;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn verify_compat_examples() {
    let sol = FlatToric::new(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts = annulus_points(&mut rng, 100, 0.2, 3.0);
    let r = verify_compat(&sol, &pts, "annulus", 1e-12).unwrap();
    assert_eq!(r.max_residual, 0.0);
    let p = Perturbed(&sol, 1e-3);
    let r = verify_compat(&p, &pts, "annulus", 1e-12).unwrap();
    assert!(!r.pass && (r.max_residual - 1e-3).abs() < 1e-12);

    let s2 = FlatToric::new(2).unwrap();
    let pts2: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    assert!(verify_compat(&s2, &pts2, "box", 1e-12).unwrap().pass);
}

#[test]
fn compat_is_gauge_invariant() {
    let base = flat_c2_potential();
    let shifted = PotentialField::new(1, 1, move |p: &[f64]| base.evaluate(p) + 3.0 * p[0] - 2.0 * p[1] + 0.5 * p[2] + 7.0);
    let pts: Vec<Vec<f64>> = vec![vec![0.3, 0.8, 0.1], vec![-0.4, 0.5, -0.6], vec![1.2, -0.3, 0.9]];
    let a = verify_compat(&flat_c2_potential(), &pts, "pts", 1e-6).unwrap();
    let b = verify_compat(&shifted, &pts, "pts", 1e-6).unwrap();
    assert!((a.max_residual - b.max_residual).abs() < 1e-7);
    assert!(a.pass && b.pass);
}

#[test]
fn residual_report_json_shape() {
    let r = ResidualReport::from_residuals("dF", "g", &[vec![0.0], vec![1.0]], &[1e-9, 3e-9], Some(1e-4), 1e-6);
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for k in ["check", "grid", "maxResidual", "argmaxPoint", "step", "tolerance", "pass"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    assert_eq!(v["argmaxPoint"], serde_json::json!([1.0]));
    assert_eq!(v["pass"], serde_json::json!(true));
}

#[test]
fn chern_flux_flat_c2() {
    let cfg = FdConfig::default();
    let sol = FlatToric::new(1).unwrap();
    let wc = sol.wall_complex();
    let wall = &wc.walls[0];
    let expect = (wall.weight[1]) as f64;
    assert_eq!(expect, -1.0);
    let a = wall_flux(&sol, wall, &[0.0], 0.5, 24, &cfg).unwrap();
    let b = wall_flux(&sol, wall, &[0.0], 1.3, 24, &cfg).unwrap();
    assert!((a[0] - expect).abs() < 1e-3);
    assert!((a[0] - b[0]).abs() < 0.005 * a[0].abs());
    // no wall inside
    let z = chern_flux(&sol, &[2.0], &[1.0], 0.5, 24, &cfg).unwrap();
    assert!(z[0].abs() < 1e-6);
    // a pole on the wall
    assert!(matches!(chern_flux(&sol, &[0.5], &[1.0], 0.5, 8, &cfg), Err(Error::SphereHitsDiscriminant)));
}

#[test]
fn chern_flux_flat_c3_walls() {
    let cfg = FdConfig::default();
    let sol = FlatToric::new(2).unwrap();
    let wc = sol.wall_complex();
    for wall in &wc.walls {
        // a point in the relative interior of each wall
        let center = match (wall.i, wall.j) {
            (0, 1) => vec![0.0, 1.0],
            (0, 2) => vec![1.0, 0.0],
            _ => vec![-1.0, -1.0],
        };
        assert!(wc.distance(&center) < 1e-12);
        let f = wall_flux(&sol, wall, &center, 0.4, 20, &cfg).unwrap();
        for k in 0..2 {
            assert!((f[k] - wall.weight[k + 1] as f64).abs() < 1e-3, "wall {}{}: {f:?}", wall.i, wall.j);
        }
    }
}

#[test]
fn chern_flux_taub_nut_and_periodic() {
    let cfg = FdConfig::default();
    let tn = taub_nut(3.0, 0.2).unwrap();
    let f = chern_flux(&tn, &[0.0], &[1.0], 0.7, 24, &cfg).unwrap();
    assert!((f[0] + 3.0).abs() < 1e-6);
    let ov = OoguriVafa::builder(1.0, 40, 1.0).mode_sum(ModeSum::Complete).build().unwrap();
    let f = chern_flux(&ov, &[0.0], &[1.0], 0.3, 24, &cfg).unwrap();
    assert!((f[0] + 1.0).abs() < 0.01);
    assert!(chern_flux(&FlatToric::new(1).unwrap(), &[0.0], &[0.0], 0.5, 8, &cfg).is_err());
}

#[test]
fn completeness_probe_examples() {
    let flat = FlatToric::new(1).unwrap();
    let grid = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let r = completeness_probe(&flat, &[0.0, 0.5, 0.0], 0, 0, &grid).unwrap();
    assert_eq!(r.verdict, CompletenessVerdict::Growing);
    assert!(r.partial_integrals.windows(2).all(|w| w[1] > w[0]));
    // int_0^U du / (2 sqrt(u^2 + s^2)) = asinh(U/s)/2
    for (u, v) in grid.iter().zip(&r.partial_integrals) {
        assert!((v - 0.5 * (u / 0.5f64).asinh()).abs() < 1e-10);
    }
    let constant = Profile(|_u: f64| 2.0);
    let r = completeness_probe(&constant, &[0.0, 0.0, 0.0], 0, 0, &grid).unwrap();
    assert_eq!(r.verdict, CompletenessVerdict::Growing);
    assert!((r.partial_integrals[5] - 64.0).abs() < 1e-10);
    let decaying = Profile(|u: f64| (-u).exp());
    let r = completeness_probe(&decaying, &[0.0, 0.0, 0.0], 0, 0, &grid).unwrap();
    assert_eq!(r.verdict, CompletenessVerdict::InconclusiveConvergent);
    assert!((r.partial_integrals[5] - (1.0 - (-32.0f64).exp())).abs() < 1e-10);
    assert!(completeness_probe(&decaying, &[0.0; 3], 0, 0, &[2.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_blocks_are_positive(u in -1.5f64..1.5, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        prop_assume!(x.hypot(y) > 0.2);
        let s = derive_vw(&flat_c2_potential(), &[u, x, y]).unwrap();
        prop_assert!(s.v[(0, 0)] > 0.0 && s.w[(0, 0)].re > 0.0);
        prop_assert!(s.w[(0, 0)].im == 0.0);
        prop_assert!(s.asymmetry == 0.0);
    }

    #[test]
    fn connection_is_real(r0 in 0.5f64..2.0, r1 in 0.5f64..2.0, r2 in 0.5f64..2.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let z = [Complex64::from_polar(r0, a), Complex64::from_polar(r1, b), Complex64::from_polar(r2, a - b)];
        let s = flat_solution(2, &z).unwrap();
        for j in 0..2 {
            prop_assert!((s.connection.detabar[(j, 0)] - s.connection.deta[(j, 0)].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn flux_is_radius_independent(r1 in 0.3f64..0.9, r2 in 1.0f64..2.5) {
        let cfg = FdConfig::default();
        let sol = taub_nut(1.0, 0.3).unwrap();
        let a = chern_flux(&sol, &[0.0], &[1.0], r1, 16, &cfg).unwrap();
        let b = chern_flux(&sol, &[0.0], &[1.0], r2, 16, &cfg).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-3);
    }
}

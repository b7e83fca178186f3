use ghlab::tropical::{ronkin, Kappa};
use ghlab_cli::config::{config_hash, parse_json, parse_range, RunConfig};
use ghlab_cli::poly::{parse_poly, parse_terms};
use ghlab_cli::svg::{render_svg, Axes, Series, SvgError};
use ghlab_cli::CliError;
use proptest::prelude::*;

#[test]
fn poly_examples() {
    let p = parse_terms("1+z").unwrap();
    assert_eq!(p.l, 1);
    assert_eq!(p.terms, vec![(vec![0], 1.0), (vec![1], 1.0)]);

    let p = parse_terms(" 2.5*z1^2*z2 - z2^3 + .5 ").unwrap();
    assert_eq!(p.l, 2);
    assert_eq!(p.terms, vec![(vec![0, 0], 0.5), (vec![0, 3], -1.0), (vec![2, 1], 2.5)]);

    // like terms combine, repeated factors multiply, negative exponents allowed
    let p = parse_terms("-z*z + 3*z^2 + 4*z^-1").unwrap();
    assert_eq!(p.terms, vec![(vec![-1], 4.0), (vec![2], 2.0)]);
    assert_eq!(parse_terms("z1*z2 - z2*z1 + 1").unwrap().terms, vec![(vec![0, 0], 1.0)]);
}

#[test]
fn poly_errors_report_column() {
    for (src, col) in [("1+*z", 3), ("", 1), ("1 + z3", 6), ("2*", 3), ("1..5", 3), ("z^", 3), ("1 + x", 5), ("1 z", 3)] {
        let e = parse_terms(src).unwrap_err();
        assert_eq!(e.col, col, "{src}: {e}");
    }
    assert!(parse_terms("z - z").is_err());
    assert!(parse_terms("1e3").is_err());
}

#[test]
fn parsed_poly_evaluates_ronkin() {
    let p = parse_poly("1 + z1 + z2").unwrap();
    let v = ronkin(&p, &[0.0, 0.0], 16, Kappa::One).unwrap();
    assert!((v - 0.3231).abs() < 1e-3);
}

#[test]
fn range_examples() {
    let r = parse_range("-3:3:0.1").unwrap();
    assert_eq!(r.len(), 61);
    assert_eq!(r[0], -3.0);
    assert!((r[60] - 3.0).abs() < 1e-12);
    assert_eq!(parse_range("1:1:0.5").unwrap(), vec![1.0]);
    assert_eq!(parse_range("0:1:0.4").unwrap().len(), 3);
    for bad in ["1:0:0.1", "0:1:0", "0:1", "a:1:0.1", "0:1:-1"] {
        assert!(matches!(parse_range(bad), Err(CliError::Config(_))), "{bad}");
    }
}

#[test]
fn config_json_and_hash() {
    let c = parse_json(r#"{"n": 1, "grid": 32, "lambda": [1, 5], "M": 40, "rMin": 0.1}"#).unwrap();
    assert_eq!(c.n, Some(1));
    assert_eq!(c.m, Some(40));
    assert_eq!(c.r_min, Some(0.1));
    let h1 = config_hash("ov", &c);
    assert_eq!(h1, config_hash("ov", &c.clone()));
    assert_ne!(h1, config_hash("decay", &c));
    assert_ne!(h1, config_hash("ov", &RunConfig { grid: Some(31), ..c }));
    match parse_json(r#"{"rMax": true}"#) {
        Err(CliError::Config(m)) => assert!(m.contains("'rMax'"), "{m}"),
        other => panic!("{other:?}"),
    }
}

fn line(n: usize) -> Series {
    Series { label: "y = x".into(), points: (0..n).map(|k| (k as f64, k as f64)).collect() }
}

#[test]
fn svg_single_series() {
    let s = render_svg(&[line(3)], &Axes::default(), "").unwrap();
    assert_eq!(s.matches("<polyline").count(), 1);
    let pl = s.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let pts = pl.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
    assert_eq!(pts.split(' ').count(), 3);
    assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
    assert_eq!(s, render_svg(&[line(3)], &Axes::default(), "").unwrap());
}

#[test]
fn svg_log_axis_and_errors() {
    let decay: Vec<Series> = (1..=3)
        .map(|m| Series { label: format!("m={m}"), points: (1..6).map(|i| (i as f64, (-(m * i) as f64).exp())).collect() })
        .collect();
    let s = render_svg(&decay, &Axes { y_log: true, ..Axes::default() }, "note").unwrap();
    assert_eq!(s.matches("<polyline").count(), 3);
    assert!(s.contains(">1e-"));
    assert!(s.contains("<!-- note -->"));

    assert!(matches!(render_svg(&[], &Axes::default(), ""), Err(SvgError::Empty)));
    let bad = Series { label: "bad".into(), points: vec![(0.0, 1.0), (1.0, f64::NAN)] };
    assert!(matches!(render_svg(&[bad], &Axes::default(), ""), Err(SvgError::NonFiniteValue { index: 1, .. })));
    let zero = Series { label: "z".into(), points: vec![(1.0, 0.0)] };
    assert!(matches!(render_svg(&[zero], &Axes { y_log: true, ..Axes::default() }, ""), Err(SvgError::NonFiniteValue { .. })));
    let esc = Series { label: "a<b & c".into(), points: vec![(0.0, 0.0)] };
    assert!(render_svg(&[esc], &Axes::default(), "").unwrap().contains("a&lt;b &amp; c"));
}

fn render_term(c: f64, e: &[i64]) -> String {
    let mut s = format!("{c}");
    for (k, &x) in e.iter().enumerate() {
        if x != 0 {
            s.push_str(&format!("*z{}^{x}", k + 1));
        }
    }
    s
}

proptest! {
    #[test]
    fn poly_round_trip(
        terms in prop::collection::btree_map((-3i64..4, -3i64..4), (1u32..1000, any::<bool>()), 1..6),
    ) {
        let mut src = String::new();
        for (k, (&(a, b), &(c, neg))) in terms.iter().enumerate() {
            let c = c as f64 / 8.0;
            if neg {
                src.push_str(" - ");
            } else if k > 0 {
                src.push_str(" + ");
            }
            src.push_str(&render_term(c, &[a, b]));
        }
        let p = parse_terms(&src).unwrap();
        let uses_z2 = terms.keys().any(|&(_, b)| b != 0);
        prop_assert_eq!(p.l, if uses_z2 { 2 } else { 1 });
        prop_assert_eq!(p.terms.len(), terms.len());
        for (e, c) in &p.terms {
            let key = (e[0], if p.l == 2 { e[1] } else { 0 });
            let (m, neg) = terms[&key];
            let want = if neg { -(m as f64) / 8.0 } else { m as f64 / 8.0 };
            prop_assert_eq!(*c, want);
        }
    }

    #[test]
    fn range_is_uniform(a in -5.0f64..5.0, len in 0.0f64..10.0, h in 0.01f64..2.0) {
        let r = parse_range(&format!("{a}:{}:{h}", a + len)).unwrap();
        prop_assert!(r.len() >= 1);
        prop_assert!(*r.last().unwrap() <= a + len + 1e-9 * h.max(1.0));
        prop_assert!(*r.last().unwrap() + h > a + len - 1e-9);
        for w in r.windows(2) {
            prop_assert!((w[1] - w[0] - h).abs() < 1e-9);
        }
    }
}

use ohara::flow::{run_flow, FlowOptions};
use ohara::io::{load_curve, read_field, write_field, write_flow_trace, write_grid_csv, write_json};
use ohara::kernels::EnergyParams;
use ohara::norms::{gagliardo_seminorm, holder_seminorm, is_little_holder, lipschitz_sup, local_modulus};
use ohara::quadrature::{density_grid, energy, GridKind};
use ohara::synth::{circle, cusp_field, parse_synthetic, random_curve, random_field};
use ohara::verify::{diagonal_limit, tanh_sinh, LimitKind, LimitOptions};
use ohara::{ClosedCurve, Error, Field};
use std::f64::consts::PI;

#[test]
fn parameter_constraint_is_reported() {
    let err = EnergyParams::new(3.0, 0.5).unwrap_err();
    assert!(err.to_string().contains("constraint 2 <= alpha*p < 2p+1 violated"));
    assert!(EnergyParams::new(1.5, 1.0).is_err());
    assert!(EnergyParams::new(3.0, 1.0).is_err());
    assert!(EnergyParams::new(2.9, 1.0).is_ok());
    assert!(EnergyParams::new(2.0, 1.0).unwrap().with_beta(1.5).is_err());
}

#[test]
fn field_size_mismatch_is_rejected() {
    let c = circle(32, 1.0, 2).unwrap();
    let u = Field::zeros(30, 2);
    assert!(matches!(gagliardo_seminorm(&c, &u, 0.5, 2.0), Err(Error::FieldMismatch { .. })));
}

#[test]
fn gagliardo_of_circle_tangent_matches_1d_integral() {
    let c = circle(256, 1.0, 2).unwrap();
    let (sigma, q) = (0.25, 4.0);
    let r = gagliardo_seminorm(&c, c.tangents(), sigma, q).unwrap();
    // |Δtau| = 2 sin(x/2) on the unit circle
    let f = |x: f64| if x < 1e-100 { 0.0 } else { (2.0 * (x / 2.0).sin()).powf(q) / x.powf(1.0 + sigma * q) };
    let inner = tanh_sinh(f, 0.0, PI, 1e-15);
    let exact = (2.0 * 2.0 * PI * inner).powf(1.0 / q);
    assert!((r.value - exact).abs() < 1e-10 * exact, "{} vs {exact}", r.value);
    assert!(r.error_estimate.unwrap() < 1e-8);
}

#[test]
fn holder_seminorms_of_circle_tangent() {
    let c = circle(128, 1.0, 2).unwrap();
    let t = c.tangents();
    assert!((holder_seminorm(&c, t, 1.0).unwrap().value - 1.0).abs() < 1e-10);
    assert!((lipschitz_sup(&c, t).unwrap().value - 1.0).abs() < 1e-10);
    // |Δtau| / |Δs|^(1/2) = 2 sin(x/2) / sqrt(x) over grid separations
    let h = c.h();
    let expected = (1..=64).map(|k| 2.0 * (k as f64 * h / 2.0).sin() / (k as f64 * h).sqrt()).fold(0.0, f64::max);
    let half = holder_seminorm(&c, t, 0.5).unwrap().value;
    assert!((half - expected).abs() < 1e-12, "{half} vs {expected}");
    let local = local_modulus(&c, t, 0.5, 0.1).unwrap().value;
    assert!(local < half);
    let fine = circle(1024, 1.0, 2).unwrap();
    assert!(is_little_holder(&fine, fine.tangents(), 0.5, 0.5).unwrap());
    assert!(local_modulus(&c, t, 0.5, 10.0).is_err());
}

#[test]
fn cusp_field_is_holder_but_not_little_holder() {
    let c = circle(512, 1.0, 2).unwrap();
    let beta = 0.5;
    let u = cusp_field(&c, beta, 1.0).derivative(c.length());
    let h = holder_seminorm(&c, &u, beta).unwrap().value;
    assert!(h.is_finite() && h > 0.0);
    assert!(!is_little_holder(&c, &u, beta, 0.5).unwrap());
}

#[test]
fn synthetic_fields_parse() {
    let c = circle(64, 1.0, 3).unwrap();
    let f = parse_synthetic("synthetic:4", &c, 1).unwrap().unwrap();
    assert_eq!((f.len(), f.dim()), (64, 3));
    assert_eq!(f, parse_synthetic("synthetic:4", &c, 1).unwrap().unwrap());
    assert!(parse_synthetic("synthetic:x", &c, 1).unwrap().is_err());
    assert!(parse_synthetic("synthetic:0", &c, 1).unwrap().is_err());
    assert!(parse_synthetic("field.json", &c, 1).is_none());
}

#[test]
fn limit_report_json_has_the_documented_keys() {
    let c = circle(128, 1.0, 2).unwrap();
    let phi = random_field(&c, 1, 3, 0.3);
    let par = EnergyParams::new(2.0, 1.0).unwrap().with_beta(1.0).unwrap();
    let r = diagonal_limit(&c, &phi, &phi, &par, 5, LimitKind::MAlpha, &LimitOptions::default()).unwrap();
    assert!((r.reference - 2.0 / 24.0).abs() < 1e-14);
    assert!(r.gap < 1e-8);
    let v = serde_json::to_value(&r).unwrap();
    for key in ["which", "s", "samples", "extrapolated", "reference", "gap"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // beta < 1 drives the weighted limit to zero
    let par = par.with_beta(0.8).unwrap();
    let r = diagonal_limit(&c, &phi, &phi, &par, 5, LimitKind::R1, &LimitOptions::default()).unwrap();
    assert_eq!(r.reference, 0.0);
    assert!(r.gap < 1e-6);
}

#[test]
fn grid_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = random_curve(32, 3, 4, 0.2).unwrap();
    let par = EnergyParams::new(2.2, 1.0).unwrap();
    let g = density_grid(&c, &par, &GridKind::Density, None, 2).unwrap();
    let path = dir.path().join("grid.csv");
    write_grid_csv(&g, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# M=32,"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 32);
    assert!(rows[0][0].is_nan() && rows[0][2].is_nan() && !rows[0][3].is_nan());
    assert_eq!(rows[4][9], g.get(4, 9));
    let summary = dir.path().join("grid.json");
    write_json(&summary, &g).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    for key in ["sup", "l1", "flagged_pairs"] {
        assert!(v.get(key).is_some());
    }
}

#[test]
fn field_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = circle(48, 2.0, 3).unwrap();
    let u = random_field(&c, 9, 3, 1.0);
    for name in ["u.json", "u.csv"] {
        let p = dir.path().join(name);
        write_field(&u, &p).unwrap();
        let back = read_field(&p, &c).unwrap();
        assert_eq!(back, u);
    }
    let other = circle(40, 1.0, 3).unwrap();
    assert!(read_field(dir.path().join("u.json"), &other).is_err());
}

#[test]
fn csv_curve_with_header_and_resampling() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sq.csv");
    let mut text = String::from("x,y\n");
    for i in 0..200 {
        let t = 2.0 * PI * i as f64 / 200.0;
        text += &format!("{},{}\n", 3.0 * t.cos(), 3.0 * t.sin());
    }
    std::fs::write(&p, text).unwrap();
    let c = load_curve(&p, Some(64)).unwrap();
    assert_eq!(c.len(), 64);
    assert!((c.length() - 6.0 * PI).abs() < 1e-8);
    let e = energy(&c, &EnergyParams::new(2.0, 1.0).unwrap()).unwrap().value;
    assert!((e - 4.0).abs() < 1e-6);
}

#[test]
fn flow_trace_export() {
    let dir = tempfile::tempdir().unwrap();
    let c: ClosedCurve = random_curve(64, 5, 3, 0.1).unwrap();
    let par = EnergyParams::new(2.0, 1.0).unwrap();
    let st = run_flow(c, &par, 0.05, 3, &FlowOptions { modes: 4, ..FlowOptions::default() }).unwrap();
    assert!(st.energies.windows(2).all(|w| w[1] <= w[0]));
    assert!((st.curve.length() - st.target_length).abs() < 1e-10);
    let p = dir.path().join("trace.csv");
    write_flow_trace(&st, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("step,energy,grad_norm,dt"));
    assert_eq!(text.lines().count(), 5);
}

use crate::commands::{curve, emit, fields, params, quadrature, CliResult};
use crate::{CliError, Common};
use clap::ValueEnum;
use ohara::kernels::{m_alpha, EnergyParams};
use ohara::numeric::richardson;
use ohara::quadrature::{antipodal_term, energy_with, first_variation_with, second_variation_with};
use ohara::synth::{circle, ellipse};
use ohara::variations::{first_variation_density, Perturbation};
use ohara::verify::{
    circle_energy_reference, circle_weighted, diagonal_limit, fd_energy_gradient, fd_energy_hessian,
    fd_first_variation_density, LimitKind, LimitOptions,
};
use ohara::ClosedCurve;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Fd,
    Limits,
    Circle,
    Identity,
    All,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn run(c: &Common, suite: Suite) -> CliResult {
    let params = params(c)?;
    let mut out = Map::new();
    let selected = |s: Suite| suite == s || suite == Suite::All;
    if selected(Suite::Fd) {
        out.insert("fd".into(), fd(c, &params)?);
    }
    if selected(Suite::Limits) {
        out.insert("limits".into(), limits(c, &params)?);
    }
    if selected(Suite::Circle) {
        out.insert("circle".into(), circle_suite(c, &params)?);
    }
    if selected(Suite::Identity) {
        out.insert("identity".into(), identity(c, &params)?);
    }
    let failed: Vec<String> = out.iter().filter(|(_, v)| v["pass"] != json!(true)).map(|(k, _)| k.clone()).collect();
    emit(&Value::Object(out), c.out.as_deref())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("verification failed: {}", failed.join(", "))))
    }
}

fn fd(c: &Common, params: &EnergyParams) -> CliResult<Value> {
    let curve = curve(c)?;
    let (phi, psi) = fields(c, &curve)?;
    let opts = quadrature(c);
    let g = first_variation_with(&curve, &phi, params, &opts)?.value;
    let g_fd = fd_energy_gradient(&curve, &phi, params, None, &opts)?;
    let gradient_gap = rel(g, g_fd.richardson);
    let pert = Perturbation::new(&curve, &phi)?;
    let m = curve.len();
    let mut pointwise_gap = 0.0f64;
    for k in 0..20 {
        let i = (37 * k + 5) % m;
        let j = (i + 1 + (53 * k) % (m - 1)) % m;
        let pair = curve.pair_frame(i, j)?;
        let exact = first_variation_density(&curve, &pert, &pair, params)?.sum;
        let approx = fd_first_variation_density(&curve, &phi, i, j, params, 4e-3)?.richardson;
        pointwise_gap = pointwise_gap.max(rel(exact, approx));
    }
    let h =
        second_variation_with(&curve, &phi, &psi, params, &opts)?.value + antipodal_term(&curve, &phi, &psi, params)?;
    let h_fd = fd_energy_hessian(&curve, &phi, &psi, params, None, &opts)?;
    let hessian_gap = rel(h, h_fd.richardson);
    let max_gap = gradient_gap.max(pointwise_gap);
    eprintln!("max relative FD gap {max_gap:.3e} (second variation {hessian_gap:.3e})");
    Ok(json!({
        "first_variation": g,
        "first_variation_fd": g_fd.richardson,
        "second_variation": h,
        "second_variation_fd": h_fd.richardson,
        "gradient_gap": gradient_gap,
        "pointwise_gap": pointwise_gap,
        "hessian_gap": hessian_gap,
        "max_relative_fd_gap": max_gap,
        "pass": max_gap <= 1e-6 && hessian_gap <= 1e-4,
    }))
}

fn limits(c: &Common, params: &EnergyParams) -> CliResult<Value> {
    let params = if c.beta.is_none() { params.with_beta(1.0)? } else { *params };
    let curves: Vec<(String, ClosedCurve)> = match &c.curve {
        Some(p) => vec![(p.display().to_string(), curve(c)?)],
        None => {
            let m = c.m.unwrap_or(256);
            vec![("unit circle".into(), circle(m, 1.0, 2)?), ("ellipse 2:1".into(), ellipse(m, 2.0, 1.0)?)]
        }
    };
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (name, curve) in &curves {
        let (phi, psi) = fields(c, curve)?;
        let mut gap = 0.0f64;
        for i in (0..8).map(|k| k * curve.len() / 8) {
            for which in LimitKind::ALL {
                gap = gap.max(diagonal_limit(curve, &phi, &psi, &params, i, which, &LimitOptions::default())?.gap);
            }
        }
        worst = worst.max(gap);
        rows.push(json!({"curve": name, "max_gap": gap}));
    }
    Ok(json!({"curves": rows, "max_gap": worst, "pass": worst <= 1e-4}))
}

fn circle_suite(c: &Common, params: &EnergyParams) -> CliResult<Value> {
    let (a, p) = (params.alpha(), params.p());
    let m = c.m.unwrap_or(512);
    let e = energy_with(&circle(m, 1.0, 2)?, params, &quadrature(c))?;
    let reference = circle_energy_reference(a, p, 1.0);
    let energy_gap = rel(e.value, reference);
    let weighted: Vec<f64> = (0..8).map(|k| circle_weighted(a, p, (a - 2.0) * p, 0.2 / 2f64.powi(k))).collect();
    let limit = (a / 24.0).powf(p);
    let asymptotic_gap = rel(richardson(&weighted, 2.0, 2.0, 2.0), limit);
    Ok(json!({
        "M": m,
        "energy": e.value,
        "reference": reference,
        "energy_gap": energy_gap,
        "weighted_limit": limit,
        "asymptotic_gap": asymptotic_gap,
        "pass": energy_gap <= 1e-8 && asymptotic_gap <= 1e-5,
    }))
}

fn identity(c: &Common, params: &EnergyParams) -> CliResult<Value> {
    let curve = curve(c)?;
    let a = params.alpha();
    let m = curve.len();
    let mut worst = 0.0f64;
    for j in 0..m {
        for k in c.band as isize + 1..=(m / 2) as isize {
            let fr = curve.frame_steps(j, k);
            let lib = m_alpha(&curve, &fr, params)?;
            let direct = -(a * (fr.chord_norm / fr.d).ln()).exp_m1() / fr.chord_norm.powf(a);
            worst = worst.max(rel(lib, direct));
        }
    }
    Ok(json!({"max_gap": worst, "pass": worst <= 1e-11}))
}

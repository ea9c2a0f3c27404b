use crate::{CliError, Common};
use ohara::flow::{distance_to_circle, flow_step, FlowOptions, FlowState};
use ohara::io;
use ohara::kernels::EnergyParams;
use ohara::norms::{
    gagliardo_seminorm, holder_seminorm, lipschitz_sup, local_modulus, product_seminorm_check, sobolev_linf_norm,
};
use ohara::quadrature::{
    antipodal_term, density_grid, energy_with, first_variation_with, second_variation_with, GridKind, QuadratureOptions,
};
use ohara::synth::{parse_synthetic, random_curve};
use ohara::verify::{diagonal_limit, LimitKind, LimitOptions};
use ohara::{ClosedCurve, Field};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

pub const DEFAULT_M: usize = 128;

pub fn params(c: &Common) -> CliResult<EnergyParams> {
    let p = EnergyParams::new(c.alpha, c.p)?;
    Ok(match c.beta {
        Some(b) => p.with_beta(b)?,
        None => p,
    })
}

pub fn quadrature(c: &Common) -> QuadratureOptions {
    QuadratureOptions::with_band(c.band)
}

pub fn curve(c: &Common) -> CliResult<ClosedCurve> {
    Ok(match &c.curve {
        Some(path) => io::load_curve(path, c.m)?,
        None => random_curve(c.m.unwrap_or(DEFAULT_M), c.seed, 5, 0.15)?,
    })
}

/// `spec` is a field file or `synthetic:K`; absent means `synthetic:4`.
pub fn field(spec: Option<&str>, curve: &ClosedCurve, seed: u64) -> CliResult<Field> {
    let spec = spec.unwrap_or("synthetic:4");
    match parse_synthetic(spec, curve, seed) {
        Some(f) => Ok(f?),
        None => Ok(io::read_field(spec, curve)?),
    }
}

pub fn fields(c: &Common, curve: &ClosedCurve) -> CliResult<(Field, Field)> {
    let phi = field(c.phi.as_deref(), curve, c.seed)?;
    let psi = field(c.psi.as_deref(), curve, c.seed.wrapping_add(1))?;
    Ok((phi, psi))
}

/// Prints to stdout, ignoring a closed pipe.
pub fn print_json(value: &Value) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(value).expect("serialisable"));
}

pub fn emit(value: &Value, out: Option<&Path>) -> CliResult {
    print_json(value);
    if let Some(path) = out {
        io::write_json(path, value)?;
    }
    Ok(())
}

fn run_info(c: &Common, curve: &ClosedCurve, params: &EnergyParams) -> Value {
    json!({
        "alpha": params.alpha(),
        "p": params.p(),
        "M": curve.len(),
        "length": curve.length(),
        "band": c.band,
    })
}

pub fn energy(c: &Common) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let e = energy_with(&curve, &params, &quadrature(c))?;
    emit(
        &json!({"energy": e.value, "error_estimate": e.error_estimate, "run": run_info(c, &curve, &params)}),
        c.out.as_deref(),
    )
}

pub fn gradient(c: &Common) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let phi = field(c.phi.as_deref(), &curve, c.seed)?;
    let g = first_variation_with(&curve, &phi, &params, &quadrature(c))?;
    emit(
        &json!({"first_variation": g.value, "error_estimate": g.error_estimate, "run": run_info(c, &curve, &params)}),
        c.out.as_deref(),
    )
}

pub fn hessian_form(c: &Common) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let (phi, psi) = fields(c, &curve)?;
    let h = second_variation_with(&curve, &phi, &psi, &params, &quadrature(c))?;
    let j = antipodal_term(&curve, &phi, &psi, &params)?;
    emit(
        &json!({
            "second_variation": h.value + j,
            "h_integral": h.value,
            "antipodal_term": j,
            "error_estimate": h.error_estimate,
            "flagged_pairs": h.flagged_pairs,
            "run": run_info(c, &curve, &params),
        }),
        c.out.as_deref(),
    )
}

pub fn density(c: &Common) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let kind = match (&c.phi, &c.psi) {
        (None, None) => GridKind::Density,
        (Some(_), None) => GridKind::FirstVariation(field(c.phi.as_deref(), &curve, c.seed)?),
        _ => {
            let (phi, psi) = fields(c, &curve)?;
            GridKind::SecondVariation(phi, psi)
        }
    };
    let grid = density_grid(&curve, &params, &kind, c.beta, c.band)?;
    let summary = serde_json::to_value(&grid).expect("serialisable");
    print_json(&summary);
    if let Some(path) = &c.out {
        io::write_grid_csv(&grid, path)?;
        io::write_json(path.with_extension("json"), &summary)?;
    }
    Ok(())
}

pub fn limits(c: &Common) -> CliResult {
    let params = params(c)?;
    let params = if c.beta.is_none() { params.with_beta(1.0)? } else { params };
    let curve = curve(c)?;
    let (phi, psi) = fields(c, &curve)?;
    let m = curve.len();
    let mut reports = Vec::new();
    for i in (0..8).map(|k| k * m / 8) {
        for which in LimitKind::ALL {
            reports.push(diagonal_limit(&curve, &phi, &psi, &params, i, which, &LimitOptions::default())?);
        }
    }
    let max_gap = reports.iter().map(|r| r.gap).fold(0.0, f64::max);
    eprintln!("max gap {max_gap:.3e} over {} reports", reports.len());
    emit(&serde_json::to_value(&reports).expect("serialisable"), c.out.as_deref())
}

pub fn norms(c: &Common) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let (u, phi) = match &c.phi {
        Some(spec) => {
            let phi = field(Some(spec), &curve, c.seed)?;
            (phi.derivative(curve.length()), Some(phi))
        }
        None => (curve.tangents().clone(), None),
    };
    let (sigma, q, beta) = (params.sigma(), 2.0 * params.p(), params.beta());
    let reports = vec![
        gagliardo_seminorm(&curve, &u, sigma, q)?,
        holder_seminorm(&curve, &u, beta)?,
        local_modulus(&curve, &u, beta, (8.0 * curve.h()).min(curve.length() / 2.0))?,
        lipschitz_sup(&curve, &u)?,
        sobolev_linf_norm(&curve, &u, sigma, q)?,
    ];
    let product = match &phi {
        Some(phi) => Some(product_seminorm_check(&curve, phi, beta, Some((sigma, q)))?),
        None => None,
    };
    emit(
        &json!({
            "field": if phi.is_some() { "phi'" } else { "tau" },
            "seminorms": reports,
            "product_check": product,
            "run": run_info(c, &curve, &params),
        }),
        c.out.as_deref(),
    )
}

fn snapshot_dir(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("flow");
    out.with_file_name(format!("{stem}_snapshots"))
}

pub fn flow(c: &Common, steps: usize, dt: f64) -> CliResult {
    let params = params(c)?;
    let curve = curve(c)?;
    let opts = FlowOptions { quadrature: quadrature(c), ..FlowOptions::default() };
    let d0 = distance_to_circle(&curve);
    let snapshots = c.out.as_deref().map(snapshot_dir);
    if let Some(dir) = &snapshots {
        std::fs::create_dir_all(dir).map_err(ohara::Error::from)?;
    }
    let mut state = FlowState::new(curve, &params, dt, &opts)?;
    let write_snapshot = |state: &FlowState| -> CliResult {
        if let Some(dir) = &snapshots {
            io::write_curve(&state.curve, dir.join(format!("step_{:05}.json", state.step)))?;
        }
        Ok(())
    };
    write_snapshot(&state)?;
    let mut halted = None;
    for _ in 0..steps {
        match flow_step(&state, &params, &opts) {
            Ok(next) => {
                state = next;
                write_snapshot(&state)?;
            }
            Err(e) => {
                halted = Some(e);
                break;
            }
        }
    }
    if let Some(out) = &c.out {
        io::write_flow_trace(&state, out)?;
    }
    emit(
        &json!({
            "steps": state.step,
            "initial_energy": state.energies[0],
            "final_energy": state.energy(),
            "initial_distance_to_circle": d0,
            "final_distance_to_circle": distance_to_circle(&state.curve),
            "length": state.curve.length(),
            "run": run_info(c, &state.curve, &params),
        }),
        None,
    )?;
    match halted {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

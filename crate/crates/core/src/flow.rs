//! L² gradient descent of the energy in a trigonometric basis.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::kernels::EnergyParams;
use crate::quadrature::{energy_with, first_variations, QuadratureOptions};
use crate::synth::trig_basis;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowOptions {
    /// Highest trigonometric mode of the gradient basis.
    pub modes: usize,
    pub dt_min: f64,
    /// Hold the length fixed by removing the dilation component and
    /// rescaling after each step.
    pub fix_length: bool,
    /// Armijo constant of the sufficient-decrease test.
    pub armijo: f64,
    /// Step growth after an accepted step.
    pub growth: f64,
    /// The state is stationary once `|grad| <= gtol * max(E, 1)`.
    pub gtol: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            modes: 6,
            dt_min: 1e-10,
            fix_length: true,
            armijo: 1e-4,
            growth: 1.5,
            gtol: 1e-10,
            quadrature: QuadratureOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub curve: ClosedCurve,
    pub step: usize,
    pub dt: f64,
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    /// Step sizes actually taken; 0 for stationary steps.
    pub dts: Vec<f64>,
    pub target_length: f64,
}

impl FlowState {
    pub fn new(curve: ClosedCurve, params: &EnergyParams, dt: f64, opts: &FlowOptions) -> Result<Self> {
        if !(dt >= 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be >= 0, got {dt}")));
        }
        let e = energy_with(&curve, params, &opts.quadrature)?.value;
        let target_length = curve.length();
        Ok(FlowState { curve, step: 0, dt, energies: vec![e], grad_norms: Vec::new(), dts: Vec::new(), target_length })
    }

    pub fn energy(&self) -> f64 {
        *self.energies.last().expect("energy history is never empty")
    }
}

fn l2_inner(curve: &ClosedCurve, a: &Field, b: &Field) -> f64 {
    curve.h() * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>()
}

/// Coefficients `δE[b_k]` against the orthonormal trigonometric basis
/// with modes `0..=k`, and the field `sum_k δE[b_k] b_k`.
pub fn l2_gradient(
    curve: &ClosedCurve,
    params: &EnergyParams,
    k: usize,
    opts: &QuadratureOptions,
) -> Result<(Field, Vec<f64>)> {
    if k > curve.len() / 2 {
        return Err(Error::InvalidParameter(format!("basis size {k} exceeds M/2 = {}", curve.len() / 2)));
    }
    let basis = trig_basis(curve, k);
    let coef: Vec<f64> = first_variations(curve, &basis, params, opts)?.into_iter().map(|i| i.value).collect();
    let mut grad = Field::zeros(curve.len(), curve.dim());
    for (b, g) in basis.iter().zip(&coef) {
        grad = grad.axpy(*g, b)?;
    }
    Ok((grad, coef))
}

/// `f - centroid`, the velocity of a dilation.
fn dilation(curve: &ClosedCurve) -> Field {
    let c = curve.centroid();
    curve.positions().map_rows(|p, out| {
        for ((o, x), y) in out.iter_mut().zip(p).zip(&c) {
            *o = x - y;
        }
    })
}

fn rescaled(curve: ClosedCurve, length: f64) -> Result<ClosedCurve> {
    let lambda = length / curve.length();
    let c = curve.centroid();
    let pos = curve.positions().map_rows(|p, out| {
        for ((o, x), y) in out.iter_mut().zip(p).zip(&c) {
            *o = y + lambda * (x - y);
        }
    });
    ClosedCurve::from_arclength_positions(pos, length)
}

/// One explicit descent step with backtracking.
pub fn flow_step(state: &FlowState, params: &EnergyParams, opts: &FlowOptions) -> Result<FlowState> {
    let curve = &state.curve;
    let e0 = state.energy();
    let mut next = state.clone();
    next.step += 1;
    if state.dt == 0.0 {
        next.energies.push(e0);
        next.grad_norms.push(f64::NAN);
        next.dts.push(0.0);
        return Ok(next);
    }
    let (mut grad, _) = l2_gradient(curve, params, opts.modes, &opts.quadrature)?;
    if opts.fix_length {
        let d = dilation(curve);
        let c = l2_inner(curve, &grad, &d) / l2_inner(curve, &d, &d);
        grad = grad.axpy(-c, &d)?;
    }
    let gnorm = l2_inner(curve, &grad, &grad).sqrt();
    if gnorm <= opts.gtol * e0.abs().max(1.0) {
        next.energies.push(e0);
        next.grad_norms.push(gnorm);
        next.dts.push(0.0);
        return Ok(next);
    }
    let m = curve.len();
    let mut dt = state.dt;
    while dt >= opts.dt_min {
        let trial = curve.positions().axpy(-dt, &grad)?;
        let attempt = ClosedCurve::from_samples_with_resolution(&trial.rows(), true, m).and_then(|c| {
            let c = if opts.fix_length { rescaled(c, state.target_length)? } else { c };
            let e = energy_with(&c, params, &opts.quadrature)?.value;
            Ok((c, e))
        });
        match attempt {
            Ok((c, e)) if e <= e0 - opts.armijo * dt * gnorm * gnorm && e < e0 => {
                next.curve = c;
                next.energies.push(e);
                next.grad_norms.push(gnorm);
                next.dts.push(dt);
                next.dt = dt * opts.growth;
                return Ok(next);
            }
            Ok(_) => {}
            Err(e) if e.is_numerical() || matches!(e, Error::DegenerateCurve(_)) => {}
            Err(e) => return Err(e),
        }
        dt /= 2.0;
    }
    Err(Error::FlowHalted(format!(
        "no decrease down to dt = {:.3e} at step {} (E = {e0:.12e}, |grad| = {gnorm:.3e})",
        opts.dt_min, next.step
    )))
}

/// Runs `steps` flow steps.
pub fn run_flow(
    curve: ClosedCurve,
    params: &EnergyParams,
    dt: f64,
    steps: usize,
    opts: &FlowOptions,
) -> Result<FlowState> {
    let mut state = FlowState::new(curve, params, dt, opts)?;
    for _ in 0..steps {
        state = flow_step(&state, params, opts)?;
    }
    Ok(state)
}

/// L² distance of the positions to the round circle of the same length,
/// after optimal rigid alignment.
///
/// The circle is `c + r (e1 cos t + e2 sin t)`, `t = 2 pi s / L`, with
/// `c` the centroid and `[e1 e2]` the orthonormal polar factor of the
/// first Fourier coefficients of `f`, which solves the Procrustes problem.
pub fn distance_to_circle(curve: &ClosedCurve) -> f64 {
    let l = curve.length();
    let m = curve.len();
    let n = curve.dim();
    let h = curve.h();
    let c = curve.centroid();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..m {
        let (sn, cs) = (2.0 * PI * curve.s(i) / l).sin_cos();
        for (k, x) in curve.position(i).iter().enumerate() {
            a[k] += x * cs;
            b[k] += x * sn;
        }
    }
    // X^T X for X = [a b], then (X^T X)^(-1/2) in closed form
    let (saa, sab, sbb) = (
        a.iter().map(|x| x * x).sum::<f64>(),
        a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>(),
        b.iter().map(|x| x * x).sum::<f64>(),
    );
    let det = (saa * sbb - sab * sab).max(0.0);
    let sd = det.sqrt();
    let t = (saa + sbb + 2.0 * sd).sqrt();
    // sqrt(S) = (S + sd I) / t
    let (r11, r12, r22) = ((saa + sd) / t, sab / t, (sbb + sd) / t);
    let rdet = r11 * r22 - r12 * r12;
    let (i11, i12, i22) = (r22 / rdet, -r12 / rdet, r11 / rdet);
    let e1: Vec<f64> = (0..n).map(|k| a[k] * i11 + b[k] * i12).collect();
    let e2: Vec<f64> = (0..n).map(|k| a[k] * i12 + b[k] * i22).collect();
    let r = l / (2.0 * PI);
    let mut acc = 0.0;
    for i in 0..m {
        let (sn, cs) = (2.0 * PI * curve.s(i) / l).sin_cos();
        for (k, x) in curve.position(i).iter().enumerate() {
            let d = x - c[k] - r * (e1[k] * cs + e2[k] * sn);
            acc += d * d;
        }
    }
    (acc * h).sqrt()
}

//! Oracles: finite differences of the energy and of the pulled-back
//! density, diagonal limits by Richardson extrapolation, and closed forms
//! for the round circle.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::field::{dot, Field};
use crate::kernels::{density_general_param, phi_unchecked, EnergyParams, MaterialCurve};
use crate::numeric::{gauss_legendre, richardson};
use crate::quadrature::{energy_with, QuadratureOptions};
use crate::spectral::TrigInterp;
use serde::Serialize;
use std::f64::consts::PI;

/// Weighted quantity whose diagonal limit is examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    /// `|Δs|^(alpha - 2) M_alpha`
    MAlpha,
    R1,
    R2,
    S1,
    S2,
    S3,
    S4,
    S5,
    /// `N(phi', psi')` with the `R`/`S` weight.
    NBilinear,
    /// `δ|Δf|^2[phi] / |Δf|^2`, unweighted.
    ChordRatio,
    /// `δ²|Δf|^2[phi, psi] / |Δf|^2`, unweighted.
    ChordRatio2,
}

impl LimitKind {
    pub const ALL: [LimitKind; 11] = [
        LimitKind::MAlpha,
        LimitKind::R1,
        LimitKind::R2,
        LimitKind::S1,
        LimitKind::S2,
        LimitKind::S3,
        LimitKind::S4,
        LimitKind::S5,
        LimitKind::NBilinear,
        LimitKind::ChordRatio,
        LimitKind::ChordRatio2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LimitKind::MAlpha => "M_alpha",
            LimitKind::R1 => "R1",
            LimitKind::R2 => "R2",
            LimitKind::S1 => "S1",
            LimitKind::S2 => "S2",
            LimitKind::S3 => "S3",
            LimitKind::S4 => "S4",
            LimitKind::S5 => "S5",
            LimitKind::NBilinear => "N",
            LimitKind::ChordRatio => "chord_ratio",
            LimitKind::ChordRatio2 => "chord_ratio2",
        }
    }

    pub fn parse(s: &str) -> Option<LimitKind> {
        LimitKind::ALL.iter().copied().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    fn weighted(&self) -> bool {
        !matches!(self, LimitKind::ChordRatio | LimitKind::ChordRatio2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub which: &'static str,
    pub s: f64,
    /// `(|Δs|, weighted value)` along the symmetric approach path.
    pub samples: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub reference: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    /// Relative gap, or absolute gap when the reference vanishes.
    pub gap: f64,
}

/// Evaluates the curve and two fields at arbitrary parameters through
/// their trigonometric interpolants.
struct ContinuousView {
    f: Vec<TrigInterp>,
    phi: Vec<TrigInterp>,
    psi: Vec<TrigInterp>,
    nodes: (Vec<f64>, Vec<f64>),
}

struct Node {
    tau: Vec<f64>,
    dphi: Vec<f64>,
    dpsi: Vec<f64>,
    tdphi: f64,
    tdpsi: f64,
}

type NodeField = fn(&Node) -> &[f64];

fn interps(field: &Field, period: f64) -> Vec<TrigInterp> {
    (0..field.dim()).map(|c| TrigInterp::new(&field.component(c), period)).collect()
}

fn eval_all(ips: &[TrigInterp], t: f64, order: u32) -> Vec<f64> {
    ips.iter().map(|ip| ip.eval_derivative(t, order)).collect()
}

/// Covariance form of `N`: `Δs sum w (u - ū)(v - v̄) / |Δf|^2`.
fn n_nodes(w: &[f64], ds: f64, chord_sq: f64, u: &[&[f64]], v: &[&[f64]]) -> f64 {
    let d = u[0].len();
    let mut ubar = vec![0.0; d];
    let mut vbar = vec![0.0; d];
    for ((wk, uk), vk) in w.iter().zip(u).zip(v) {
        for c in 0..d {
            ubar[c] += wk * uk[c] / ds;
            vbar[c] += wk * vk[c] / ds;
        }
    }
    let mut acc = 0.0;
    for ((wk, uk), vk) in w.iter().zip(u).zip(v) {
        let mut s = 0.0;
        for c in 0..d {
            s += (uk[c] - ubar[c]) * (vk[c] - vbar[c]);
        }
        acc += wk * s;
    }
    ds * acc / chord_sq
}

impl ContinuousView {
    fn new(curve: &ClosedCurve, phi: &Field, psi: &Field) -> Result<Self> {
        curve.check_field(phi)?;
        curve.check_field(psi)?;
        if phi.dim() != curve.dim() || psi.dim() != curve.dim() {
            return Err(Error::DimensionMismatch("perturbations must be vector fields in R^n".into()));
        }
        let l = curve.length();
        Ok(ContinuousView {
            f: interps(curve.positions(), l),
            phi: interps(phi, l),
            psi: interps(psi, l),
            nodes: gauss_legendre(24),
        })
    }

    fn node(&self, t: f64) -> Node {
        let mut tau = eval_all(&self.f, t, 1);
        let n = dot(&tau, &tau).sqrt();
        tau.iter_mut().for_each(|x| *x /= n);
        let dphi = eval_all(&self.phi, t, 1);
        let dpsi = eval_all(&self.psi, t, 1);
        let tdphi = dot(&tau, &dphi);
        let tdpsi = dot(&tau, &dpsi);
        Node { tau, dphi, dpsi, tdphi, tdpsi }
    }

    /// Weighted value of `which` at `(s + ds/2, s - ds/2)`.
    fn weighted(&self, s: f64, ds: f64, which: LimitKind, alpha: f64, beta: f64) -> f64 {
        let (s1, s2) = (s + ds / 2.0, s - ds / 2.0);
        let (x, wq) = &self.nodes;
        let w: Vec<f64> = wq.iter().map(|wk| wk * ds / 2.0).collect();
        let nodes: Vec<Node> = x.iter().map(|xk| self.node(s2 + ds * (xk + 1.0) / 2.0)).collect();
        let d = self.f.len();
        let mut chord = vec![0.0; d];
        for (wk, nd) in w.iter().zip(&nodes) {
            for c in 0..d {
                chord[c] += wk * nd.tau[c];
            }
        }
        let chord_sq = dot(&chord, &chord);
        let n = |u: NodeField, v: NodeField| {
            let uu: Vec<&[f64]> = nodes.iter().map(u).collect();
            let vv: Vec<&[f64]> = nodes.iter().map(v).collect();
            n_nodes(&w, ds, chord_sq, &uu, &vv)
        };
        let (tau, dphi, dpsi, tdphi, tdpsi): (NodeField, NodeField, NodeField, NodeField, NodeField) = (
            |nd| &nd.tau,
            |nd| &nd.dphi,
            |nd| &nd.dpsi,
            |nd| std::slice::from_ref(&nd.tdphi),
            |nd| std::slice::from_ref(&nd.tdpsi),
        );
        let n_tau = n(tau, tau);
        let diff = |ips: &[TrigInterp]| -> Vec<f64> {
            eval_all(ips, s1, 0).iter().zip(eval_all(ips, s2, 0)).map(|(a, b)| a - b).collect()
        };
        let dphi_end = diff(&self.phi);
        let dpsi_end = diff(&self.psi);
        let ka = dot(&chord, &dphi_end) / chord_sq;
        let kb = dot(&chord, &dpsi_end) / chord_sq;
        let kab = dot(&dphi_end, &dpsi_end) / chord_sq;
        let nta = n(tau, dphi);
        let ntb = n(tau, dpsi);
        let r1a = -2.0 * ka * n_tau;
        let r1b = -2.0 * kb * n_tau;
        let weight = ds.powf(alpha - 2.0 * beta);
        let rs_weight = weight * chord_sq.powf(-alpha / 2.0);
        match which {
            LimitKind::MAlpha => weight * phi_unchecked(n_tau.max(0.0), alpha).0 * chord_sq.powf(-alpha / 2.0),
            LimitKind::R1 => rs_weight * r1a,
            LimitKind::R2 => rs_weight * 2.0 * nta,
            LimitKind::S1 => rs_weight * -2.0 * (kab - 2.0 * ka * kb) * n_tau,
            LimitKind::S2 => rs_weight * (-ka * (r1b + 2.0 * ntb) - kb * (r1a + 2.0 * nta)),
            LimitKind::S3 => rs_weight * (-2.0 * kb * nta - 2.0 * ka * ntb),
            LimitKind::S4 => rs_weight * 2.0 * n(dphi, dpsi),
            LimitKind::S5 => rs_weight * -2.0 * n(tdphi, tdpsi),
            LimitKind::NBilinear => rs_weight * n(dphi, dpsi),
            LimitKind::ChordRatio => 2.0 * ka,
            LimitKind::ChordRatio2 => 2.0 * kab,
        }
    }
}

/// Closed-form diagonal limit at grid point `i` for `C^2` data.
fn reference_limit(curve: &ClosedCurve, view: &ContinuousView, i: usize, which: LimitKind, alpha: f64) -> f64 {
    let s = curve.s(i);
    let tau = curve.tangent(i);
    let kappa = curve.curvature(i);
    let k2 = dot(kappa, kappa);
    let d1a = eval_all(&view.phi, s, 1);
    let d2a = eval_all(&view.phi, s, 2);
    let d1b = eval_all(&view.psi, s, 1);
    let d2b = eval_all(&view.psi, s, 2);
    let ta = dot(tau, &d1a);
    let tb = dot(tau, &d1b);
    let sixth = 1.0 / 6.0;
    match which {
        LimitKind::MAlpha => alpha / 24.0 * k2,
        LimitKind::R1 => -sixth * ta * k2,
        LimitKind::R2 => sixth * dot(kappa, &d2a),
        LimitKind::S1 => -sixth * (dot(&d1a, &d1b) - 2.0 * ta * tb) * k2,
        LimitKind::S2 => -sixth * ta * (dot(kappa, &d2b) - tb * k2) - sixth * tb * (dot(kappa, &d2a) - ta * k2),
        LimitKind::S3 => -sixth * tb * dot(kappa, &d2a) - sixth * ta * dot(kappa, &d2b),
        LimitKind::S4 => sixth * dot(&d2a, &d2b),
        LimitKind::S5 => -sixth * (dot(tau, &d2a) + dot(&d1a, kappa)) * (dot(tau, &d2b) + dot(&d1b, kappa)),
        LimitKind::NBilinear => dot(&d2a, &d2b) / 12.0,
        LimitKind::ChordRatio => 2.0 * ta,
        LimitKind::ChordRatio2 => 2.0 * dot(&d1a, &d1b),
    }
}

/// Options for [`diagonal_limit`].
#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    /// Largest `|Δs|`; defaults to `L / 16`.
    pub h0: Option<f64>,
    /// Number of halvings; at least 4 samples are always used.
    pub levels: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { h0: None, levels: 6 }
    }
}

/// Diagonal limit of a weighted pair quantity at grid point `i`, reached
/// along `(s + h/2, s - h/2)`, `h = h0 / 2^k`.
///
/// The weight is `|Δs|^(alpha - 2 beta)` for `M_alpha` and
/// `|Δs|^(alpha - 2 beta) / |Δf|^alpha` for the `R`, `S` and `N` terms.
/// For `beta < 1` the reference is 0. `N` is evaluated on `(phi', psi')`.
pub fn diagonal_limit(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    params: &EnergyParams,
    i: usize,
    which: LimitKind,
    opts: &LimitOptions,
) -> Result<LimitReport> {
    if i >= curve.len() {
        return Err(Error::InvalidParameter(format!("sample index {i} out of range")));
    }
    let view = ContinuousView::new(curve, phi, psi)?;
    let beta = params.beta();
    let alpha = params.alpha();
    let s = curve.s(i);
    let h0 = opts.h0.unwrap_or(curve.length() / 16.0);
    let levels = opts.levels.max(4);
    let samples: Vec<(f64, f64)> = (0..levels)
        .map(|k| {
            let h = h0 / 2f64.powi(k as i32);
            (h, view.weighted(s, h, which, alpha, beta))
        })
        .collect();
    let values: Vec<f64> = samples.iter().map(|x| x.1).collect();
    let e0 = if which.weighted() && beta < 1.0 { 2.0 - 2.0 * beta } else { 2.0 };
    let extrapolated = richardson(&values, 2.0, e0, 2.0);
    let reference = if which.weighted() && beta < 1.0 { 0.0 } else { reference_limit(curve, &view, i, which, alpha) };
    let abs_gap = (extrapolated - reference).abs();
    let rel_gap = if reference != 0.0 { abs_gap / reference.abs() } else { f64::INFINITY };
    let gap = if reference.abs() > 1e-12 { rel_gap } else { abs_gap };
    Ok(LimitReport { which: which.name(), s, samples, extrapolated, reference, abs_gap, rel_gap, gap })
}

/// Central finite differences of the energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdResult {
    pub eps: f64,
    /// Difference quotient at `eps`.
    pub fd: f64,
    /// Difference quotient at `eps / 2`.
    pub fd_half: f64,
    /// `(4 fd_half - fd) / 3`.
    pub richardson: f64,
}

impl FdResult {
    fn new(eps: f64, fd: f64, fd_half: f64) -> Self {
        FdResult { eps, fd, fd_half, richardson: (4.0 * fd_half - fd) / 3.0 }
    }

    /// Observed order of the `eps` vs `eps/2` quotients against `exact`.
    pub fn observed_order(&self, exact: f64) -> f64 {
        ((self.fd - exact).abs() / (self.fd_half - exact).abs()).log2()
    }
}

/// Default energy-level step `2e-4 L / |phi|_inf`.
pub fn default_fd_eps(curve: &ClosedCurve, phi: &Field) -> f64 {
    let sup = phi.sup_norm();
    if sup > 0.0 {
        2e-4 * curve.length() / sup
    } else {
        1e-3
    }
}

/// Energy of `f + sum eps_k phi_k`, re-parametrised by arclength on the
/// same number of samples.
pub fn perturbed_energy(
    curve: &ClosedCurve,
    terms: &[(&Field, f64)],
    params: &EnergyParams,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let mut pos = curve.positions().clone();
    let mut eps_max = 0.0f64;
    for (phi, eps) in terms {
        curve.check_field(phi)?;
        if phi.dim() != curve.dim() {
            return Err(Error::DimensionMismatch("perturbation must be a vector field in R^n".into()));
        }
        pos = pos.axpy(*eps, phi)?;
        eps_max = eps_max.max(eps.abs());
    }
    let wrap = |e: Error| Error::PerturbationRejected { eps: eps_max, source: Box::new(e) };
    let c = ClosedCurve::from_samples_with_resolution(&pos.rows(), true, curve.len()).map_err(wrap)?;
    energy_with(&c, params, opts).map(|e| e.value).map_err(wrap)
}

/// `(E(f + eps phi) - E(f - eps phi)) / (2 eps)` at `eps` and `eps / 2`.
pub fn fd_energy_gradient(
    curve: &ClosedCurve,
    phi: &Field,
    params: &EnergyParams,
    eps: Option<f64>,
    opts: &QuadratureOptions,
) -> Result<FdResult> {
    let eps = eps.unwrap_or_else(|| default_fd_eps(curve, phi));
    let q = |e: f64| -> Result<f64> {
        Ok((perturbed_energy(curve, &[(phi, e)], params, opts)? - perturbed_energy(curve, &[(phi, -e)], params, opts)?)
            / (2.0 * e))
    };
    Ok(FdResult::new(eps, q(eps)?, q(eps / 2.0)?))
}

/// Mixed second difference of `E(f + e1 phi + e2 psi)` on the four
/// corners `(±eps, ±eps)`, at `eps` and `eps / 2`.
pub fn fd_energy_hessian(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    params: &EnergyParams,
    eps: Option<f64>,
    opts: &QuadratureOptions,
) -> Result<FdResult> {
    let eps = eps.unwrap_or_else(|| 5.0 * default_fd_eps(curve, phi).min(default_fd_eps(curve, psi)));
    let e = |a: f64, b: f64| perturbed_energy(curve, &[(phi, a), (psi, b)], params, opts);
    let q = |h: f64| -> Result<f64> { Ok((e(h, h)? - e(h, -h)? - e(-h, h)? + e(-h, -h)?) / (4.0 * h * h)) };
    Ok(FdResult::new(eps, q(eps)?, q(eps / 2.0)?))
}

/// Pointwise oracle for `G`: Richardson-combined central difference in
/// `eps` of the pulled-back density at `(i, j)`.
pub fn fd_first_variation_density(
    curve: &ClosedCurve,
    phi: &Field,
    i: usize,
    j: usize,
    params: &EnergyParams,
    eps: f64,
) -> Result<FdResult> {
    let f = |e: f64| density_general_param(&MaterialCurve::perturbed(curve, &[(phi, e)])?, i, j, params);
    let q = |e: f64| -> Result<f64> { Ok((f(e)? - f(-e)?) / (2.0 * e)) };
    Ok(FdResult::new(eps, q(eps)?, q(eps / 2.0)?))
}

/// Pointwise oracle for `H`: four-corner mixed difference of the
/// pulled-back density.
pub fn fd_second_variation_density(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    i: usize,
    j: usize,
    params: &EnergyParams,
    eps: f64,
) -> Result<FdResult> {
    let f =
        |a: f64, b: f64| density_general_param(&MaterialCurve::perturbed(curve, &[(phi, a), (psi, b)])?, i, j, params);
    let q = |h: f64| -> Result<f64> { Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h)) };
    Ok(FdResult::new(eps, q(eps)?, q(eps / 2.0)?))
}

/// `ln(sin y / y)`, accurate for small `y`.
fn ln_sinc(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let y2 = y * y;
        -y2 * (1.0 / 6.0 + y2 * (1.0 / 180.0 + y2 * (1.0 / 2835.0 + y2 * (1.0 / 37800.0 + y2 / 467775.0))))
    } else {
        (y.sin() / y).ln()
    }
}

/// Unit-circle density at arc separation `x` in `(0, pi]`:
/// `|Δf|^(-alpha p) (1 - (|Δf| / x)^alpha)^p` with `|Δf| = 2 sin(x/2)`.
/// No constraint is placed on `alpha`, `p`.
pub fn circle_density(alpha: f64, p: f64, x: f64) -> f64 {
    if x < 1e-30 {
        // leading term; the relative correction is O(x^2)
        return (alpha / 24.0).powf(p) * x.powf((2.0 - alpha) * p);
    }
    let chord = 2.0 * (x / 2.0).sin();
    let bracket = -(alpha * ln_sinc(x / 2.0)).exp_m1();
    chord.powf(-alpha * p) * bracket.powf(p)
}

/// `x^gamma` times [`circle_density`].
pub fn circle_weighted(alpha: f64, p: f64, gamma: f64, x: f64) -> f64 {
    x.powf(gamma) * circle_density(alpha, p, x)
}

#[derive(Debug, Clone, Serialize)]
pub struct CircleRow {
    pub ds: f64,
    pub chord: f64,
    pub density: f64,
    /// `|Δs|^((alpha - 2) p)` times the density.
    pub weighted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CircleTable {
    pub alpha: f64,
    pub p: f64,
    pub rows: Vec<CircleRow>,
    /// `(alpha / 24)^p`
    pub limit: f64,
}

/// Closed-form unit-circle density table.
pub fn circle_reference(alpha: f64, p: f64, ds: &[f64]) -> Result<CircleTable> {
    if let Some(x) = ds.iter().find(|x| !(**x > 0.0 && **x <= PI)) {
        return Err(Error::Domain(format!("arc separation {x} outside (0, pi]")));
    }
    let rows = ds
        .iter()
        .map(|&x| CircleRow {
            ds: x,
            chord: 2.0 * (x / 2.0).sin(),
            density: circle_density(alpha, p, x),
            weighted: circle_weighted(alpha, p, (alpha - 2.0) * p, x),
        })
        .collect();
    Ok(CircleTable { alpha, p, rows, limit: (alpha / 24.0).powf(p) })
}

/// Tanh-sinh quadrature on `[a, b]`, tolerant of integrable endpoint
/// singularities.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let r = (b - a) / 2.0;
    let half_pi = PI / 2.0;
    let eval = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        let ch = u.cosh();
        let w = half_pi * t.cosh() / (ch * ch);
        // distance to the nearer endpoint, computed without cancellation
        let dist = r / (u.abs().exp() * ch);
        let (xl, xr) = (a + dist, b - dist);
        let x = if t < 0.0 { xl } else { xr };
        if dist <= 0.0 || !x.is_finite() {
            return 0.0;
        }
        w * f(x)
    };
    let tmax = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h * r;
    for _ in 0..12 {
        h /= 2.0;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h * r;
        if (cur - prev).abs() <= tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `E_(alpha,p)` of the circle of the given radius by one-dimensional
/// quadrature of the closed-form density.
pub fn circle_energy_reference(alpha: f64, p: f64, radius: f64) -> f64 {
    let unit = 2.0 * PI * 2.0 * tanh_sinh(|x| circle_density(alpha, p, x), 0.0, PI, 1e-15);
    unit * radius.powf(2.0 - alpha * p)
}

//! Fractional Sobolev and Hölder seminorms of fields on a curve.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::field::{dot, norm, Field};
use crate::quadrature::{column_sums, integrate_columns, QuadratureOptions};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeminormKind {
    Gagliardo,
    Holder,
    LocalHolder,
    LipschitzSup,
    SobolevLinf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormReport {
    pub kind: SeminormKind,
    pub value: f64,
    pub sigma: Option<f64>,
    pub q: Option<f64>,
    pub beta: Option<f64>,
    pub radius: Option<f64>,
    pub m: usize,
    /// Quadrature error estimate of the value (Gagliardo only).
    pub error_estimate: Option<f64>,
    /// Upper bound on the diagonal band's share of `[u]^q`, from
    /// `|Δu| <= |u'|_inf |Δs|` (Gagliardo only).
    pub band_bound: Option<f64>,
}

impl SeminormReport {
    fn new(kind: SeminormKind, value: f64, m: usize) -> Self {
        SeminormReport {
            kind,
            value,
            sigma: None,
            q: None,
            beta: None,
            radius: None,
            m,
            error_estimate: None,
            band_bound: None,
        }
    }

    fn clone_kind(&self, kind: SeminormKind) -> Self {
        SeminormReport { kind, ..self.clone() }
    }
}

fn diff_norm(u: &Field, i: usize, j: usize) -> f64 {
    let (a, b) = (u.row(i), u.row(j));
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `[u]_(W^(sigma,q)) = (∬ |Δu|^q / |Δs|^(1 + sigma q))^(1/q)` with the
/// short-arc `|Δs|`.
pub fn gagliardo_seminorm(curve: &ClosedCurve, u: &Field, sigma: f64, q: f64) -> Result<SeminormReport> {
    gagliardo_seminorm_with(curve, u, sigma, q, &QuadratureOptions::default())
}

pub fn gagliardo_seminorm_with(
    curve: &ClosedCurve,
    u: &Field,
    sigma: f64,
    q: f64,
    opts: &QuadratureOptions,
) -> Result<SeminormReport> {
    if !(sigma > 0.0 && sigma < 1.0) || !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < sigma < 1 and q >= 1, got sigma = {sigma}, q = {q}")));
    }
    curve.check_field(u)?;
    let h = curve.h();
    let m = curve.len();
    let e = 1.0 + sigma * q;
    let cols = column_sums(curve, opts.band, |fr| Ok(diff_norm(u, fr.i, fr.j).powf(q) / fr.d.powf(e)))?;
    let gamma = q - e;
    let int = integrate_columns(&cols, h, gamma, opts);
    let total = int.value.max(0.0);
    let value = total.powf(1.0 / q);
    let du = u.derivative(curve.length()).sup_norm();
    let x_end = (opts.band as f64 + 0.5) * h;
    let band = 2.0 * curve.length() * du.powf(q) * x_end.powf(gamma + 1.0) / (gamma + 1.0);
    // d(t^(1/q)) = t^(1/q - 1) / q dt
    let err = if total > 0.0 { int.error_estimate * total.powf(1.0 / q - 1.0) / q } else { int.error_estimate };
    Ok(SeminormReport {
        sigma: Some(sigma),
        q: Some(q),
        error_estimate: Some(err),
        band_bound: Some(band),
        ..SeminormReport::new(SeminormKind::Gagliardo, value, m)
    })
}

/// `sup_(0 < |Δs| <= R) |Δu| / |Δs|^beta` over grid pairs. For
/// `beta = 1` the diagonal limit `|u'|_inf` is included.
pub fn local_modulus(curve: &ClosedCurve, u: &Field, beta: f64, radius: f64) -> Result<SeminormReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
    }
    let l = curve.length();
    if !(radius > 0.0 && radius <= l / 2.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("radius must lie in (0, L/2], got {radius}")));
    }
    curve.check_field(u)?;
    let m = curve.len();
    let h = curve.h();
    let kmax = (((radius / h) * (1.0 + 1e-12)).floor() as usize).min(m / 2);
    let mut sup = (0..m)
        .into_par_iter()
        .map(|j| {
            (1..=kmax).fold(0.0f64, |acc, k| {
                let i = (j + k) % m;
                acc.max(diff_norm(u, i, j) / (k as f64 * h).powf(beta))
            })
        })
        .reduce(|| 0.0, f64::max);
    if beta == 1.0 {
        sup = sup.max(u.derivative(l).sup_norm());
    }
    let kind = if radius >= l / 2.0 { SeminormKind::Holder } else { SeminormKind::LocalHolder };
    Ok(SeminormReport { beta: Some(beta), radius: Some(radius), ..SeminormReport::new(kind, sup, m) })
}

/// `[u]_(C^(0,beta))`, the local modulus at `R = L/2`.
pub fn holder_seminorm(curve: &ClosedCurve, u: &Field, beta: f64) -> Result<SeminormReport> {
    local_modulus(curve, u, beta, curve.length() / 2.0)
}

/// `|u'|_inf`.
pub fn lipschitz_sup(curve: &ClosedCurve, u: &Field) -> Result<SeminormReport> {
    curve.check_field(u)?;
    let v = u.derivative(curve.length()).sup_norm();
    Ok(SeminormReport::new(SeminormKind::LipschitzSup, v, curve.len()))
}

/// Flags `u` as little-Hölder at this resolution when the local modulus
/// at `R = 8L/M` falls below `tol` times the Hölder seminorm.
pub fn is_little_holder(curve: &ClosedCurve, u: &Field, beta: f64, tol: f64) -> Result<bool> {
    let r = (8.0 * curve.h()).min(curve.length() / 2.0);
    let local = local_modulus(curve, u, beta, r)?.value;
    let full = holder_seminorm(curve, u, beta)?.value;
    Ok(full == 0.0 || local < tol * full)
}

/// `max([u]_(W^(sigma,q)) + |u|_(L^q), |u|_inf)`.
pub fn sobolev_linf_norm(curve: &ClosedCurve, u: &Field, sigma: f64, q: f64) -> Result<SeminormReport> {
    let g = gagliardo_seminorm(curve, u, sigma, q)?;
    let h = curve.h();
    let lq = ((0..u.len()).map(|i| norm(u.row(i)).powf(q)).sum::<f64>() * h).powf(1.0 / q);
    let value = (g.value + lq).max(u.sup_norm());
    Ok(SeminormReport { value, ..g.clone_kind(SeminormKind::SobolevLinf) })
}

/// Both sides of `[tau.phi']_beta <= |tau|_inf [phi']_beta + [tau]_beta |phi'|_inf`.
#[derive(Debug, Clone, Serialize)]
pub struct ProductCheck {
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / rhs`, or `rhs - lhs` when `rhs = 0`.
    pub margin: f64,
    /// `[tau.phi']_(W^(sigma,q)) / ([phi']_(W^(sigma,q)) + |phi'|_inf)`,
    /// the constant of the fractional-Sobolev analogue.
    pub gagliardo_ratio: Option<f64>,
}

pub fn product_seminorm_check(
    curve: &ClosedCurve,
    phi: &Field,
    beta: f64,
    gagliardo: Option<(f64, f64)>,
) -> Result<ProductCheck> {
    curve.check_field(phi)?;
    if phi.dim() != curve.dim() {
        return Err(Error::DimensionMismatch("perturbation must be a vector field in R^n".into()));
    }
    let l = curve.length();
    let dphi = phi.derivative(l);
    let tau = curve.tangents();
    let prod = tau.dot(&dphi)?;
    let lhs = holder_seminorm(curve, &prod, beta)?.value;
    let tau_sup = (0..tau.len()).map(|i| norm(tau.row(i))).fold(0.0, f64::max);
    let rhs = tau_sup * holder_seminorm(curve, &dphi, beta)?.value
        + holder_seminorm(curve, tau, beta)?.value * dphi.sup_norm();
    let margin = if rhs > 0.0 { (rhs - lhs) / rhs } else { rhs - lhs };
    let gagliardo_ratio = match gagliardo {
        Some((sigma, q)) => {
            let top = gagliardo_seminorm(curve, &prod, sigma, q)?.value;
            let bottom = gagliardo_seminorm(curve, &dphi, sigma, q)?.value + dphi.sup_norm();
            Some(if bottom > 0.0 { top / bottom } else { 0.0 })
        }
        None => None,
    };
    Ok(ProductCheck { beta, lhs, rhs, margin, gagliardo_ratio })
}

/// Pointwise `|Δ(tau.phi')|` against its bound at one pair; used by
/// property tests.
pub fn product_pair_bound(curve: &ClosedCurve, dphi: &Field, i: usize, j: usize) -> (f64, f64) {
    let (ti, tj) = (curve.tangent(i), curve.tangent(j));
    let (pi, pj) = (dphi.row(i), dphi.row(j));
    let lhs = (dot(ti, pi) - dot(tj, pj)).abs();
    let dp: Vec<f64> = pi.iter().zip(pj).map(|(a, b)| a - b).collect();
    let dt: Vec<f64> = ti.iter().zip(tj).map(|(a, b)| a - b).collect();
    (lhs, norm(ti) * norm(&dp) + norm(&dt) * norm(pj))
}

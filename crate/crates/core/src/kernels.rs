//! Scalar kernels of the O'Hara energies: `phi_alpha`, the bilinear forms
//! `N` and `K`, and the densities built from them.

use crate::curve::{ClosedCurve, PairFrame};
use crate::error::{Error, Result};
use crate::field::{dot, norm, Field, PrefixIntegral};
use crate::numeric::Dd;
use serde::{Deserialize, Serialize};

/// Values of `N(tau)` below zero by more than this are reported as errors.
pub const NEGATIVE_N_TOL: f64 = 1e-12;

/// Exponents `alpha`, `p` of the energy and the Hölder weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    alpha: f64,
    p: f64,
    beta: f64,
}

impl EnergyParams {
    /// Requires `2 <= alpha p < 2p + 1` and `p >= 1`. `beta` defaults to
    /// `min(alpha / 2, 1)`.
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha.is_finite() && p.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha}, p = {p}")));
        }
        let ap = alpha * p;
        if !(2.0 <= ap && ap < 2.0 * p + 1.0) {
            return Err(Error::ParamConstraint { alpha, p });
        }
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        Ok(EnergyParams { alpha, p, beta: (alpha / 2.0).min(1.0) })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `sigma = (alpha p - 1) / (2p)`.
    pub fn sigma(&self) -> f64 {
        (self.alpha * self.p - 1.0) / (2.0 * self.p)
    }

    /// Exponent `(2 - alpha) p` of the density's behaviour near the
    /// diagonal.
    pub fn diagonal_exponent(&self) -> f64 {
        (2.0 - self.alpha) * self.p
    }
}

/// `phi_alpha(t) = 1 - (1 + t)^(-alpha/2)` and its first two derivatives.
pub fn phi_alpha(t: f64, alpha: f64) -> Result<(f64, f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("phi_alpha needs t >= 0, got {t}")));
    }
    Ok(phi_unchecked(t, alpha))
}

#[inline]
pub(crate) fn phi_unchecked(t: f64, alpha: f64) -> (f64, f64, f64) {
    let a = alpha / 2.0;
    let l = t.ln_1p();
    let phi = -(-a * l).exp_m1();
    let d1 = a * (-(a + 1.0) * l).exp();
    let d2 = -a * (a + 1.0) * (-(a + 2.0) * l).exp();
    (phi, d1, d2)
}

/// `[ds * Iuv - Iu . Iv] / |Δf|^2` from precomputed arc integrals.
#[inline]
pub fn n_from_integrals(ds: f64, iuv: f64, iu: &[f64], iv: &[f64], chord_sq: f64) -> f64 {
    let mut acc = Dd::ZERO.add_prod(ds, iuv);
    for (a, b) in iu.iter().zip(iv) {
        acc = acc.add_prod(-a, *b);
    }
    acc.value() / chord_sq
}

/// Prefix caches for evaluating `N(u, v)` at any pair in O(1).
#[derive(Debug, Clone)]
pub struct BilinearForm {
    u: PrefixIntegral,
    v: Option<PrefixIntegral>,
    uv: PrefixIntegral,
}

impl BilinearForm {
    pub fn new(curve: &ClosedCurve, u: &Field, v: &Field) -> Result<Self> {
        curve.check_field(u)?;
        let uv = curve.prefix(&u.dot(v)?)?;
        let pu = curve.prefix(u)?;
        let pv = if u == v { None } else { Some(curve.prefix(v)?) };
        Ok(BilinearForm { u: pu, v: pv, uv })
    }

    pub fn eval(&self, pair: &PairFrame) -> f64 {
        let iu = self.u.arc(pair.j, pair.steps);
        let iuv = self.uv.arc_component(pair.j, pair.steps, 0);
        match &self.v {
            None => n_from_integrals(pair.ds, iuv, &iu, &iu, pair.chord_sq),
            Some(v) => {
                let iv = v.arc(pair.j, pair.steps);
                n_from_integrals(pair.ds, iuv, &iu, &iv, pair.chord_sq)
            }
        }
    }
}

/// `N(u, v)` at one pair. Builds the prefix caches on every call; use
/// [`BilinearForm`] for repeated evaluation.
pub fn n_bilinear(curve: &ClosedCurve, u: &Field, v: &Field, pair: &PairFrame) -> Result<f64> {
    Ok(BilinearForm::new(curve, u, v)?.eval(pair))
}

/// `N(tau) = N(tau, tau)` without clamping.
#[inline]
pub fn n_tau_raw(curve: &ClosedCurve, pair: &PairFrame) -> f64 {
    let itt = curve.tangent_sq_prefix().arc_component(pair.j, pair.steps, 0);
    n_from_integrals(pair.ds, itt, &pair.chord, &pair.chord, pair.chord_sq)
}

/// `N(tau)` clamped at zero, or an error if it is negative beyond round-off.
#[inline]
pub fn n_tau(curve: &ClosedCurve, pair: &PairFrame) -> Result<f64> {
    let n = n_tau_raw(curve, pair);
    if n < -NEGATIVE_N_TOL {
        return Err(Error::NegativeN { i: pair.i, j: pair.j, value: n });
    }
    Ok(n.max(0.0))
}

/// `K(u, v) = Δu . Δv / |Δf|^2` with `Δ` the difference between `s_i`
/// and `s_j`.
pub fn k_bilinear(u: &Field, v: &Field, pair: &PairFrame) -> f64 {
    let (ui, uj, vi, vj) = (u.row(pair.i), u.row(pair.j), v.row(pair.i), v.row(pair.j));
    let s: f64 = (0..ui.len()).map(|c| (ui[c] - uj[c]) * (vi[c] - vj[c])).sum();
    s / pair.chord_sq
}

/// `K(f, v)` using the pair's chord for `Δf`.
#[inline]
pub fn k_chord(v: &Field, pair: &PairFrame) -> f64 {
    let (vi, vj) = (v.row(pair.i), v.row(pair.j));
    let s: f64 = pair.chord.iter().enumerate().map(|(c, f)| f * (vi[c] - vj[c])).sum();
    s / pair.chord_sq
}

/// `M_alpha = phi_alpha(N(tau)) / |Δf|^alpha`.
pub fn m_alpha(curve: &ClosedCurve, pair: &PairFrame, params: &EnergyParams) -> Result<f64> {
    let n = n_tau(curve, pair)?;
    Ok(phi_unchecked(n, params.alpha).0 / pair.chord_sq.powf(params.alpha / 2.0))
}

/// The original form `|Δf|^-alpha - D^-alpha`, kept as a cross-check.
pub fn m_alpha_difference(pair: &PairFrame, alpha: f64) -> f64 {
    pair.chord_sq.powf(-alpha / 2.0) - pair.d.powf(-alpha)
}

/// `M_(alpha,p) = M_alpha^p`.
pub fn density(curve: &ClosedCurve, pair: &PairFrame, params: &EnergyParams) -> Result<f64> {
    Ok(m_alpha(curve, pair, params)?.powf(params.p))
}

/// `D^((alpha - 2 beta) p) M_(alpha,p)`.
pub fn weighted_density(curve: &ClosedCurve, pair: &PairFrame, params: &EnergyParams, beta: f64) -> Result<f64> {
    let w = pair.d.powf((params.alpha - 2.0 * beta) * params.p);
    Ok(w * density(curve, pair, params)?)
}

/// A perturbed curve `g = f + sum eps_k phi_k` kept on the material grid
/// of `f`, with speeds `|g'|`. Used as a finite-difference oracle.
///
/// Chords are arc integrals of `g'`, matching the tangent-integral chords
/// of [`ClosedCurve`].
#[derive(Debug, Clone)]
pub struct MaterialCurve {
    velocity_prefix: PrefixIntegral,
    speeds: Vec<f64>,
    speed_prefix: PrefixIntegral,
    total: f64,
}

impl MaterialCurve {
    /// From samples of `g'` on a uniform grid of the given period.
    pub fn new(velocity: &Field, period: f64) -> Result<Self> {
        let speeds: Vec<f64> = (0..velocity.len()).map(|i| norm(velocity.row(i))).collect();
        let speed_prefix = PrefixIntegral::new(&Field::scalar(speeds.clone())?, period);
        let total = speed_prefix.total()[0];
        Ok(MaterialCurve { velocity_prefix: PrefixIntegral::new(velocity, period), speeds, speed_prefix, total })
    }

    /// `g' = tau + sum eps_k phi_k'`.
    pub fn perturbed(curve: &ClosedCurve, terms: &[(&Field, f64)]) -> Result<Self> {
        let l = curve.length();
        let mut vel = curve.tangents().clone();
        for (phi, eps) in terms {
            curve.check_field(phi)?;
            vel = vel.axpy(*eps, &phi.derivative(l))?;
        }
        Self::new(&vel, l)
    }

    pub fn speed(&self, i: usize) -> f64 {
        self.speeds[i]
    }

    pub fn length(&self) -> f64 {
        self.total
    }
}

/// `(|Δg|^-alpha - D_g^-alpha)^p |g'(s_i)| |g'(s_j)|` in material
/// coordinates, with `D_g` the intrinsic distance along `g`.
pub fn density_general_param(mc: &MaterialCurve, i: usize, j: usize, params: &EnergyParams) -> Result<f64> {
    if i == j {
        return Err(Error::Diagonal { i, j });
    }
    let m = mc.speeds.len();
    let k = ((i + m - j) % m) as isize;
    let arc = mc.speed_prefix.arc_component(j, k, 0);
    let d = arc.min(mc.total - arc);
    let diff = mc.velocity_prefix.arc(j, k);
    let chord = dot(&diff, &diff).sqrt();
    if !(chord > 1e-9 * mc.total) {
        return Err(Error::NotBiLipschitz { constant: d / chord, cap: 1e9 });
    }
    let alpha = params.alpha;
    let m_a = chord.powf(-alpha) - d.powf(-alpha);
    Ok(m_a.max(0.0).powf(params.p) * mc.speeds[i] * mc.speeds[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(m: usize) -> ClosedCurve {
        let pts: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        ClosedCurve::from_samples(&pts, true).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(EnergyParams::new(2.0, 1.0).is_ok());
        let e = EnergyParams::new(3.0, 0.5).unwrap_err();
        assert!(e.to_string().contains("constraint 2 <= alpha*p < 2p+1 violated"));
        assert!(EnergyParams::new(3.0, 1.0).is_err());
        let p = EnergyParams::new(2.4, 1.0).unwrap();
        assert!((p.sigma() - 0.7).abs() < 1e-15);
        assert_eq!(p.beta(), 1.0);
        assert_eq!(EnergyParams::new(1.2, 2.0).unwrap().beta(), 0.6);
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi_alpha(0.0, 2.4).unwrap().0, 0.0);
        let (f, d1, d2) = phi_alpha(1.0, 2.0).unwrap();
        assert!((f - 0.5).abs() < 1e-15 && (d1 - 0.25).abs() < 1e-15 && (d2 + 0.25).abs() < 1e-15);
        assert!(phi_alpha(-1e-3, 2.0).is_err());
        let h = 1e-5;
        let fd = (phi_alpha(0.5 + h, 2.5).unwrap().0 - phi_alpha(0.5 - h, 2.5).unwrap().0) / (2.0 * h);
        assert!((fd - phi_alpha(0.5, 2.5).unwrap().1).abs() < 1e-8);
        assert_eq!(phi_unchecked(0.0, 2.0).2, -2.0);
    }

    #[test]
    fn circle_quarter_turn_values() {
        let c = circle(256);
        let pair = c.pair_frame(64, 0).unwrap();
        let n = n_tau(&c, &pair).unwrap();
        assert!((n - (PI * PI / 8.0 - 1.0)).abs() < 1e-10);
        let params = EnergyParams::new(2.0, 1.0).unwrap();
        let m = m_alpha(&c, &pair, &params).unwrap();
        assert!((m - (0.5 - 4.0 / (PI * PI))).abs() < 1e-10);
        let p2 = EnergyParams::new(2.0, 2.0).unwrap();
        let d = density(&c, &pair, &p2).unwrap();
        assert!((d - m * m).abs() < 1e-12);
    }

    #[test]
    fn k_of_curve_with_itself() {
        let c = circle(64);
        let pair = c.pair_frame(10, 3).unwrap();
        assert!((k_bilinear(c.positions(), c.positions(), &pair) - 1.0).abs() < 1e-12);
        assert!(k_chord(&Field::constant(64, &[1.0, 2.0]), &pair).abs() < 1e-15);
    }

    #[test]
    fn one_minus_power_inequality() {
        for ia in 1..=40 {
            let alpha = 0.1 * ia as f64;
            for ix in 0..=100 {
                let x = ix as f64 / 100.0;
                assert!(1.0 - x.powf(alpha) <= (alpha / 2.0 + 1.0) * (1.0 - x * x) + 1e-15);
            }
        }
    }

    #[test]
    fn general_param_at_zero_matches_density() {
        let c = circle(128);
        let params = EnergyParams::new(2.4, 1.0).unwrap();
        let mc = MaterialCurve::perturbed(&c, &[]).unwrap();
        let pair = c.pair_frame(40, 7).unwrap();
        let a = density_general_param(&mc, 40, 7, &params).unwrap();
        let b = density(&c, &pair, &params).unwrap();
        assert!((a - b).abs() < 1e-9 * b);
    }
}

//! First and second variations of `N(tau)`, `M_alpha` and the energy
//! density, split into their labelled terms.
//!
//! All variations are taken at fixed material parameters: the curve is
//! perturbed to `f + eps phi` without reparametrising, and the measure
//! term `tau . phi'` accounts for the change of `ds`.

use crate::curve::{ClosedCurve, PairFrame};
use crate::error::{Error, Result};
use crate::field::{dot, Field, PrefixIntegral, Vector};
use crate::kernels::{k_bilinear, k_chord, n_from_integrals, n_tau, phi_unchecked, EnergyParams};

/// Below this `M_alpha` counts as zero when `p < 2`.
pub const SINGULAR_M_TOL: f64 = 1e-300;
/// `|dM[phi] dM[psi]|` at or below this makes the singular `H2` vanish.
pub const SINGULAR_DM_TOL: f64 = 1e-14;

/// Labelled terms of one variation at one pair, with their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationTerms<const N: usize> {
    pub labels: [&'static str; N],
    pub terms: [f64; N],
    pub sum: f64,
}

impl<const N: usize> VariationTerms<N> {
    fn new(labels: [&'static str; N], terms: [f64; N]) -> Self {
        VariationTerms { labels, terms, sum: terms.iter().sum() }
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| *l == label).map(|k| self.terms[k])
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        self.labels.iter().copied().zip(self.terms).collect()
    }
}

/// A perturbation field `phi` together with the caches every pair needs:
/// `phi'`, `tau . phi'` and their prefix integrals.
#[derive(Debug, Clone)]
pub struct Perturbation {
    phi: Field,
    dphi: Field,
    dphi_prefix: PrefixIntegral,
    tdphi: Field,
    tdphi_prefix: PrefixIntegral,
}

impl Perturbation {
    pub fn new(curve: &ClosedCurve, phi: &Field) -> Result<Self> {
        curve.check_field(phi)?;
        if phi.dim() != curve.dim() {
            return Err(Error::DimensionMismatch(format!(
                "perturbation has dimension {} but the curve lives in R^{}",
                phi.dim(),
                curve.dim()
            )));
        }
        let dphi = phi.derivative(curve.length());
        let tdphi = curve.tangents().dot(&dphi)?;
        Ok(Perturbation {
            dphi_prefix: curve.prefix(&dphi)?,
            tdphi_prefix: curve.prefix(&tdphi)?,
            phi: phi.clone(),
            dphi,
            tdphi,
        })
    }

    pub fn field(&self) -> &Field {
        &self.phi
    }

    pub fn derivative(&self) -> &Field {
        &self.dphi
    }

    /// Samples of `tau . phi'`.
    pub fn tangential_derivative(&self) -> &Field {
        &self.tdphi
    }
}

/// Two perturbations and the mixed caches for second variations.
#[derive(Debug, Clone)]
pub struct PerturbationPair {
    phi: Perturbation,
    psi: Perturbation,
    dd_prefix: PrefixIntegral,
    tt_prefix: PrefixIntegral,
}

impl PerturbationPair {
    pub fn new(curve: &ClosedCurve, phi: Perturbation, psi: Perturbation) -> Result<Self> {
        let dd = phi.dphi.dot(&psi.dphi)?;
        let tt = phi.tdphi.dot(&psi.tdphi)?;
        Ok(PerturbationPair { dd_prefix: curve.prefix(&dd)?, tt_prefix: curve.prefix(&tt)?, phi, psi })
    }

    pub fn from_fields(curve: &ClosedCurve, phi: &Field, psi: &Field) -> Result<Self> {
        Self::new(curve, Perturbation::new(curve, phi)?, Perturbation::new(curve, psi)?)
    }

    pub fn phi(&self) -> &Perturbation {
        &self.phi
    }

    pub fn psi(&self) -> &Perturbation {
        &self.psi
    }

    pub fn swapped(&self) -> Self {
        PerturbationPair {
            phi: self.psi.clone(),
            psi: self.phi.clone(),
            dd_prefix: self.dd_prefix.clone(),
            tt_prefix: self.tt_prefix.clone(),
        }
    }
}

/// Pair quantities shared by every variation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairBase {
    pub n: f64,
    pub dphi_a: f64,
    pub ddphi_a: f64,
    /// `|Δf|^-alpha`
    pub inv_pow: f64,
    pub m: f64,
    pub alpha: f64,
}

impl PairBase {
    pub fn new(curve: &ClosedCurve, pair: &PairFrame, alpha: f64) -> Result<Self> {
        let n = n_tau(curve, pair)?;
        let (phi, d1, d2) = phi_unchecked(n, alpha);
        let inv_pow = pair.chord_sq.powf(-alpha / 2.0);
        Ok(PairBase { n, dphi_a: d1, ddphi_a: d2, inv_pow, m: phi * inv_pow, alpha })
    }
}

/// First-order quantities of one perturbation at one pair.
#[derive(Debug, Clone)]
pub(crate) struct FirstOrder {
    /// `K(f, phi)`
    pub k: f64,
    /// `N(tau, phi')`
    pub n_t: f64,
    pub r1: f64,
    pub r2: f64,
    pub p1: f64,
    pub p2: f64,
    /// `tau . phi'` at `s_i` and `s_j`
    pub t_i: f64,
    pub t_j: f64,
    pub int_dphi: Vector,
    pub int_tdphi: f64,
}

impl FirstOrder {
    pub fn new(base: &PairBase, pert: &Perturbation, pair: &PairFrame) -> Self {
        let k = k_chord(&pert.phi, pair);
        let int_dphi = pert.dphi_prefix.arc(pair.j, pair.steps);
        let int_tdphi = pert.tdphi_prefix.arc_component(pair.j, pair.steps, 0);
        let n_t = n_from_integrals(pair.ds, int_tdphi, &pair.chord, &int_dphi, pair.chord_sq);
        let r1 = -2.0 * k * base.n;
        let r2 = 2.0 * n_t;
        let p1 = base.dphi_a * (r1 + r2) * base.inv_pow;
        let p2 = -base.alpha * base.m * k;
        FirstOrder {
            k,
            n_t,
            r1,
            r2,
            p1,
            p2,
            t_i: pert.tdphi.row(pair.i)[0],
            t_j: pert.tdphi.row(pair.j)[0],
            int_dphi,
            int_tdphi,
        }
    }

    #[inline]
    pub fn dn(&self) -> f64 {
        self.r1 + self.r2
    }

    #[inline]
    pub fn dm(&self) -> f64 {
        self.p1 + self.p2
    }

    #[inline]
    pub fn t_sum(&self) -> f64 {
        self.t_i + self.t_j
    }

    pub fn g_terms(&self, base: &PairBase, p: f64) -> [f64; 2] {
        let mp = base.m.powf(p);
        let g1 = if p == 1.0 { self.dm() } else { p * base.m.powf(p - 1.0) * self.dm() };
        [g1, mp * self.t_sum()]
    }
}

fn s_terms(base: &PairBase, pp: &PerturbationPair, a: &FirstOrder, b: &FirstOrder, pair: &PairFrame) -> [f64; 5] {
    let k_pp = k_bilinear(&pp.phi.phi, &pp.psi.phi, pair);
    let s1 = -2.0 * (k_pp - 2.0 * a.k * b.k) * base.n;
    let s2 = -a.k * b.dn() - b.k * a.dn();
    let s3 = -2.0 * b.k * a.n_t - 2.0 * a.k * b.n_t;
    let idd = pp.dd_prefix.arc_component(pair.j, pair.steps, 0);
    let s4 = 2.0 * n_from_integrals(pair.ds, idd, &a.int_dphi, &b.int_dphi, pair.chord_sq);
    let itt = pp.tt_prefix.arc_component(pair.j, pair.steps, 0);
    let s5 = -2.0 * n_from_integrals(pair.ds, itt, &[a.int_tdphi], &[b.int_tdphi], pair.chord_sq);
    [s1, s2, s3, s4, s5]
}

fn q_terms(
    base: &PairBase,
    pp: &PerturbationPair,
    a: &FirstOrder,
    b: &FirstOrder,
    pair: &PairFrame,
    d2n: f64,
) -> [f64; 6] {
    let half_a = base.alpha / 2.0;
    let k_pp = k_bilinear(&pp.phi.phi, &pp.psi.phi, pair);
    let q1 = base.dphi_a * d2n * base.inv_pow;
    let q2 = -half_a * base.dphi_a * a.dn() * base.inv_pow * 2.0 * b.k;
    let q3 = base.ddphi_a * a.dn() * b.dn() * base.inv_pow;
    let q4 = -half_a * b.dm() * 2.0 * a.k;
    let q5 = -half_a * base.m * 2.0 * k_pp;
    let q6 = half_a * base.m * 2.0 * a.k * 2.0 * b.k;
    [q1, q2, q3, q4, q5, q6]
}

/// `δ²M_alpha[phi, psi]` from precomputed first-order quantities.
pub(crate) fn d2m_alpha(
    base: &PairBase,
    pp: &PerturbationPair,
    a: &FirstOrder,
    b: &FirstOrder,
    pair: &PairFrame,
) -> f64 {
    let d2n: f64 = s_terms(base, pp, a, b, pair).iter().sum();
    q_terms(base, pp, a, b, pair, d2n).iter().sum()
}

pub(crate) fn h_terms(
    base: &PairBase,
    pp: &PerturbationPair,
    a: &FirstOrder,
    b: &FirstOrder,
    pair: &PairFrame,
    p: f64,
) -> Result<[f64; 6]> {
    let d2m = d2m_alpha(base, pp, a, b, pair);
    let m = base.m;
    let mp = m.powf(p);
    let pm1 = if p == 1.0 { 1.0 } else { m.powf(p - 1.0) };
    let h1 = p * pm1 * d2m;
    let dmdm = a.dm() * b.dm();
    let h2 = if p == 1.0 {
        0.0
    } else if p < 2.0 && m < SINGULAR_M_TOL {
        if dmdm.abs() <= SINGULAR_DM_TOL {
            0.0
        } else {
            return Err(Error::SingularPair { i: pair.i, j: pair.j });
        }
    } else {
        p * (p - 1.0) * m.powf(p - 2.0) * dmdm
    };
    let g1a = p * pm1 * a.dm();
    let g1b = p * pm1 * b.dm();
    let h3 = g1a * b.t_sum();
    let h4 = g1b * a.t_sum();
    let (dpi, dpj) = (pp.phi.dphi.row(pair.i), pp.phi.dphi.row(pair.j));
    let (dqi, dqj) = (pp.psi.dphi.row(pair.i), pp.psi.dphi.row(pair.j));
    let h5 = mp * (dot(dpi, dqi) + dot(dpj, dqj) - 2.0 * a.t_i * b.t_i - 2.0 * a.t_j * b.t_j);
    let h6 = mp * a.t_sum() * b.t_sum();
    Ok([h1, h2, h3, h4, h5, h6])
}

/// `δ|Δf|^2[phi] / |Δf|^2 = 2 K(f, phi)`.
pub fn delta_chord_ratio(phi: &Perturbation, pair: &PairFrame) -> f64 {
    2.0 * k_chord(&phi.phi, pair)
}

/// `δ²|Δf|^2[phi, psi] / |Δf|^2 = 2 K(phi, psi)`.
pub fn delta2_chord_ratio(pp: &PerturbationPair, pair: &PairFrame) -> f64 {
    2.0 * k_bilinear(&pp.phi.phi, &pp.psi.phi, pair)
}

/// `δK(f, phi)[psi] = K(phi, psi) - 2 K(f, phi) K(f, psi)`.
pub fn delta_k(pp: &PerturbationPair, pair: &PairFrame) -> f64 {
    k_bilinear(&pp.phi.phi, &pp.psi.phi, pair) - 2.0 * k_chord(&pp.phi.phi, pair) * k_chord(&pp.psi.phi, pair)
}

/// `δN(tau)[phi] = R1 + R2`.
pub fn delta_n_tau(curve: &ClosedCurve, phi: &Perturbation, pair: &PairFrame) -> Result<VariationTerms<2>> {
    let base = PairBase::new(curve, pair, 2.0)?;
    let a = FirstOrder::new(&base, phi, pair);
    Ok(VariationTerms::new(["R1", "R2"], [a.r1, a.r2]))
}

/// `δ²N(tau)[phi, psi] = S1 + ... + S5`.
pub fn delta2_n_tau(curve: &ClosedCurve, pp: &PerturbationPair, pair: &PairFrame) -> Result<VariationTerms<5>> {
    let base = PairBase::new(curve, pair, 2.0)?;
    let a = FirstOrder::new(&base, &pp.phi, pair);
    let b = FirstOrder::new(&base, &pp.psi, pair);
    Ok(VariationTerms::new(["S1", "S2", "S3", "S4", "S5"], s_terms(&base, pp, &a, &b, pair)))
}

/// `δM_alpha[phi] = P1 + P2`.
pub fn delta_m_alpha(
    curve: &ClosedCurve,
    phi: &Perturbation,
    pair: &PairFrame,
    params: &EnergyParams,
) -> Result<VariationTerms<2>> {
    let base = PairBase::new(curve, pair, params.alpha())?;
    let a = FirstOrder::new(&base, phi, pair);
    Ok(VariationTerms::new(["P1", "P2"], [a.p1, a.p2]))
}

/// `δ²M_alpha[phi, psi] = Q1 + ... + Q6`.
pub fn delta2_m_alpha(
    curve: &ClosedCurve,
    pp: &PerturbationPair,
    pair: &PairFrame,
    params: &EnergyParams,
) -> Result<VariationTerms<6>> {
    let base = PairBase::new(curve, pair, params.alpha())?;
    let a = FirstOrder::new(&base, &pp.phi, pair);
    let b = FirstOrder::new(&base, &pp.psi, pair);
    let d2n: f64 = s_terms(&base, pp, &a, &b, pair).iter().sum();
    Ok(VariationTerms::new(["Q1", "Q2", "Q3", "Q4", "Q5", "Q6"], q_terms(&base, pp, &a, &b, pair, d2n)))
}

/// Pointwise first variation of the energy measure, `G = G1 + G2`.
pub fn first_variation_density(
    curve: &ClosedCurve,
    phi: &Perturbation,
    pair: &PairFrame,
    params: &EnergyParams,
) -> Result<VariationTerms<2>> {
    let base = PairBase::new(curve, pair, params.alpha())?;
    let a = FirstOrder::new(&base, phi, pair);
    Ok(VariationTerms::new(["G1", "G2"], a.g_terms(&base, params.p())))
}

/// Pointwise second variation of the energy measure, `H = H1 + ... + H6`.
pub fn second_variation_density(
    curve: &ClosedCurve,
    pp: &PerturbationPair,
    pair: &PairFrame,
    params: &EnergyParams,
) -> Result<VariationTerms<6>> {
    let base = PairBase::new(curve, pair, params.alpha())?;
    let a = FirstOrder::new(&base, &pp.phi, pair);
    let b = FirstOrder::new(&base, &pp.psi, pair);
    Ok(VariationTerms::new(["H1", "H2", "H3", "H4", "H5", "H6"], h_terms(&base, pp, &a, &b, pair, params.p())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wobbly(m: usize) -> ClosedCurve {
        let pts: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / m as f64;
                let r = 1.0 + 0.1 * (3.0 * t).cos();
                vec![r * t.cos(), r * t.sin(), 0.2 * (2.0 * t).sin()]
            })
            .collect();
        ClosedCurve::from_samples(&pts, true).unwrap()
    }

    fn field(c: &ClosedCurve, seed: f64) -> Field {
        let l = c.length();
        Field::from_fn(c.len(), 3, l, |s, out| {
            let t = 2.0 * PI * s / l;
            out[0] = 0.3 * (t + seed).cos() + 0.1 * (2.0 * t).sin();
            out[1] = 0.2 * (3.0 * t - seed).sin();
            out[2] = 0.1 * (t * 2.0 + seed).cos();
        })
    }

    #[test]
    fn constant_fields_give_zero() {
        let c = wobbly(64);
        let params = EnergyParams::new(2.0, 2.0).unwrap();
        let k = Field::constant(64, &[1.0, -2.0, 0.5]);
        let pp = PerturbationPair::from_fields(&c, &k, &k).unwrap();
        let pair = c.pair_frame(20, 5).unwrap();
        let g = first_variation_density(&c, pp.phi(), &pair, &params).unwrap();
        let h = second_variation_density(&c, &pp, &pair, &params).unwrap();
        assert!(g.sum.abs() < 1e-14);
        assert!(h.terms.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn dilation_leaves_n_unchanged() {
        let c = wobbly(128);
        let f = Perturbation::new(&c, c.positions()).unwrap();
        for (i, j) in [(3, 40), (100, 7), (64, 0)] {
            let pair = c.pair_frame(i, j).unwrap();
            let r = delta_n_tau(&c, &f, &pair).unwrap();
            assert!(r.sum.abs() < 1e-10, "{r:?}");
            assert!((delta_chord_ratio(&f, &pair) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn second_variation_is_symmetric() {
        let c = wobbly(64);
        let params = EnergyParams::new(2.4, 1.0).unwrap();
        let pp = PerturbationPair::from_fields(&c, &field(&c, 0.3), &field(&c, 1.7)).unwrap();
        let sw = pp.swapped();
        for (i, j) in [(1, 0), (30, 2), (50, 10)] {
            let pair = c.pair_frame(i, j).unwrap();
            let a = second_variation_density(&c, &pp, &pair, &params).unwrap().sum;
            let b = second_variation_density(&c, &sw, &pair, &params).unwrap().sum;
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            let qa = delta2_m_alpha(&c, &pp, &pair, &params).unwrap().sum;
            let qb = delta2_m_alpha(&c, &sw, &pair, &params).unwrap().sum;
            assert!((qa - qb).abs() <= 1e-10 * qa.abs());
        }
    }

    #[test]
    fn p_one_has_no_h2() {
        let c = wobbly(64);
        let params = EnergyParams::new(2.0, 1.0).unwrap();
        let pp = PerturbationPair::from_fields(&c, &field(&c, 0.1), &field(&c, 0.9)).unwrap();
        let pair = c.pair_frame(9, 2).unwrap();
        let h = second_variation_density(&c, &pp, &pair, &params).unwrap();
        assert_eq!(h.get("H2"), Some(0.0));
    }

    #[test]
    fn first_variation_matches_direct_formula() {
        // Differentiating |Δf|^-a - D^-a directly, without the R/P split.
        let c = wobbly(128);
        let params = EnergyParams::new(2.4, 2.0).unwrap();
        let phi = field(&c, 0.4);
        let pert = Perturbation::new(&c, &phi).unwrap();
        let a = params.alpha();
        for (i, j) in [(10, 50), (3, 90), (77, 20)] {
            let pair = c.pair_frame(i, j).unwrap();
            let g = first_variation_density(&c, &pert, &pair, &params).unwrap();
            let dphi: Vec<f64> = (0..3).map(|k| phi.row(i)[k] - phi.row(j)[k]).collect();
            let fd = dot(&pair.chord, &dphi);
            let ddist = pert.tdphi_prefix.arc_component(pair.j, pair.steps, 0) * pair.ds.signum();
            let m = pair.chord_sq.powf(-a / 2.0) - pair.d.powf(-a);
            let dm = -a * pair.chord_sq.powf(-a / 2.0 - 1.0) * fd + a * pair.d.powf(-a - 1.0) * ddist;
            let t = pert.tdphi.row(i)[0] + pert.tdphi.row(j)[0];
            let direct = params.p() * m.powf(params.p() - 1.0) * dm + m.powf(params.p()) * t;
            assert!((g.sum - direct).abs() <= 1e-10 * direct.abs(), "{} vs {direct}", g.sum);
        }
    }
}

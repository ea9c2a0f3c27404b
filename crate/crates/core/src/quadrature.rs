//! Double integrals over the torus of pair densities.
//!
//! By the swap symmetry of every density, `∬ F = 2 ∫_0^{L/2} A(x) dx` with
//! column integrals `A(x) = ∫ F(s + x, s) ds`. The columns are computed by
//! the periodic trapezoid rule in `s`. Near the diagonal `A(x) = x^γ S(x)`
//! with `S` even and smooth; the trapezoid rule in `x` is corrected there
//! with zeta-function terms, and the columns inside the diagonal band are
//! replaced by an even-polynomial fit of `S`. At `x = L/2` the short-arc
//! convention leaves a kink, handled by Gregory end corrections.

use crate::curve::{ClosedCurve, PairFrame};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::kernels::{density, EnergyParams};
use crate::numeric::{eval_even_polynomial, fit_even_polynomial, zeta, Dd};
use crate::variations::{d2m_alpha, h_terms, FirstOrder, PairBase, Perturbation, PerturbationPair};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Mutex;

/// Right-end Gregory coefficients.
pub const GREGORY: [f64; 7] =
    [1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0, 863.0 / 60480.0, 275.0 / 24192.0, 33953.0 / 3628800.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Half-width of the diagonal band in grid cells.
    pub band: usize,
    /// Number of columns used to fit the near-diagonal extension.
    pub fit_points: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { band: 2, fit_points: 4 }
    }
}

impl QuadratureOptions {
    pub fn with_band(band: usize) -> Self {
        QuadratureOptions { band, ..Default::default() }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.band < 1 || self.fit_points < 2 {
            return Err(Error::InvalidParameter("band must be >= 1 and fit_points >= 2".into()));
        }
        if self.band + self.fit_points + 2 > m / 2 {
            return Err(Error::InvalidParameter(format!(
                "band {} with {} fit points does not fit a grid of {m} samples",
                self.band, self.fit_points
            )));
        }
        Ok(())
    }
}

/// A quadrature result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    /// Pairs excluded as singular (second variations with `p < 2` only).
    pub flagged_pairs: Vec<(usize, usize)>,
}

/// Even-polynomial fit of `A_k / x_k^γ` over columns `b+1 ..= b+P`.
fn fit_extension(cols: &[f64], h: f64, gamma: f64, band: usize, points: usize) -> Vec<f64> {
    let xs: Vec<f64> = (band + 1..=band + points).map(|k| k as f64 * h).collect();
    let ys: Vec<f64> = xs.iter().zip(&cols[band..band + points]).map(|(x, a)| a / x.powf(gamma)).collect();
    fit_even_polynomial(&xs, &ys, *xs.last().unwrap())
}

fn corrected_half(cols: &[f64], h: f64, gamma: f64, band: usize, points: usize) -> f64 {
    let n = cols.len();
    let c = fit_extension(cols, h, gamma, band, points);
    let mut t = Dd::ZERO;
    for k in 1..=band {
        let x = k as f64 * h;
        t = t.add_f64(x.powf(gamma) * eval_even_polynomial(&c, x));
    }
    for a in &cols[band..n - 1] {
        t = t.add_f64(*a);
    }
    t = t.add_f64(0.5 * cols[n - 1]);
    let trap = h * t.value();
    let navot: f64 = c
        .iter()
        .enumerate()
        .map(|(m, cm)| {
            let e = gamma + 2.0 * m as f64;
            zeta(-e) * cm * h.powf(e + 1.0)
        })
        .sum();
    trap - navot - h * gregory_tail(cols, band).0
}

/// `sum_r G_r ∇^r A_n` and the magnitude of its last term.
fn gregory_tail(cols: &[f64], band: usize) -> (f64, f64) {
    let n = cols.len();
    let order = GREGORY.len().min(n - band - 1);
    let mut diff: Vec<f64> = cols[n - order - 1..].to_vec();
    let mut sum = 0.0;
    let mut last = 0.0;
    for g in GREGORY.iter().take(order) {
        diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        last = g * diff[diff.len() - 1];
        sum += last;
    }
    (sum, last.abs())
}

/// `∬ F` from column sums `cols[k-1] = h sum_j F(s_j + k h, s_j)`,
/// `k = 1..=M/2`. Entries inside the band are ignored.
pub fn integrate_columns(cols: &[f64], h: f64, gamma: f64, opts: &QuadratureOptions) -> Integral {
    let b = opts.band;
    let p = opts.fit_points;
    let main = 2.0 * corrected_half(cols, h, gamma, b, p);
    let fewer = 2.0 * corrected_half(cols, h, gamma, b, p - 1);
    let banded = 2.0 * corrected_half(cols, h, gamma, b + 1, p);
    let tail = 2.0 * h * gregory_tail(cols, b).1;
    let scale: f64 = 2.0 * h * cols[b..].iter().map(|a| a.abs()).sum::<f64>();
    let err = (main - fewer).abs() + (main - banded).abs() + tail + 1e-14 * scale;
    Integral { value: main, error_estimate: err, flagged_pairs: Vec::new() }
}

/// Column sums `h sum_j F(frame(j, k))` for `k = 1..=M/2`, `NaN` inside
/// the band. Columns run in parallel; each column sums in a fixed order.
pub fn column_sums<F>(curve: &ClosedCurve, band: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&PairFrame) -> Result<f64> + Sync,
{
    let m = curve.len();
    let h = curve.h();
    (1..=m / 2)
        .into_par_iter()
        .map(|k| {
            if k <= band {
                return Ok(f64::NAN);
            }
            let mut acc = Dd::ZERO;
            for j in 0..m {
                acc = acc.add_f64(f(&curve.frame_steps(j, k as isize))?);
            }
            Ok(h * acc.value())
        })
        .collect()
}

fn checked(curve: &ClosedCurve, opts: &QuadratureOptions) -> Result<()> {
    opts.validate(curve.len())?;
    curve.check_bilipschitz(crate::curve::DEFAULT_BILIPSCHITZ_CAP)?;
    Ok(())
}

/// `E_(alpha,p)(f) = ∬ M_(alpha,p)`.
pub fn energy(curve: &ClosedCurve, params: &EnergyParams) -> Result<Integral> {
    energy_with(curve, params, &QuadratureOptions::default())
}

pub fn energy_with(curve: &ClosedCurve, params: &EnergyParams, opts: &QuadratureOptions) -> Result<Integral> {
    checked(curve, opts)?;
    let cols = column_sums(curve, opts.band, |fr| density(curve, fr, params))?;
    Ok(integrate_columns(&cols, curve.h(), params.diagonal_exponent(), opts))
}

/// `δE[phi] = ∬ G[phi]`.
pub fn first_variation(curve: &ClosedCurve, phi: &Field, params: &EnergyParams) -> Result<Integral> {
    first_variation_with(curve, phi, params, &QuadratureOptions::default())
}

pub fn first_variation_with(
    curve: &ClosedCurve,
    phi: &Field,
    params: &EnergyParams,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    Ok(first_variations(curve, std::slice::from_ref(phi), params, opts)?.remove(0))
}

/// `δE` against many fields in one pass over the pairs.
pub fn first_variations(
    curve: &ClosedCurve,
    fields: &[Field],
    params: &EnergyParams,
    opts: &QuadratureOptions,
) -> Result<Vec<Integral>> {
    checked(curve, opts)?;
    let perts: Vec<Perturbation> = fields.iter().map(|f| Perturbation::new(curve, f)).collect::<Result<_>>()?;
    let m = curve.len();
    let h = curve.h();
    let nf = perts.len();
    let p = params.p();
    let cols: Vec<Vec<f64>> = (1..=m / 2)
        .into_par_iter()
        .map(|k| {
            if k <= opts.band {
                return Ok(vec![f64::NAN; nf]);
            }
            let mut acc = vec![Dd::ZERO; nf];
            for j in 0..m {
                let fr = curve.frame_steps(j, k as isize);
                let base = PairBase::new(curve, &fr, params.alpha())?;
                for (a, pert) in acc.iter_mut().zip(&perts) {
                    let g = FirstOrder::new(&base, pert, &fr).g_terms(&base, p);
                    *a = a.add_f64(g[0] + g[1]);
                }
            }
            Ok(acc.into_iter().map(|a| h * a.value()).collect())
        })
        .collect::<Result<_>>()?;
    let gamma = params.diagonal_exponent();
    Ok((0..nf)
        .map(|f| {
            let c: Vec<f64> = cols.iter().map(|col| col[f]).collect();
            integrate_columns(&c, h, gamma, opts)
        })
        .collect())
}

/// `δ²E[phi, psi] = ∬ H[phi, psi]`; singular pairs are excluded and
/// reported.
pub fn second_variation(curve: &ClosedCurve, phi: &Field, psi: &Field, params: &EnergyParams) -> Result<Integral> {
    second_variation_with(curve, phi, psi, params, &QuadratureOptions::default())
}

pub fn second_variation_with(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    params: &EnergyParams,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    checked(curve, opts)?;
    let pp = PerturbationPair::from_fields(curve, phi, psi)?;
    let flagged = Mutex::new(Vec::new());
    let cols = column_sums(curve, opts.band, |fr| {
        let base = PairBase::new(curve, fr, params.alpha())?;
        let a = FirstOrder::new(&base, pp.phi(), fr);
        let b = FirstOrder::new(&base, pp.psi(), fr);
        match h_terms(&base, &pp, &a, &b, fr, params.p()) {
            Ok(h) => Ok(h.iter().sum()),
            Err(Error::SingularPair { i, j }) => {
                flagged.lock().unwrap().push((i, j));
                Ok(0.0)
            }
            Err(e) => Err(e),
        }
    })?;
    let mut out = integrate_columns(&cols, curve.h(), params.diagonal_exponent(), opts);
    let mut f = flagged.into_inner().unwrap();
    f.sort_unstable();
    out.flagged_pairs = f;
    Ok(out)
}

/// Second-order contribution of the antipodal set.
///
/// The intrinsic distance `min(a, L - a)` has a kink where the two arcs
/// are equal, and that set moves under perturbation. `∬H` differentiates
/// the density with the arc held fixed; the full second variation of the
/// energy adds
/// `-2 ∫ ∂_D M_(alpha,p)(s + L/2, s) g_phi(s) g_psi(s) ds` with
/// `g_phi(s) = ∫_s^(s+L/2) tau.phi' - (1/2) ∫ tau.phi'`.
pub fn antipodal_term(curve: &ClosedCurve, phi: &Field, psi: &Field, params: &EnergyParams) -> Result<f64> {
    let pp = PerturbationPair::from_fields(curve, phi, psi)?;
    let m = curve.len();
    let half = (m / 2) as isize;
    let d = curve.length() / 2.0;
    let (alpha, p) = (params.alpha(), params.p());
    let ta = pp.phi().tangential_derivative();
    let tb = pp.psi().tangential_derivative();
    let prefix_a = curve.prefix(ta)?;
    let prefix_b = curve.prefix(tb)?;
    let (tot_a, tot_b) = (prefix_a.total()[0], prefix_b.total()[0]);
    let mut acc = Dd::ZERO;
    for j in 0..m {
        let fr = curve.frame_steps(j, half);
        let ma = fr.chord_sq.powf(-alpha / 2.0) - d.powf(-alpha);
        let dm = p * ma.powf(p - 1.0) * alpha * d.powf(-alpha - 1.0);
        let ga = prefix_a.arc_component(j, half, 0) - tot_a / 2.0;
        let gb = prefix_b.arc_component(j, half, 0) - tot_b / 2.0;
        acc = acc.add_f64(dm * ga * gb);
    }
    Ok(-2.0 * curve.h() * acc.value())
}

/// Full second variation `δ²E[phi, psi] = ∬H + antipodal term`.
pub fn hessian_form(curve: &ClosedCurve, phi: &Field, psi: &Field, params: &EnergyParams) -> Result<Integral> {
    hessian_form_with(curve, phi, psi, params, &QuadratureOptions::default())
}

pub fn hessian_form_with(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    params: &EnergyParams,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    let mut out = second_variation_with(curve, phi, psi, params, opts)?;
    out.value += antipodal_term(curve, phi, psi, params)?;
    Ok(out)
}

/// Which pointwise quantity a [`PairGrid`] holds.
#[derive(Debug, Clone)]
pub enum GridKind {
    Density,
    FirstVariation(Field),
    SecondVariation(Field, Field),
}

impl GridKind {
    pub fn label(&self) -> &'static str {
        match self {
            GridKind::Density => "M",
            GridKind::FirstVariation(_) => "G",
            GridKind::SecondVariation(..) => "H",
        }
    }
}

/// `M x M` grid of a pair density; band cells hold `NaN`.
#[derive(Debug, Clone, Serialize)]
pub struct PairGrid {
    pub m: usize,
    pub length: f64,
    pub band: usize,
    pub label: String,
    pub params: EnergyParams,
    /// Weight exponent `beta` when the grid holds `D^((alpha-2beta)p) F`.
    pub beta: Option<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub flagged_pairs: Vec<(usize, usize)>,
    /// Supremum of `|F|` over off-band cells.
    pub sup: f64,
    /// Off-band cell sum of `|F|` times the cell area.
    pub l1: f64,
    /// Estimate of the band's contribution to the `L^1` norm.
    pub band_l1: f64,
}

impl PairGrid {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn is_band(&self, i: usize, j: usize) -> bool {
        let d = (i + self.m - j) % self.m;
        d.min(self.m - d) <= self.band
    }

    /// `(sum |F|^q h^2)^(1/q)` over off-band cells.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let h = self.length / self.m as f64;
        let s: f64 = self.values.iter().filter(|v| !v.is_nan()).map(|v| v.abs().powf(q)).sum();
        (s * h * h).powf(1.0 / q)
    }
}

/// Fills a [`PairGrid`] off the band, optionally weighted by
/// `D^((alpha - 2 beta) p)`.
pub fn density_grid(
    curve: &ClosedCurve,
    params: &EnergyParams,
    kind: &GridKind,
    beta: Option<f64>,
    band: usize,
) -> Result<PairGrid> {
    let m = curve.len();
    let h = curve.h();
    let opts = QuadratureOptions::with_band(band);
    opts.validate(m)?;
    let pp = match kind {
        GridKind::Density => None,
        GridKind::FirstVariation(phi) => Some(PerturbationPair::from_fields(curve, phi, phi)?),
        GridKind::SecondVariation(phi, psi) => Some(PerturbationPair::from_fields(curve, phi, psi)?),
    };
    let weight_exp = beta.map(|b| (params.alpha() - 2.0 * b) * params.p());
    let eval = |fr: &PairFrame| -> Result<f64> {
        let w = weight_exp.map_or(1.0, |e| fr.d.powf(e));
        let v = match (kind, &pp) {
            (GridKind::Density, _) => density(curve, fr, params)?,
            (GridKind::FirstVariation(_), Some(pp)) => {
                let base = PairBase::new(curve, fr, params.alpha())?;
                let g = FirstOrder::new(&base, pp.phi(), fr).g_terms(&base, params.p());
                g[0] + g[1]
            }
            (GridKind::SecondVariation(..), Some(pp)) => {
                let base = PairBase::new(curve, fr, params.alpha())?;
                let a = FirstOrder::new(&base, pp.phi(), fr);
                let b = FirstOrder::new(&base, pp.psi(), fr);
                h_terms(&base, pp, &a, &b, fr, params.p())?.iter().sum()
            }
            _ => unreachable!(),
        };
        Ok(w * v)
    };
    type Row = (Vec<f64>, Vec<(usize, usize)>);
    let rows: Vec<Row> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![f64::NAN; m];
            let mut flagged = Vec::new();
            for (j, cell) in row.iter_mut().enumerate() {
                let d = (i + m - j) % m;
                if d.min(m - d) <= band {
                    continue;
                }
                let fr = curve.pair_frame(i, j)?;
                match eval(&fr) {
                    Ok(v) => *cell = v,
                    Err(Error::SingularPair { i, j }) => flagged.push((i, j)),
                    Err(e) => return Err(e),
                }
            }
            Ok((row, flagged))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(m * m);
    let mut flagged_pairs = Vec::new();
    for (r, f) in rows {
        values.extend(r);
        flagged_pairs.extend(f);
    }
    let finite = values.iter().filter(|v| !v.is_nan());
    let sup = finite.clone().fold(0.0f64, |a, v| a.max(v.abs()));
    let l1 = finite.map(|v| v.abs()).sum::<f64>() * h * h;

    // Band estimate: closed-form integral of the fitted column extension of |F|.
    let mut cols = vec![f64::NAN; m / 2];
    for (k, col) in cols.iter_mut().enumerate().skip(band).take(opts.fit_points) {
        let k = k + 1;
        let s: f64 = (0..m).map(|j| values[((j + k) % m) * m + j].abs()).filter(|v| !v.is_nan()).sum();
        *col = h * s;
    }
    let gamma = params.diagonal_exponent() + weight_exp.unwrap_or(0.0);
    let c = fit_extension(&cols, h, gamma, band, opts.fit_points);
    let x_end = (band as f64 + 0.5) * h;
    let band_l1 = 2.0
        * c.iter()
            .enumerate()
            .map(|(i, ci)| {
                let e = gamma + 2.0 * i as f64 + 1.0;
                ci * x_end.powf(e) / e
            })
            .sum::<f64>()
            .abs();
    Ok(PairGrid {
        m,
        length: curve.length(),
        band,
        label: kind.label().to_string(),
        params: *params,
        beta,
        values,
        flagged_pairs,
        sup,
        l1,
        band_l1,
    })
}

/// One displayed Hölder-chain inequality `lhs <= rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct ChainEntry {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / rhs`, or `rhs - lhs` when `rhs = 0`.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderChainReport {
    pub entries: Vec<ChainEntry>,
}

impl HolderChainReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.entries.iter().all(|e| e.margin >= -slack)
    }
}

/// Both sides of the `L^1` Hölder-chain bounds for `G1, G2, H1, ..., H6`,
/// evaluated with discrete norms over the off-band grid.
pub fn holder_chain_check(
    curve: &ClosedCurve,
    phi: &Field,
    psi: &Field,
    params: &EnergyParams,
    band: usize,
) -> Result<HolderChainReport> {
    QuadratureOptions::with_band(band).validate(curve.len())?;
    let pp = PerturbationPair::from_fields(curve, phi, psi)?;
    let m = curve.len();
    let h = curve.h();
    let p = params.p();
    // Per-pair: M, dM[phi], dM[psi], d2M, G1[phi], G1[psi], G2[phi], H1..H6
    const NQ: usize = 13;
    let sums: Vec<[f64; NQ * 2]> = (0..m)
        .into_par_iter()
        .map(|i| {
            // first half: sum |q|^p style accumulators, second half: sum |q|
            let mut acc = [0.0; NQ * 2];
            for j in 0..m {
                let d = (i + m - j) % m;
                if d.min(m - d) <= band {
                    continue;
                }
                let fr = curve.pair_frame(i, j)?;
                let base = PairBase::new(curve, &fr, params.alpha())?;
                let a = FirstOrder::new(&base, pp.phi(), &fr);
                let b = FirstOrder::new(&base, pp.psi(), &fr);
                let hs = h_terms(&base, &pp, &a, &b, &fr, p)?;
                let ga = a.g_terms(&base, p);
                let gb = b.g_terms(&base, p);
                let d2m = d2m_alpha(&base, &pp, &a, &b, &fr);
                let q = [base.m, a.dm(), b.dm(), d2m, ga[0], gb[0], ga[1], hs[0], hs[1], hs[2], hs[3], hs[4], hs[5]];
                for (k, v) in q.iter().enumerate() {
                    acc[k] += v.abs().powf(p);
                    acc[NQ + k] += v.abs();
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut tot = [0.0; NQ * 2];
    for row in &sums {
        for (t, v) in tot.iter_mut().zip(row) {
            *t += v;
        }
    }
    let area = h * h;
    let lp = |k: usize| (tot[k] * area).powf(1.0 / p);
    let l1 = |k: usize| tot[NQ + k] * area;
    let sup_phi = pp.phi().derivative().sup_norm();
    let sup_psi = pp.psi().derivative().sup_norm();
    let m_lp = lp(0);
    let entry = |name, lhs: f64, rhs: f64| ChainEntry {
        name,
        lhs,
        rhs,
        margin: if rhs > 0.0 { (rhs - lhs) / rhs } else { rhs - lhs },
    };
    let entries = vec![
        entry("G1", l1(4), p * m_lp.powf(p - 1.0) * lp(1)),
        entry("G2", l1(6), 2.0 * m_lp.powf(p) * sup_phi),
        entry("H1", l1(7), p * m_lp.powf(p - 1.0) * lp(3)),
        entry("H2", l1(8), p * (p - 1.0) * m_lp.powf(p - 2.0) * lp(1) * lp(2)),
        entry("H3", l1(9), 2.0 * l1(4) * sup_psi),
        entry("H4", l1(10), 2.0 * l1(5) * sup_phi),
        entry("H5", l1(11), 6.0 * m_lp.powf(p) * sup_phi * sup_psi),
        entry("H6", l1(12), 4.0 * m_lp.powf(p) * sup_phi * sup_psi),
    ];
    Ok(HolderChainReport { entries })
}

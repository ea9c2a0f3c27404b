//! Synthetic curves and perturbation fields for tests, examples and the
//! CLI's `synthetic:K` fields.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::field::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Circle of the given radius in the first two coordinates of `R^dim`.
pub fn circle(m: usize, radius: f64, dim: usize) -> Result<ClosedCurve> {
    let pts: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            let mut p = vec![0.0; dim.max(2)];
            p[0] = radius * t.cos();
            p[1] = radius * t.sin();
            p
        })
        .collect();
    ClosedCurve::from_samples(&pts, true)
}

/// Ellipse `(a cos t, b sin t)` re-parametrised by arclength.
pub fn ellipse(m: usize, a: f64, b: f64) -> Result<ClosedCurve> {
    // Oversample the input so the arclength resampling is exact to
    // round-off on M points.
    let n = 4 * m;
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            vec![a * t.cos(), b * t.sin()]
        })
        .collect();
    ClosedCurve::from_samples_with_resolution(&pts, true, m)
}

/// Circle of radius 1 in `R^3` with a random smooth perturbation of
/// relative size `amplitude` in modes `2..=modes`.
pub fn random_curve(m: usize, seed: u64, modes: usize, amplitude: f64) -> Result<ClosedCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<[f64; 6]> = (2..=modes.max(2))
        .map(|k| {
            let decay = amplitude / (k * k) as f64;
            let mut c = [0.0; 6];
            c.iter_mut().for_each(|x| *x = decay * rng.gen_range(-1.0..1.0));
            c
        })
        .collect();
    let n = 4 * m;
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let mut r = 1.0;
            let mut z = 0.0;
            let mut w = 0.0;
            for (idx, c) in coef.iter().enumerate() {
                let k = (idx + 2) as f64;
                let (s, co) = (k * t).sin_cos();
                r += c[0] * co + c[1] * s;
                z += c[2] * co + c[3] * s;
                w += c[4] * co + c[5] * s;
            }
            vec![r * t.cos() + w * t.sin(), r * t.sin() - w * t.cos(), z]
        })
        .collect();
    ClosedCurve::from_samples_with_resolution(&pts, true, m)
}

/// Random smooth vector field on the curve grid with modes `0..=modes`
/// and coefficients decaying like `1 / (1 + k)^2`, scaled so the
/// sup-norm of each coefficient block is at most `scale`.
pub fn random_field(curve: &ClosedCurve, seed: u64, modes: usize, scale: f64) -> Field {
    random_field_dim(curve, seed, modes, scale, curve.dim())
}

pub fn random_field_dim(curve: &ClosedCurve, seed: u64, modes: usize, scale: f64, dim: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<Vec<(f64, f64)>> = (0..=modes)
        .map(|k| {
            let decay = scale / ((1 + k) * (1 + k)) as f64;
            (0..dim).map(|_| (decay * rng.gen_range(-1.0..1.0), decay * rng.gen_range(-1.0..1.0))).collect()
        })
        .collect();
    let l = curve.length();
    Field::from_fn(curve.len(), dim, l, |s, out| {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (k, ck) in coef.iter().enumerate() {
            let (sn, cs) = (2.0 * PI * k as f64 * s / l).sin_cos();
            for (o, (a, b)) in out.iter_mut().zip(ck) {
                *o += a * cs + if k > 0 { b * sn } else { 0.0 };
            }
        }
    })
}

/// Parses `synthetic:K` into a random field with `K` modes; other
/// strings are `None`.
pub fn parse_synthetic(spec: &str, curve: &ClosedCurve, seed: u64) -> Option<Result<Field>> {
    let k = spec.strip_prefix("synthetic:")?;
    Some(
        k.parse::<usize>()
            .map_err(|_| Error::Parse(format!("expected synthetic:K with integer K, got {spec:?}")))
            .and_then(|k| {
                if k == 0 || k > curve.len() / 2 {
                    Err(Error::InvalidParameter(format!("synthetic mode count {k} outside 1..={}", curve.len() / 2)))
                } else {
                    Ok(random_field(curve, seed, k, 0.3))
                }
            }),
    )
}

/// Field whose derivative has a `|s - s0|^beta` cusp (periodised),
/// smoothed at scale `L / M`, pointing along the first coordinate.
pub fn cusp_field(curve: &ClosedCurve, beta: f64, s0: f64) -> Field {
    let l = curve.length();
    let m = curve.len();
    let eps = l / m as f64;
    let dist = |s: f64| {
        let d = (s - s0).rem_euclid(l);
        d.min(l - d)
    };
    // derivative profile with zero mean, then integrate spectrally
    let prof: Vec<f64> = (0..m).map(|i| (dist(curve.s(i)).powi(2) + eps * eps).powf(beta / 2.0)).collect();
    let mean = prof.iter().sum::<f64>() / m as f64;
    let centred: Vec<f64> = prof.iter().map(|v| v - mean).collect();
    let ip = crate::spectral::TrigInterp::new(&centred, l);
    let dim = curve.dim();
    let rows: Vec<f64> = (0..m)
        .flat_map(|i| {
            let mut r = vec![0.0; dim];
            r[0] = ip.periodic_antiderivative(curve.s(i));
            r
        })
        .collect();
    Field::new(dim, rows).expect("consistent dimensions")
}

/// Orthonormal trigonometric basis of `L^2(R/LZ, R^n)` with modes
/// `0..=k`: constants, then `cos`, `sin` pairs per coordinate.
pub fn trig_basis(curve: &ClosedCurve, k: usize) -> Vec<Field> {
    let l = curve.length();
    let n = curve.dim();
    let mut out = Vec::with_capacity(n * (2 * k + 1));
    for mode in 0..=k {
        for c in 0..n {
            let kinds: &[bool] = if mode == 0 { &[true] } else { &[true, false] };
            for &cosine in kinds {
                let amp = if mode == 0 { 1.0 / l.sqrt() } else { (2.0 / l).sqrt() };
                out.push(Field::from_fn(curve.len(), n, l, |s, row| {
                    row.iter_mut().for_each(|x| *x = 0.0);
                    let th = 2.0 * PI * mode as f64 * s / l;
                    row[c] = amp * if cosine { th.cos() } else { th.sin() };
                }));
            }
        }
    }
    out
}

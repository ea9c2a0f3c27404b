//! Small numerical building blocks: compensated sums, the Riemann zeta
//! function on the real line, Gauss-Legendre rules, Richardson
//! extrapolation and even-polynomial fitting.

use std::f64::consts::PI;

/// Unevaluated sum `hi + lo` used for prefix sums whose differences must
/// stay accurate relative to the difference rather than to the total.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

impl std::ops::Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let lo = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, lo);
        Dd { hi, lo }
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;

    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + -o
    }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let lo = e + self.lo;
        let (hi, lo) = two_sum(s, lo);
        Dd { hi, lo }
    }

    /// Adds the exact product `a * b`.
    #[inline]
    pub fn add_prod(self, a: f64, b: f64) -> Dd {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self + Dd { hi: p, lo: e }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `a*b - c*d` with one rounding on each product removed via FMA.
#[inline]
pub fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = c.mul_add(-d, cd);
    let dop = a.mul_add(b, -cd);
    dop + err
}

/// Riemann zeta function for real `s != 1`.
///
/// Borwein's alternating-series acceleration for `s > 0`, the functional
/// equation for `s < 0`.
pub fn zeta(s: f64) -> f64 {
    if s == 0.0 {
        return -0.5;
    }
    if (s - 1.0).abs() < 1e-12 {
        return f64::INFINITY;
    }
    if s < 0.0 {
        // Trivial zeros: sin(pi s / 2) is exactly zero there.
        if s == s.round() && (s as i64) % 2 == 0 {
            return 0.0;
        }
        let one_minus = 1.0 - s;
        return 2f64.powf(s)
            * PI.powf(s - 1.0)
            * (PI * s / 2.0).sin()
            * statrs::function::gamma::gamma(one_minus)
            * zeta(one_minus);
    }
    if s > 40.0 {
        return 1.0 + 2f64.powf(-s);
    }
    // Borwein (1991), algorithm 2 with n = 60.
    const N: usize = 60;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0;
    let mut acc = 1.0;
    d[0] = acc;
    for i in 1..=N {
        let nf = N as f64;
        let fi = i as f64;
        term *= 4.0 * (nf + fi - 1.0) * (nf - fi + 1.0) / ((2.0 * fi) * (2.0 * fi - 1.0));
        acc += term;
        d[i] = acc;
    }
    let dn = d[N];
    let mut eta = 0.0;
    for k in (0..N).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * (d[k] - dn) / ((k + 1) as f64).powf(s);
    }
    eta = -eta / dn;
    eta / (1.0 - 2f64.powf(1.0 - s))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                let jf = j as f64;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Richardson extrapolation of `values[k]` sampled at `h0 / ratio^k`,
/// assuming an error expansion in `h^e0, h^(e0+step), h^(e0+2 step), ...`.
///
/// Returns the most extrapolated entry of the tableau.
pub fn richardson(values: &[f64], ratio: f64, e0: f64, step: f64) -> f64 {
    let n = values.len();
    assert!(n > 0);
    let mut prev = values.to_vec();
    for m in 1..n {
        let factor = ratio.powf(e0 + step * (m - 1) as f64) - 1.0;
        let cur: Vec<f64> = (m..n)
            .map(|k| {
                let a = prev[k - m + 1];
                let b = prev[k - m];
                a + (a - b) / factor
            })
            .collect();
        prev = cur;
    }
    prev[0]
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Interpolate `(x_k, y_k)` by an even polynomial `sum_i c_i x^(2i)` of
/// degree `2(len-1)`. `scale` normalises the abscissae for conditioning.
pub fn fit_even_polynomial(xs: &[f64], ys: &[f64], scale: f64) -> Vec<f64> {
    let n = xs.len();
    let a: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let y = (x / scale) * (x / scale);
            (0..n).map(|i| y.powi(i as i32)).collect()
        })
        .collect();
    let d = solve_dense(a, ys.to_vec()).expect("distinct abscissae");
    d.iter().enumerate().map(|(i, &di)| di / scale.powi(2 * i as i32)).collect()
}

/// Evaluate `sum_i c_i x^(2i)`.
pub fn eval_even_polynomial(c: &[f64], x: f64) -> f64 {
    let y = x * x;
    c.iter().rev().fold(0.0, |acc, &ci| acc * y + ci)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-14);
        assert!((zeta(0.5) + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!((zeta(-0.5) + 0.207_886_224_977_354_87).abs() < 1e-13);
        assert!((zeta(-3.0) - 1.0 / 120.0).abs() < 1e-14);
        assert_eq!(zeta(-2.0), 0.0);
        assert_eq!(zeta(0.0), -0.5);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((s - 2.0 / 23.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn richardson_removes_even_powers() {
        let f = |h: f64| 1.5 + 0.3 * h * h - 2.0 * h.powi(4) + 0.7 * h.powi(6);
        let vals: Vec<f64> = (0..4).map(|k| f(0.4 / 2f64.powi(k))).collect();
        assert!((richardson(&vals, 2.0, 2.0, 2.0) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn compensated_prefix_difference() {
        let mut acc = Dd::ZERO;
        let mut marks = Vec::new();
        for k in 0..1000 {
            marks.push(acc);
            acc = acc.add_f64(1e3 + 1e-9 * k as f64);
        }
        let d = (marks[501] - marks[500]).value();
        assert!((d - (1e3 + 1e-9 * 500.0)).abs() < 1e-13);
    }

    #[test]
    fn even_fit_recovers_coefficients() {
        let c = [0.25, -1.5, 3.0];
        let xs = [0.1, 0.2, 0.3];
        let ys: Vec<f64> = xs.iter().map(|&x| eval_even_polynomial(&c, x)).collect();
        let got = fit_even_polynomial(&xs, &ys, 0.1);
        for (a, b) in got.iter().zip(c) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

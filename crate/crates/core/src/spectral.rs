//! Trigonometric interpolation on uniform periodic grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn forward(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse transform including the `1/M` normalisation; returns real parts.
pub fn inverse(c: &[Complex64]) -> Vec<f64> {
    let mut buf = c.to_vec();
    let m = buf.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|z| z.re / m as f64).collect()
}

/// Signed wavenumber of FFT bin `k` for a grid of `m` points.
#[inline]
pub fn signed_index(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

#[inline]
fn is_nyquist(k: usize, m: usize) -> bool {
    m.is_multiple_of(2) && k == m / 2
}

/// Apply a multiplier to every non-Nyquist mode; the Nyquist mode is
/// replaced by `nyquist`.
fn apply_symbol(x: &[f64], period: f64, symbol: impl Fn(f64) -> Complex64, nyquist: Complex64) -> Vec<f64> {
    let m = x.len();
    let mut c = forward(x);
    let w = 2.0 * PI / period;
    for (k, ck) in c.iter_mut().enumerate() {
        if is_nyquist(k, m) {
            *ck *= nyquist;
        } else {
            *ck *= symbol(signed_index(k, m) as f64 * w);
        }
    }
    inverse(&c)
}

/// Spectral derivative of periodic samples with the given period.
pub fn derivative(x: &[f64], period: f64) -> Vec<f64> {
    apply_symbol(x, period, |om| Complex64::new(0.0, om), Complex64::new(0.0, 0.0))
}

/// Exact integrals of the trigonometric interpolant over each grid cell
/// `[s_i, s_{i+1}]`.
pub fn cell_integrals(x: &[f64], period: f64) -> Vec<f64> {
    let h = period / x.len() as f64;
    apply_symbol(
        x,
        period,
        |om| {
            if om == 0.0 {
                Complex64::new(h, 0.0)
            } else {
                (Complex64::new(0.0, om * h).exp() - 1.0) / Complex64::new(0.0, om)
            }
        },
        Complex64::new(0.0, 0.0),
    )
}

/// Trigonometric interpolant of periodic samples, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct TrigInterp {
    period: f64,
    a0: f64,
    /// cosine and sine coefficients for modes 1..=K
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigInterp {
    pub fn new(x: &[f64], period: f64) -> Self {
        let m = x.len();
        let c = forward(x);
        let mf = m as f64;
        let kmax = m / 2;
        let mut a = Vec::with_capacity(kmax);
        let mut b = Vec::with_capacity(kmax);
        for (k, ck) in c.iter().enumerate().take(kmax + 1).skip(1) {
            if is_nyquist(k, m) {
                a.push(ck.re / mf);
                b.push(0.0);
            } else {
                a.push(2.0 * ck.re / mf);
                b.push(-2.0 * ck.im / mf);
            }
        }
        TrigInterp { period, a0: c[0].re / mf, a, b }
    }

    /// Drop trailing modes whose coefficients are below `rel` times the
    /// largest one.
    pub fn truncate(mut self, rel: f64) -> Self {
        let big = self.a.iter().chain(&self.b).fold(self.a0.abs(), |acc, v| acc.max(v.abs()));
        let cut = big * rel;
        let mut keep = self.a.len();
        while keep > 0 && self.a[keep - 1].abs() <= cut && self.b[keep - 1].abs() <= cut {
            keep -= 1;
        }
        self.a.truncate(keep);
        self.b.truncate(keep);
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.a0
    }

    /// Value of the `order`-th derivative at `t`.
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        let w = 2.0 * PI / self.period;
        let mut sum = if order == 0 { self.a0 } else { 0.0 };
        for k in 1..=self.a.len() {
            let om = k as f64 * w;
            let (s, c) = (om * t).sin_cos();
            // d^r/dt^r of (a cos + b sin) cycles through four forms.
            let (cv, sv) = match order % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            sum += om.powi(order as i32) * (self.a[k - 1] * cv + self.b[k - 1] * sv);
        }
        sum
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivative(t, 0)
    }

    /// Antiderivative with zero mean removed: `F(t) - F(0)` where
    /// `F' = self - mean`.
    pub fn periodic_antiderivative(&self, t: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        let mut sum = 0.0;
        for k in 1..=self.a.len() {
            let om = k as f64 * w;
            let (s, c) = (om * t).sin_cos();
            sum += (self.a[k - 1] * s - self.b[k - 1] * (c - 1.0)) / om;
        }
        sum
    }
}

/// Resample periodic data on `n` points onto a finer grid of `n_out`
/// points by zero padding. `n_out` must be at least `n`.
pub fn upsample(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n_out >= n);
    let c = forward(x);
    let mut d = vec![Complex64::new(0.0, 0.0); n_out];
    let half = n / 2;
    for k in 0..n {
        let sk = signed_index(k, n);
        if is_nyquist(k, n) {
            // split the Nyquist mode symmetrically
            d[half] += c[k] * 0.5;
            d[n_out - half] += c[k] * 0.5;
            continue;
        }
        let idx = if sk >= 0 { sk as usize } else { (n_out as i64 + sk) as usize };
        d[idx] = c[k];
    }
    let scale = n_out as f64 / n as f64;
    inverse(&d).into_iter().map(|v| v * scale).collect()
}

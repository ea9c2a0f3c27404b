//! Closed curves sampled uniformly in arclength.

use crate::error::{Error, Result};
use crate::field::{norm, Field, PrefixIntegral, Vector};
use crate::spectral::{self, TrigInterp};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative chord below which two samples count as a self-intersection.
pub const SELF_INTERSECTION_TOL: f64 = 1e-9;
/// Default cap on the bi-Lipschitz constant.
pub const DEFAULT_BILIPSCHITZ_CAP: f64 = 1e6;

/// An arclength-parametrised closed curve in `R^n` with `M` samples at
/// `s_i = i L / M`.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    length: f64,
    positions: Field,
    tangents: Field,
    curvatures: Field,
    tau_prefix: PrefixIntegral,
    tau_sq_prefix: PrefixIntegral,
    arclength_defect: f64,
}

/// Geometry of one off-diagonal pair `(s_i, s_j)`.
///
/// `steps` is the signed number of grid cells from `s_j` to `s_i` along
/// the arc used for every arc integral of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFrame {
    pub i: usize,
    pub j: usize,
    pub steps: isize,
    /// signed separation `s_i - s_j` along the chosen arc
    pub ds: f64,
    /// intrinsic distance `|ds|`
    pub d: f64,
    /// `f(s_i) - f(s_j)`, computed as the arc integral of the tangent
    pub chord: Vector,
    pub chord_sq: f64,
    pub chord_norm: f64,
}

impl ClosedCurve {
    /// Builds a curve from samples of a closed curve at uniformly spaced
    /// (not necessarily arclength) parameters, resampled to uniform
    /// arclength with the same number of points.
    pub fn from_samples(points: &[Vec<f64>], closed: bool) -> Result<Self> {
        let pts = Self::validated_points(points, closed)?;
        let m = pts.len();
        Self::resample(&pts, m)
    }

    /// As [`ClosedCurve::from_samples`] with an explicit output resolution.
    pub fn from_samples_with_resolution(points: &[Vec<f64>], closed: bool, m: usize) -> Result<Self> {
        let pts = Self::validated_points(points, closed)?;
        Self::resample(&pts, m)
    }

    fn validated_points(points: &[Vec<f64>], closed: bool) -> Result<Vec<Vec<f64>>> {
        if !closed {
            return Err(Error::InvalidParameter("open curves are not supported".into()));
        }
        let dim = points.first().map_or(0, Vec::len);
        if dim < 2 {
            return Err(Error::DimensionMismatch("curve points need dimension >= 2".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("curve points of unequal dimension".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("curve has non-finite coordinates".into()));
        }
        let mut pts = points.to_vec();
        if pts.len() > 1 {
            let scale = pts.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            let first = &pts[0];
            let last = &pts[pts.len() - 1];
            let gap = first.iter().zip(last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap <= 1e-12 * scale {
                pts.pop();
            }
        }
        Ok(pts)
    }

    fn check_resolution(m: usize) -> Result<()> {
        if m < 16 || !m.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("sample count must be even and >= 16, got {m}")));
        }
        Ok(())
    }

    fn resample(pts: &[Vec<f64>], m: usize) -> Result<Self> {
        Self::check_resolution(m)?;
        let n_in = pts.len();
        if n_in < 16 {
            return Err(Error::InvalidParameter(format!("need at least 16 input points, got {n_in}")));
        }
        let dim = pts[0].len();
        let tp = 2.0 * PI;
        let coords: Vec<Vec<f64>> = (0..dim).map(|c| pts.iter().map(|p| p[c]).collect()).collect();
        let interps: Vec<TrigInterp> = coords.iter().map(|x| TrigInterp::new(x, tp)).collect();

        // Speed on an oversampled grid, then a trigonometric series for it.
        let n_f = 8 * n_in.max(m);
        let mut speed = vec![0.0; n_f];
        for x in &coords {
            let d = spectral::upsample(&spectral::derivative(x, tp), n_f);
            for (s, v) in speed.iter_mut().zip(d) {
                *s += v * v;
            }
        }
        speed.iter_mut().for_each(|s| *s = s.sqrt());
        let mean_speed = speed.iter().sum::<f64>() / n_f as f64;
        let min_speed = speed.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(mean_speed > 0.0) || min_speed <= 1e-9 * mean_speed {
            return Err(Error::DegenerateCurve("parametrisation has vanishing speed or zero length".into()));
        }
        let speed_ip = TrigInterp::new(&speed, tp).truncate(1e-17);
        let length = tp * speed_ip.mean();
        let arc = |t: f64| speed_ip.mean() * t + speed_ip.periodic_antiderivative(t);

        // Bracket each target arclength on a coarse table, then Newton.
        let n_b = 4 * m;
        let table: Vec<f64> = (0..=n_b).map(|q| arc(tp * q as f64 / n_b as f64)).collect();
        let targets: Vec<f64> = (0..m).map(|i| length * i as f64 / m as f64).collect();
        let params: Vec<f64> = targets
            .par_iter()
            .map(|&target| {
                let q = table.partition_point(|&v| v <= target).clamp(1, n_b) - 1;
                let (ta, tb) = (tp * q as f64 / n_b as f64, tp * (q + 1) as f64 / n_b as f64);
                let (sa, sb) = (table[q], table[q + 1]);
                let mut t = ta + (target - sa) / (sb - sa) * (tb - ta);
                for _ in 0..60 {
                    let step = (arc(t) - target) / speed_ip.eval(t);
                    t = (t - step).clamp(ta, tb);
                    if step.abs() <= 1e-16 * tp {
                        break;
                    }
                }
                t
            })
            .collect();

        let mut values = vec![0.0; m * dim];
        for (i, &t) in params.iter().enumerate() {
            for (c, ip) in interps.iter().enumerate() {
                values[i * dim + c] = ip.eval(t);
            }
        }
        Self::from_arclength_positions(Field::new(dim, values)?, length)
    }

    /// Builds the caches from samples already uniform in arclength over
    /// a curve of total length `length`.
    pub fn from_arclength_positions(positions: Field, length: f64) -> Result<Self> {
        let m = positions.len();
        Self::check_resolution(m)?;
        if positions.dim() < 2 {
            return Err(Error::DimensionMismatch("curve points need dimension >= 2".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::DegenerateCurve("curve has zero length".into()));
        }
        Self::check_self_intersection(&positions, length)?;
        let raw = positions.derivative(length);
        let dim = positions.dim();
        let mut defect = 0.0f64;
        let mut tvals = Vec::with_capacity(m * dim);
        for i in 0..m {
            let r = raw.row(i);
            let n = norm(r);
            defect = defect.max((n - 1.0).abs());
            tvals.extend(r.iter().map(|v| v / n));
        }
        let tangents = Field::new(dim, tvals)?;
        let curvatures = tangents.derivative(length);
        let tau_prefix = PrefixIntegral::new(&tangents, length);
        let tau_sq_prefix = PrefixIntegral::new(&tangents.dot(&tangents)?, length);
        Ok(ClosedCurve { length, positions, tangents, curvatures, tau_prefix, tau_sq_prefix, arclength_defect: defect })
    }

    fn check_self_intersection(positions: &Field, length: f64) -> Result<()> {
        let m = positions.len();
        let tol = SELF_INTERSECTION_TOL * length;
        let hit = (0..m).into_par_iter().find_any(|&i| {
            let a = positions.row(i);
            (i + 1..m).any(|j| {
                let b = positions.row(j);
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() < tol
            })
        });
        match hit {
            Some(i) => {
                Err(Error::DegenerateCurve(format!("sample {i} coincides with another sample within {tol:.3e}")))
            }
            None => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.positions.dim()
    }

    /// Number of samples `M`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `L / M`.
    pub fn h(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        self.positions.row(i)
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        self.tangents.row(i)
    }

    pub fn curvature(&self, i: usize) -> &[f64] {
        self.curvatures.row(i)
    }

    pub fn positions(&self) -> &Field {
        &self.positions
    }

    pub fn tangents(&self) -> &Field {
        &self.tangents
    }

    pub fn curvatures(&self) -> &Field {
        &self.curvatures
    }

    pub fn tangent_prefix(&self) -> &PrefixIntegral {
        &self.tau_prefix
    }

    pub(crate) fn tangent_sq_prefix(&self) -> &PrefixIntegral {
        &self.tau_sq_prefix
    }

    /// Largest deviation of the raw spectral tangent from unit length.
    pub fn arclength_defect(&self) -> f64 {
        self.arclength_defect
    }

    /// Prefix integral of a field sampled on this curve's grid.
    pub fn prefix(&self, field: &Field) -> Result<PrefixIntegral> {
        self.check_field(field)?;
        Ok(PrefixIntegral::new(field, self.length))
    }

    pub fn check_field(&self, field: &Field) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::FieldMismatch { expected: self.len(), got: field.len() });
        }
        Ok(())
    }

    /// Pair geometry with the short-arc convention `ds` in `(-L/2, L/2]`.
    pub fn pair_frame(&self, i: usize, j: usize) -> Result<PairFrame> {
        let m = self.len();
        if i >= m || j >= m {
            return Err(Error::InvalidParameter(format!("pair ({i}, {j}) outside 0..{m}")));
        }
        if i == j {
            return Err(Error::Diagonal { i, j });
        }
        let mut k = ((i + m - j) % m) as isize;
        if k > (m / 2) as isize {
            k -= m as isize;
        }
        Ok(self.frame_steps(j, k))
    }

    /// Pair `(s_{j+k}, s_j)` with the arc running `k` cells from `s_j`.
    /// Requires `k != 0` and `|k| <= M/2`.
    pub fn frame_steps(&self, j: usize, k: isize) -> PairFrame {
        let m = self.len() as isize;
        debug_assert!(k != 0 && k.abs() <= m / 2);
        let i = (j as isize + k).rem_euclid(m) as usize;
        let chord = self.tau_prefix.arc(j, k);
        let chord_sq: f64 = chord.iter().map(|v| v * v).sum();
        let ds = k as f64 * self.h();
        PairFrame { i, j, steps: k, ds, d: ds.abs(), chord, chord_sq, chord_norm: chord_sq.sqrt() }
    }

    /// Signed integral of a registered field over the pair's arc.
    pub fn arc_integral(&self, prefix: &PrefixIntegral, pair: &PairFrame) -> Vector {
        prefix.arc(pair.j, pair.steps)
    }

    /// `max D / |Δf|` over all off-diagonal grid pairs, and at least the
    /// diagonal limit 1.
    pub fn bilipschitz_constant(&self) -> f64 {
        let m = self.len();
        (1..=m / 2)
            .into_par_iter()
            .map(|k| {
                (0..m)
                    .map(|j| {
                        let fr = self.frame_steps(j, k as isize);
                        fr.d / fr.chord_norm
                    })
                    .fold(1.0, f64::max)
            })
            .reduce(|| 1.0, f64::max)
    }

    /// Bi-Lipschitz constant, or an error when it exceeds `cap`.
    pub fn check_bilipschitz(&self, cap: f64) -> Result<f64> {
        let c = self.bilipschitz_constant();
        if !(c <= cap) {
            return Err(Error::NotBiLipschitz { constant: c, cap });
        }
        Ok(c)
    }

    /// Same curve with sample `k` moved to parameter 0.
    pub fn shifted(&self, k: usize) -> Result<Self> {
        Self::from_arclength_positions(self.positions.shifted(k), self.length)
    }

    /// Image under `x -> R x + b`; `rotation` is row major `n x n`.
    pub fn rigid_motion(&self, rotation: &[Vec<f64>], translation: &[f64]) -> Result<Self> {
        let n = self.dim();
        if rotation.len() != n || rotation.iter().any(|r| r.len() != n) || translation.len() != n {
            return Err(Error::DimensionMismatch("rigid motion does not match curve dimension".into()));
        }
        let mut values = Vec::with_capacity(self.len() * n);
        for i in 0..self.len() {
            let p = self.position(i);
            for (r, b) in rotation.iter().zip(translation) {
                values.push(r.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() + b);
            }
        }
        Self::from_arclength_positions(Field::new(n, values)?, self.length)
    }

    /// Dilation `x -> lambda x`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        Self::from_arclength_positions(self.positions.scaled(lambda), lambda * self.length)
    }

    /// Centroid of the samples.
    pub fn centroid(&self) -> Vec<f64> {
        let m = self.len() as f64;
        (0..self.dim()).map(|c| self.positions.component(c).iter().sum::<f64>() / m).collect()
    }
}

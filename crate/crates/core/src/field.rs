//! Sampled periodic fields on the parameter circle and their prefix
//! integrals.

use crate::error::{Error, Result};
use crate::numeric::Dd;
use crate::spectral;
use smallvec::SmallVec;

/// Scalar or vector valued samples on a uniform periodic grid, stored row
/// major (`m` rows of `dim` values).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    dim: usize,
    values: Vec<f64>,
}

pub type Vector = SmallVec<[f64; 4]>;

impl Field {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot form rows of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field has non-finite samples".into()));
        }
        Ok(Field { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("rows of unequal length".into()));
        }
        Field::new(dim, rows.concat())
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Field::new(1, values)
    }

    pub fn constant(m: usize, value: &[f64]) -> Self {
        let mut values = Vec::with_capacity(m * value.len());
        for _ in 0..m {
            values.extend_from_slice(value);
        }
        Field { dim: value.len(), values }
    }

    pub fn zeros(m: usize, dim: usize) -> Self {
        Field { dim, values: vec![0.0; m * dim] }
    }

    /// Samples `g(s_i)` at `s_i = i * period / m`.
    pub fn from_fn(m: usize, dim: usize, period: f64, g: impl Fn(f64, &mut [f64])) -> Self {
        let mut values = vec![0.0; m * dim];
        for (i, row) in values.chunks_mut(dim).enumerate() {
            g(i as f64 * period / m as f64, row);
        }
        Field { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    fn from_components(comps: &[Vec<f64>]) -> Self {
        let dim = comps.len();
        let m = comps[0].len();
        let mut values = vec![0.0; m * dim];
        for (c, comp) in comps.iter().enumerate() {
            for (i, v) in comp.iter().enumerate() {
                values[i * dim + c] = *v;
            }
        }
        Field { dim, values }
    }

    /// Componentwise map of a spectral operator.
    pub fn map_components(&self, op: impl Fn(&[f64]) -> Vec<f64>) -> Field {
        let comps: Vec<Vec<f64>> = (0..self.dim).map(|c| op(&self.component(c))).collect();
        Field::from_components(&comps)
    }

    /// Pointwise map of the samples, keeping the dimension.
    pub fn map_rows(&self, op: impl Fn(&[f64], &mut [f64])) -> Field {
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self.values.chunks(self.dim).zip(values.chunks_mut(self.dim)) {
            op(src, dst);
        }
        Field { dim: self.dim, values }
    }

    /// Spectral derivative with respect to a parameter of the given period.
    pub fn derivative(&self, period: f64) -> Field {
        self.map_components(|x| spectral::derivative(x, period))
    }

    /// Pointwise inner product, giving a scalar field.
    pub fn dot(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = (0..self.len()).map(|i| dot(self.row(i), other.row(i))).collect();
        Ok(Field { dim: 1, values })
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { dim: self.dim, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Field { dim: self.dim, values })
    }

    /// Cyclic shift: row `i` of the result is row `i + k` of `self`.
    pub fn shifted(&self, k: usize) -> Field {
        let m = self.len();
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..m {
            values.extend_from_slice(self.row((i + k) % m));
        }
        Field { dim: self.dim, values }
    }

    /// Maximum Euclidean norm over the samples.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.row(i))).fold(0.0, f64::max)
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::FieldMismatch { expected: self.len(), got: other.len() });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("value dimensions {} and {}", self.dim, other.dim)));
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cumulative integrals of a field's trigonometric interpolant from
/// parameter 0, in double-double so that short arcs keep full relative
/// accuracy.
#[derive(Debug, Clone)]
pub struct PrefixIntegral {
    dim: usize,
    m: usize,
    prefix: Vec<Dd>,
}

impl PrefixIntegral {
    pub fn new(field: &Field, period: f64) -> Self {
        let dim = field.dim();
        let m = field.len();
        let mut prefix = vec![Dd::ZERO; (m + 1) * dim];
        for c in 0..dim {
            let cells = spectral::cell_integrals(&field.component(c), period);
            let mut acc = Dd::ZERO;
            for (i, v) in cells.iter().enumerate() {
                acc = acc.add_f64(*v);
                prefix[(i + 1) * dim + c] = acc;
            }
        }
        PrefixIntegral { dim, m, prefix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn at(&self, i: usize, c: usize) -> Dd {
        self.prefix[i * self.dim + c]
    }

    /// Forward integral over `k` cells starting at grid index `j`
    /// (`0 <= k <= m`), component `c`.
    #[inline]
    fn forward(&self, j: usize, k: usize, c: usize) -> f64 {
        let end = j + k;
        if end <= self.m {
            (self.at(end, c) - self.at(j, c)).value()
        } else {
            let tail = self.at(self.m, c) - self.at(j, c);
            (tail + self.at(end - self.m, c)).value()
        }
    }

    /// Signed integral from `s_j` over `k` cells (backwards when `k < 0`).
    #[inline]
    pub fn arc_component(&self, j: usize, k: isize, c: usize) -> f64 {
        if k >= 0 {
            self.forward(j, k as usize, c)
        } else {
            let back = (-k) as usize;
            let start = (j + self.m - back % self.m) % self.m;
            -self.forward(start, back, c)
        }
    }

    pub fn arc_into(&self, j: usize, k: isize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.arc_component(j, k, c);
        }
    }

    pub fn arc(&self, j: usize, k: isize) -> Vector {
        let mut out: Vector = smallvec::smallvec![0.0; self.dim];
        self.arc_into(j, k, &mut out);
        out
    }

    pub fn total(&self) -> Vector {
        (0..self.dim).map(|c| self.at(self.m, c).value()).collect()
    }
}

use ohara::kernels::EnergyParams;
use ohara::quadrature::{self, QuadratureOptions};
use ohara::{norms, synth, verify, ClosedCurve, Field};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: ohara::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn params(alpha: f64, p: f64, beta: Option<f64>) -> PyResult<EnergyParams> {
    let par = EnergyParams::new(alpha, p).map_err(to_py)?;
    match beta {
        Some(b) => par.with_beta(b).map_err(to_py),
        None => Ok(par),
    }
}

fn integral<'py>(py: Python<'py>, i: &quadrature::Integral) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", i.value)?;
    d.set_item("error_estimate", i.error_estimate)?;
    d.set_item("flagged_pairs", i.flagged_pairs.clone())?;
    Ok(d)
}

/// Closed curve sampled uniformly in arclength.
#[pyclass(name = "Curve", module = "ohara_py", frozen)]
struct PyCurve {
    inner: ClosedCurve,
}

impl PyCurve {
    fn field(&self, rows: Vec<Vec<f64>>) -> PyResult<Field> {
        let f = Field::from_rows(&rows).map_err(to_py)?;
        self.inner.check_field(&f).map_err(to_py)?;
        Ok(f)
    }
}

#[pymethods]
impl PyCurve {
    /// Resamples the closed polygon through `points` by arclength.
    #[new]
    #[pyo3(signature = (points, m=None))]
    fn new(points: Vec<Vec<f64>>, m: Option<usize>) -> PyResult<Self> {
        let inner = match m {
            Some(m) => ClosedCurve::from_samples_with_resolution(&points, true, m),
            None => ClosedCurve::from_samples(&points, true),
        }
        .map_err(to_py)?;
        Ok(PyCurve { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (m, radius=1.0, dim=2))]
    fn circle(m: usize, radius: f64, dim: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: synth::circle(m, radius, dim).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (m, seed, modes=5, amplitude=0.15))]
    fn random(m: usize, seed: u64, modes: usize, amplitude: f64) -> PyResult<Self> {
        Ok(PyCurve { inner: synth::random_curve(m, seed, modes, amplitude).map_err(to_py)? })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        self.inner.positions().rows()
    }

    fn tangents(&self) -> Vec<Vec<f64>> {
        self.inner.tangents().rows()
    }

    /// Seeded random smooth field with `modes` Fourier modes.
    #[pyo3(signature = (seed, modes=4, scale=0.3))]
    fn random_field(&self, seed: u64, modes: usize, scale: f64) -> Vec<Vec<f64>> {
        synth::random_field(&self.inner, seed, modes, scale).rows()
    }

    #[pyo3(signature = (alpha, p, band=2))]
    fn energy<'py>(&self, py: Python<'py>, alpha: f64, p: f64, band: usize) -> PyResult<Bound<'py, PyDict>> {
        let e = quadrature::energy_with(&self.inner, &params(alpha, p, None)?, &QuadratureOptions::with_band(band))
            .map_err(to_py)?;
        integral(py, &e)
    }

    #[pyo3(signature = (phi, alpha, p, band=2))]
    fn first_variation<'py>(
        &self,
        py: Python<'py>,
        phi: Vec<Vec<f64>>,
        alpha: f64,
        p: f64,
        band: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let phi = self.field(phi)?;
        let g = quadrature::first_variation_with(
            &self.inner,
            &phi,
            &params(alpha, p, None)?,
            &QuadratureOptions::with_band(band),
        )
        .map_err(to_py)?;
        integral(py, &g)
    }

    /// Second variation including the antipodal term; the bare double
    /// integral is returned as `h_integral`.
    #[pyo3(signature = (phi, psi, alpha, p, band=2))]
    fn second_variation<'py>(
        &self,
        py: Python<'py>,
        phi: Vec<Vec<f64>>,
        psi: Vec<Vec<f64>>,
        alpha: f64,
        p: f64,
        band: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (phi, psi) = (self.field(phi)?, self.field(psi)?);
        let par = params(alpha, p, None)?;
        let h = quadrature::second_variation_with(&self.inner, &phi, &psi, &par, &QuadratureOptions::with_band(band))
            .map_err(to_py)?;
        let j = quadrature::antipodal_term(&self.inner, &phi, &psi, &par).map_err(to_py)?;
        let d = integral(py, &h)?;
        d.set_item("h_integral", h.value)?;
        d.set_item("antipodal_term", j)?;
        d.set_item("value", h.value + j)?;
        Ok(d)
    }

    /// Diagonal limit of a weighted quantity (`"M_alpha"`, `"R1"`, ...,
    /// `"S5"`, `"N"`, `"chord_ratio"`, `"chord_ratio2"`) at sample `i`.
    #[pyo3(signature = (which, i, phi, psi, alpha, p, beta=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn diagonal_limit<'py>(
        &self,
        py: Python<'py>,
        which: &str,
        i: usize,
        phi: Vec<Vec<f64>>,
        psi: Vec<Vec<f64>>,
        alpha: f64,
        p: f64,
        beta: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind = verify::LimitKind::parse(which)
            .ok_or_else(|| PyValueError::new_err(format!("unknown limit kind {which:?}")))?;
        let (phi, psi) = (self.field(phi)?, self.field(psi)?);
        let r = verify::diagonal_limit(
            &self.inner,
            &phi,
            &psi,
            &params(alpha, p, Some(beta))?,
            i,
            kind,
            &verify::LimitOptions::default(),
        )
        .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("which", r.which)?;
        d.set_item("s", r.s)?;
        d.set_item("samples", r.samples)?;
        d.set_item("extrapolated", r.extrapolated)?;
        d.set_item("reference", r.reference)?;
        d.set_item("gap", r.gap)?;
        Ok(d)
    }

    fn gagliardo_seminorm(&self, u: Vec<Vec<f64>>, sigma: f64, q: f64) -> PyResult<f64> {
        let u = self.field(u)?;
        Ok(norms::gagliardo_seminorm(&self.inner, &u, sigma, q).map_err(to_py)?.value)
    }

    fn holder_seminorm(&self, u: Vec<Vec<f64>>, beta: f64) -> PyResult<f64> {
        let u = self.field(u)?;
        Ok(norms::holder_seminorm(&self.inner, &u, beta).map_err(to_py)?.value)
    }

    fn __repr__(&self) -> String {
        format!("Curve(M={}, dimension={}, length={})", self.inner.len(), self.inner.dim(), self.inner.length())
    }
}

/// Energy of the round circle of the given radius by 1D quadrature.
#[pyfunction]
#[pyo3(signature = (alpha, p, radius=1.0))]
fn circle_energy_reference(alpha: f64, p: f64, radius: f64) -> f64 {
    verify::circle_energy_reference(alpha, p, radius)
}

#[pymodule]
fn ohara_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(circle_energy_reference, m)?)?;
    Ok(())
}

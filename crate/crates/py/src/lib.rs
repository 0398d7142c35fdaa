//! Python module `tmdisk`: disk points and Möbius maps, fields on the default
//! polar grid, the integral functionals, the Moser probe, coverings, the
//! constrained ascent and the property suites.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tmdisk::checks::{self, LocalBoundSetup, Scenario};
use tmdisk::covering::{build_covering, CoveringSpec};
use tmdisk::families::{poly_bump, sech_bump};
use tmdisk::functionals::{self as fx, Nonlinearity};
use tmdisk::transform::pullback;
use tmdisk::variational::ascent::{maximize as ascend, OptimizerConfig};
use tmdisk::variational::moser::{blowup_probe, dyadic_ks, Verdict};
use tmdisk::{geodesic_distance, GridFunction, PolarGrid, Tolerances};

fn err(e: tmdisk::Error) -> PyErr {
    match e {
        tmdisk::Error::Io(_) | tmdisk::Error::SolverFailed { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn grid(n_rho: usize, n_theta: usize, rho_max: f64) -> PyResult<Arc<PolarGrid>> {
    Ok(Arc::new(PolarGrid::uniform(n_rho, n_theta, rho_max).map_err(err)?))
}

#[pyclass(name = "DiskPoint", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDiskPoint(tmdisk::DiskPoint);

#[pymethods]
impl PyDiskPoint {
    #[new]
    fn new(re: f64, im: f64) -> PyResult<Self> {
        Ok(PyDiskPoint(tmdisk::DiskPoint::new(re, im).map_err(err)?))
    }

    /// Point at hyperbolic distance `rho` from the origin in direction `theta`.
    #[staticmethod]
    fn from_polar(rho: f64, theta: f64) -> PyResult<Self> {
        Ok(PyDiskPoint(tmdisk::DiskPoint::from_polar(rho, theta).map_err(err)?))
    }

    #[getter]
    fn re(&self) -> f64 {
        self.0.re()
    }

    #[getter]
    fn im(&self) -> f64 {
        self.0.im()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    fn __repr__(&self) -> String {
        format!("DiskPoint({}, {})", self.0.re(), self.0.im())
    }
}

#[pyclass(name = "MobiusMap", frozen)]
struct PyMobiusMap(tmdisk::MobiusMap);

#[pymethods]
impl PyMobiusMap {
    /// The shift `z ↦ (z − ζ)/(1 − conj(ζ) z)` sending `center` to the origin.
    #[new]
    fn new(center: PyDiskPoint) -> Self {
        PyMobiusMap(tmdisk::MobiusMap::new(center.0))
    }

    fn apply(&self, z: PyDiskPoint) -> PyDiskPoint {
        PyDiskPoint(self.0.apply(z.0))
    }

    fn inverse(&self) -> Self {
        PyMobiusMap(self.0.inverse())
    }
}

#[pyclass(name = "Field", frozen)]
struct PyField(tmdisk::Field);

#[pymethods]
impl PyField {
    #[staticmethod]
    #[pyo3(signature = (n_rho = 512, n_theta = 256, rho_max = 12.0))]
    fn zeros(n_rho: usize, n_theta: usize, rho_max: f64) -> PyResult<Self> {
        Ok(PyField(tmdisk::Field::zeros(grid(n_rho, n_theta, rho_max)?)))
    }

    /// Compactly supported bump of geodesic `radius` around `center`.
    #[staticmethod]
    #[pyo3(signature = (center, radius, amplitude = 1.0, n_rho = 512, n_theta = 256, rho_max = 12.0))]
    fn bump(
        center: PyDiskPoint,
        radius: f64,
        amplitude: f64,
        n_rho: usize,
        n_theta: usize,
        rho_max: f64,
    ) -> PyResult<Self> {
        let g = grid(n_rho, n_theta, rho_max)?;
        Ok(PyField(poly_bump(g, center.0, radius, amplitude).map_err(err)?))
    }

    /// `amplitude · sech(a · d(z, center))`.
    #[staticmethod]
    #[pyo3(signature = (center, a, amplitude = 1.0, n_rho = 512, n_theta = 256, rho_max = 12.0))]
    fn sech(center: PyDiskPoint, a: f64, amplitude: f64, n_rho: usize, n_theta: usize, rho_max: f64) -> PyResult<Self> {
        let g = grid(n_rho, n_theta, rho_max)?;
        Ok(PyField(sech_bump(g, center.0, a, amplitude).map_err(err)?))
    }

    /// Field from row-major values, `n_rho` rows of `n_theta`.
    #[staticmethod]
    #[pyo3(signature = (values, n_rho, n_theta, rho_max = 12.0))]
    fn from_values(values: Vec<f64>, n_rho: usize, n_theta: usize, rho_max: f64) -> PyResult<Self> {
        let g = grid(n_rho, n_theta, rho_max)?;
        Ok(PyField(tmdisk::Field::from_values(g, values).map_err(err)?))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        Ok(PyField(tmdisk::io::read_field(BufReader::new(f)).map_err(err)?))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| PyRuntimeError::new_err(format!("{path}: {e}")))?;
        tmdisk::io::write_field(&self.0, BufWriter::new(f)).map_err(err)
    }

    /// `(n_rho, n_theta)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        let g = self.0.grid();
        (g.n_rho(), g.n_theta)
    }

    #[getter]
    fn rho_max(&self) -> f64 {
        self.0.grid().rho_max()
    }

    fn rho_nodes(&self) -> Vec<f64> {
        self.0.grid().radial.nodes().to_vec()
    }

    /// Row-major node values.
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn sample(&self, rho: f64, theta: f64) -> f64 {
        self.0.sample(rho, theta)
    }

    fn scale(&self, c: f64) -> Self {
        PyField(self.0.scale(c))
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        Ok(PyField(self.0.add(&other.0).map_err(err)?))
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        Ok(PyField(self.0.sub(&other.0).map_err(err)?))
    }

    fn dirichlet_energy(&self) -> f64 {
        self.0.dirichlet_energy()
    }

    fn hardy_ratio(&self) -> PyResult<f64> {
        tmdisk::hardy_ratio(&self.0).map_err(err)
    }

    /// `u ∘ η_ζ` on the same grid.
    fn pullback(&self, zeta: PyDiskPoint) -> Self {
        PyField(pullback(&self.0, zeta.0).field)
    }

    /// `∫(e^{p u²} − 1) dμ`; returns `(value, saturated)`.
    fn tm_invariant(&self, p: f64) -> PyResult<(f64, bool)> {
        let r = fx::tm_invariant(&self.0, p).map_err(err)?;
        Ok((r.value, r.saturated))
    }

    /// `∫(e^{p u²} − 1) dx`; returns `(value, saturated)`.
    fn tm_euclidean(&self, p: f64) -> PyResult<(f64, bool)> {
        let r = fx::tm_euclidean(&self.0, p).map_err(err)?;
        Ok((r.value, r.saturated))
    }

    /// `∫F(u) dμ` for a named nonlinearity.
    #[pyo3(signature = (nonlinearity = "quartic"))]
    fn f_integral(&self, nonlinearity: &str) -> PyResult<f64> {
        let f = Nonlinearity::by_name(nonlinearity).map_err(err)?;
        Ok(fx::f_integral(&self.0, &f).value)
    }

    fn __repr__(&self) -> String {
        let (nr, nt) = self.shape();
        format!("Field({nr}x{nt}, rho_max={})", self.rho_max())
    }
}

/// Hyperbolic distance `2 artanh |η_a(b)|`.
#[pyfunction]
fn distance(a: PyDiskPoint, b: PyDiskPoint) -> f64 {
    geodesic_distance(a.0, b.0)
}

/// `μ(V_ρ) = π sinh² ρ`.
#[pyfunction]
fn ball_area(rho: f64) -> f64 {
    tmdisk::geom::ball_area(rho)
}

/// `∫(e^{p m_k²} − 1) dμ` for the Moser functions `m_k`, `k = 2, 4, …, k_max`,
/// with `p = p_over_4pi · 4π`.
#[pyfunction]
#[pyo3(signature = (p_over_4pi = 1.0, k_max = 1024))]
fn moser_probe(py: Python<'_>, p_over_4pi: f64, k_max: u64) -> PyResult<Bound<'_, PyDict>> {
    let r = blowup_probe(p_over_4pi * 4.0 * PI, &dyadic_ks(k_max)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item(
        "verdict",
        if r.verdict == Verdict::Growing {
            "growing"
        } else {
            "bounded"
        },
    )?;
    d.set_item("growth", r.growth)?;
    d.set_item("spread", r.spread)?;
    d.set_item("k", r.entries.iter().map(|e| e.k).collect::<Vec<_>>())?;
    d.set_item("values", r.entries.iter().map(|e| e.value).collect::<Vec<_>>())?;
    d.set_item("saturated", r.any_saturated)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (eps = 0.5, cover_factor = 3.0, rho_max = 4.0, lattice_step = 0.5, samples = 100_000, seed = 7))]
fn cover(
    py: Python<'_>,
    eps: f64,
    cover_factor: f64,
    rho_max: f64,
    lattice_step: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'_, PyDict>> {
    let spec = CoveringSpec::new(eps, cover_factor, rho_max, lattice_step).map_err(err)?;
    let r = build_covering(&spec, samples, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item(
        "centers",
        r.centers.iter().map(|p| (p.rho, p.theta)).collect::<Vec<_>>(),
    )?;
    d.set_item("min_pairwise_distance", r.min_pairwise_distance)?;
    d.set_item("disjoint", r.disjoint)?;
    d.set_item("multiplicity", r.multiplicity_empirical)?;
    d.set_item("multiplicity_bound", r.multiplicity_bound)?;
    d.set_item("coverage_gaps", r.coverage_gap_count)?;
    Ok(d)
}

/// Projected gradient ascent of `∫F(u) dμ` on `‖∇u‖² = t` from `seed`.
#[pyfunction]
#[pyo3(signature = (seed, t = 1.0, nonlinearity = "quartic", max_iters = 500))]
fn maximize<'py>(
    py: Python<'py>,
    seed: &PyField,
    t: f64,
    nonlinearity: &str,
    max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let f = Nonlinearity::by_name(nonlinearity).map_err(err)?;
    let mut cfg = OptimizerConfig::new(seed.0.clone(), t);
    cfg.max_iters = max_iters;
    cfg.validate().map_err(err)?;
    let tr = py.detach(|| ascend(&cfg, &f)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("status", format!("{:?}", tr.status).to_lowercase())?;
    d.set_item("iterations", tr.iterations)?;
    d.set_item("objective", tr.final_objective())?;
    d.set_item("residual", tr.final_residual())?;
    d.set_item("monotone", tr.is_monotone())?;
    d.set_item("objective_history", tr.objective_history.clone())?;
    d.set_item("field", Py::new(py, PyField(tr.final_field))?)?;
    Ok(d)
}

/// Runs a property suite at default settings: `hardy`, `invariance`,
/// `dilation`, `local-bound`, `brezis-lieb` or `profiles-{none,single,pair}`.
/// Returns `(passed, summary)`.
#[pyfunction]
#[pyo3(signature = (kind, seed = 7))]
fn verify(py: Python<'_>, kind: &str, seed: u64) -> PyResult<(bool, String)> {
    let tol = Tolerances::default();
    let rep = py
        .detach(|| {
            let g = Arc::new(PolarGrid::default_grid());
            match kind {
                "hardy" => checks::hardy(&g, &tol, seed),
                "invariance" => checks::invariance(&g, &tol, false),
                "dilation" => checks::dilation(&tol),
                "local-bound" => checks::local_bound(&g, &tol, &LocalBoundSetup::new(&tol, seed)),
                "brezis-lieb" => checks::brezis_lieb(&g, &tol),
                _ => match kind.strip_prefix("profiles-").map(Scenario::by_name) {
                    Some(Ok(s)) => checks::profiles(s, &Arc::new(s.default_grid()), &tol).map(|x| x.0),
                    Some(Err(e)) => Err(e),
                    None => Err(tmdisk::Error::InvalidParameter(format!("unknown suite {kind:?}"))),
                },
            }
        })
        .map_err(err)?;
    Ok((rep.passed(), rep.summary()))
}

#[pymodule]
#[pyo3(name = "tmdisk")]
fn tmdisk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiskPoint>()?;
    m.add_class::<PyMobiusMap>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(ball_area, m)?)?;
    m.add_function(wrap_pyfunction!(moser_probe, m)?)?;
    m.add_function(wrap_pyfunction!(cover, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("CONVENTION", tmdisk::io::CONVENTION_TAG)?;
    Ok(())
}

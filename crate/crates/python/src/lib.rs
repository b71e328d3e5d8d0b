//! Python bindings: configuration, the assembled model with its ground state,
//! photon amplitudes, the decay report and the invariant suite.

use std::path::PathBuf;

use nalgebra::Vector3;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use photontail::asymptotics::{self, AsymptoticsReport};
use photontail::config::RunConfig;
use photontail::groundstate::{ground_state, GroundState};
use photontail::hamiltonian::{assemble, AssembledModel};
use photontail::pullthrough::{self, SpectralSurrogate};
use photontail::verify::run_suite;
use photontail::Error;

create_exception!(photontail_py, PhotontailError, PyException);
create_exception!(photontail_py, ConfigError, PhotontailError);
create_exception!(photontail_py, DegenerateGroundStateError, PhotontailError);
create_exception!(photontail_py, SolverError, PhotontailError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config(_) => ConfigError::new_err(msg),
        Error::Domain(_) => PyValueError::new_err(msg),
        Error::Io(_) => PyIOError::new_err(msg),
        Error::DegenerateGroundState { .. } => DegenerateGroundStateError::new_err(msg),
        Error::Solver { .. } | Error::Numerical { .. } | Error::Assembly { .. } => {
            SolverError::new_err(msg)
        }
    }
}

fn tuple3(v: &Vector3<f64>) -> (f64, f64, f64) {
    (v[0], v[1], v[2])
}

/// Flat `key = value` run configuration.
#[pyclass(name = "RunConfig", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        RunConfig::parse(text)
            .map(|inner| PyRunConfig { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_path(path: PathBuf) -> PyResult<Self> {
        RunConfig::from_path(&path)
            .map(|inner| PyRunConfig { inner })
            .map_err(to_py)
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.seed = seed;
        PyRunConfig { inner }
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn particles(&self) -> usize {
        self.inner.positions.len()
    }

    #[getter]
    fn bext(&self) -> (f64, f64, f64) {
        tuple3(&self.inner.bext)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn source(&self) -> &str {
        &self.inner.source
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(g={}, n_max={}, particles={}, seed={})",
            self.inner.g,
            self.inner.n_max,
            self.inner.positions.len(),
            self.inner.seed
        )
    }
}

/// Assembled Hamiltonian, its ground state and the pull-through surrogate.
#[pyclass(name = "Model", frozen)]
pub struct PyModel {
    cfg: RunConfig,
    model: AssembledModel,
    gs: GroundState,
    surrogate: SpectralSurrogate,
}

fn build(cfg: &RunConfig) -> Result<PyModel, Error> {
    let model = assemble(&cfg.model_config()?)?;
    let opts = cfg.solver_options();
    let gs = ground_state(&model, &opts)?;
    let surrogate = SpectralSurrogate::from_model(&model, &gs, &opts)?;
    Ok(PyModel {
        cfg: cfg.clone(),
        model,
        gs,
        surrogate,
    })
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(py: Python<'_>, config: Option<PyRunConfig>) -> PyResult<Self> {
        let cfg = config.map(|c| c.inner).unwrap_or_default();
        py.detach(|| build(&cfg)).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.model.dim()
    }

    #[getter]
    fn slots(&self) -> usize {
        self.model.basis.slots()
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.gs.energy
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.gs.gap
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.gs.residual
    }

    /// Ground vector, Fock index slowest and spin index fastest.
    #[getter]
    fn ground_vector(&self) -> Vec<Complex64> {
        self.gs.vector.iter().copied().collect()
    }

    #[getter]
    fn total_spin(&self) -> (f64, f64, f64) {
        tuple3(&self.surrogate.total_spin())
    }

    /// a(k)U as three state vectors, one per spatial axis.
    fn amplitude(&self, py: Python<'_>, k: [f64; 3]) -> PyResult<Vec<Vec<Complex64>>> {
        let k = Vector3::from(k);
        let a = py
            .detach(|| pullthrough::photon_amplitude(&self.surrogate, &k))
            .map_err(to_py)?;
        Ok(a.components
            .iter()
            .map(|c| c.iter().copied().collect())
            .collect())
    }

    fn amplitude_norm(&self, py: Python<'_>, k: [f64; 3]) -> PyResult<f64> {
        let k = Vector3::from(k);
        py.detach(|| pullthrough::photon_amplitude(&self.surrogate, &k))
            .map(|a| a.norm())
            .map_err(to_py)
    }

    /// Upper bound (g/√2) Σ |B(k)| ‖f‖ / |k| on the amplitude norm.
    fn amplitude_bound(&self, k: [f64; 3]) -> PyResult<f64> {
        pullthrough::amplitude_bound(&self.surrogate, &Vector3::from(k)).map_err(to_py)
    }

    /// (Σ_j ‖a_j U‖², ⟨N U, U⟩)
    fn number_check(&self) -> PyResult<(f64, f64)> {
        pullthrough::number_check(&self.model, &self.gs.vector).map_err(to_py)
    }

    fn pullthrough_residual(&self, slot: usize) -> PyResult<f64> {
        pullthrough::pullthrough_residual(&self.model, &self.surrogate, slot).map_err(to_py)
    }

    fn pullthrough_defect_residual(&self, slot: usize) -> PyResult<f64> {
        pullthrough::pullthrough_defect_residual(&self.model, &self.surrogate, slot).map_err(to_py)
    }

    /// Decay law and limit vector over the configured radii and directions.
    fn decay_report(&self, py: Python<'_>) -> PyResult<PyDecayReport> {
        let opts = self.cfg.decay_options(&self.surrogate);
        py.detach(|| asymptotics::decay_report(&self.surrogate, &opts))
            .map(|inner| PyDecayReport { inner })
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(dim={}, energy={:.12}, gap={:.6})",
            self.model.dim(),
            self.gs.energy,
            self.gs.gap
        )
    }
}

#[pyclass(name = "DecayReport", frozen)]
pub struct PyDecayReport {
    inner: AsymptoticsReport,
}

#[pymethods]
impl PyDecayReport {
    #[getter]
    fn kappa_measured(&self) -> f64 {
        self.inner.kappa_measured
    }

    #[getter]
    fn kappa_oracle(&self) -> f64 {
        self.inner.kappa_oracle
    }

    #[getter]
    fn kappa_used(&self) -> f64 {
        self.inner.kappa_used
    }

    #[getter]
    fn stated_constant(&self) -> f64 {
        self.inner.stated_constant
    }

    #[getter]
    fn proof_chain_constant(&self) -> f64 {
        self.inner.proof_chain_constant
    }

    #[getter]
    fn total_spin(&self) -> (f64, f64, f64) {
        tuple3(&self.inner.total_spin)
    }

    #[getter]
    fn asymptotic(&self) -> bool {
        self.inner.asymptotic
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    /// Rows (radius, dir_index, norm_ahat, norm_b, scaled_norm_b, err_lemma_product).
    #[allow(clippy::type_complexity)]
    fn samples(&self) -> Vec<(f64, usize, Option<f64>, f64, f64, Option<f64>)> {
        self.inner
            .samples
            .iter()
            .map(|s| {
                (
                    s.radius,
                    s.dir_index,
                    s.norm_ahat,
                    s.norm_b,
                    s.scaled_norm_b,
                    s.err_lemma_product,
                )
            })
            .collect()
    }

    fn directions<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .directions
            .iter()
            .map(|d| {
                let out = PyDict::new(py);
                out.set_item("direction", tuple3(&d.direction))?;
                out.set_item("cross_norm", d.cross_norm)?;
                out.set_item("limit_norm", d.limit_norm)?;
                out.set_item(
                    "limit_pattern",
                    d.limit_pattern.iter().copied().collect::<Vec<_>>(),
                )?;
                out.set_item("prediction_rel_error", d.prediction_rel_error)?;
                out.set_item("cosine", d.cosine)?;
                out.set_item("kappa_measured", d.kappa_measured)?;
                out.set_item("kappa_signed", d.kappa_signed)?;
                out.set_item("density_exponent", d.b_fit.map(|f| 2.0 * f.slope))?;
                out.set_item("scaled_slope", d.scaled_fit.map(|f| f.slope))?;
                out.set_item("error_lemma_slope", d.lemma_fit.map(|f| f.slope))?;
                Ok(out)
            })
            .collect()
    }
}

/// Runs every invariant check; returns (all passed, one line per check).
#[pyfunction]
#[pyo3(signature = (config = None))]
fn verify(py: Python<'_>, config: Option<PyRunConfig>) -> PyResult<(bool, Vec<String>)> {
    let cfg = config.map(|c| c.inner).unwrap_or_default();
    let (outcomes, _) = py.detach(|| run_suite(&cfg)).map_err(to_py)?;
    let passed = outcomes.iter().all(|o| o.passed);
    Ok((passed, outcomes.iter().map(|o| o.to_string()).collect()))
}

/// The contour-limit constant κ.
#[pyfunction]
fn kappa_oracle() -> f64 {
    asymptotics::kappa_oracle()
}

/// K(λ) = cos λ/λ − sin λ/λ².
#[pyfunction]
fn kernel(lambda: f64) -> f64 {
    asymptotics::kernel(lambda)
}

#[pymodule]
fn photontail_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyDecayReport>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add("PhotontailError", py.get_type::<PhotontailError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add(
        "DegenerateGroundStateError",
        py.get_type::<DegenerateGroundStateError>(),
    )?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    m.add("STATED_CONSTANT", asymptotics::STATED_CONSTANT)?;
    m.add("PROOF_CHAIN_CONSTANT", asymptotics::PROOF_CHAIN_CONSTANT)?;
    Ok(())
}

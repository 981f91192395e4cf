//! Python bindings: cascade configurations, qudit outputs, targets, metrics,
//! the optimizer and the imperfect-hardware sweep.

use catalysis_core::cascade::{self, CascadeConfig, QuditState};
use catalysis_core::fock::{self, FockVector, C64};
use catalysis_core::metrics;
use catalysis_core::optimizer::{self, OptimizationProblem};
use catalysis_core::realistic;
use catalysis_core::reference;
use catalysis_core::targets;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(catalysis, CatalysisError, PyException);

fn err(e: catalysis_core::Error) -> PyErr {
    CatalysisError::new_err(e.to_string())
}

fn vector(state: FockVector) -> Vec<C64> {
    state.into_amps()
}

#[pyclass(name = "CascadeConfig", module = "catalysis", skip_from_py_object)]
#[derive(Clone)]
struct PyCascadeConfig {
    inner: CascadeConfig,
}

#[pymethods]
impl PyCascadeConfig {
    #[new]
    fn new(alpha: C64, reflectivities: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: CascadeConfig::new(alpha, reflectivities).map_err(err)? })
    }

    /// Real, non-negative `α` from its mean photon number.
    #[staticmethod]
    fn from_alpha_sq(alpha_sq: f64, reflectivities: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: CascadeConfig::from_alpha_sq(alpha_sq, reflectivities).map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> C64 {
        self.inner.alpha
    }

    #[getter]
    fn reflectivities(&self) -> Vec<f64> {
        self.inner.reflectivities.clone()
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l()
    }

    fn policy_cutoff(&self) -> usize {
        self.inner.policy_cutoff()
    }

    fn __repr__(&self) -> String {
        format!("CascadeConfig(alpha={}, reflectivities={:?})", self.inner.alpha, self.inner.reflectivities)
    }
}

#[pyclass(name = "QuditState", module = "catalysis", skip_from_py_object)]
#[derive(Clone)]
struct PyQuditState {
    inner: QuditState,
}

#[pymethods]
impl PyQuditState {
    #[new]
    #[pyo3(signature = (displacement, amplitudes, success_probability = 1.0))]
    fn new(displacement: C64, amplitudes: Vec<C64>, success_probability: f64) -> PyResult<Self> {
        Ok(Self { inner: QuditState::new(displacement, amplitudes, success_probability).map_err(err)? })
    }

    #[getter]
    fn displacement(&self) -> C64 {
        self.inner.displacement
    }

    #[getter]
    fn amplitudes(&self) -> Vec<C64> {
        self.inner.amplitudes.clone()
    }

    #[getter]
    fn success_probability(&self) -> f64 {
        self.inner.success_probability
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l()
    }

    fn pnd(&self) -> Vec<f64> {
        self.inner.pnd()
    }

    /// Fock amplitudes of the displaced qudit.
    #[pyo3(signature = (cutoff = None))]
    fn to_fock(&self, cutoff: Option<usize>) -> PyResult<Vec<C64>> {
        let c = cutoff.unwrap_or_else(|| self.inner.policy_cutoff());
        Ok(vector(cascade::qudit_to_fock(&self.inner, c).map_err(err)?))
    }

    fn quadratures<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let q = metrics::quadrature_variances(&self.inner);
        let d = PyDict::new(py);
        d.set_item("mean_x", q.mean_x)?;
        d.set_item("mean_p", q.mean_p)?;
        d.set_item("var_x", q.var_x)?;
        d.set_item("var_p", q.var_p)?;
        d.set_item("var_min_rotated", q.var_min_rotated)?;
        d.set_item("squeezed", q.squeezed)?;
        d.set_item("squeezing_db", q.squeezing_db)?;
        Ok(d)
    }

    /// `⟨a†^t a^s⟩`.
    fn moment(&self, t: usize, s: usize) -> C64 {
        metrics::moments(&self.inner, t, s)
    }

    fn __repr__(&self) -> String {
        format!(
            "QuditState(l={}, displacement={}, success_probability={:e})",
            self.inner.l(),
            self.inner.displacement,
            self.inner.success_probability
        )
    }
}

#[pyfunction]
fn evaluate_qudit(config: &PyCascadeConfig) -> PyResult<PyQuditState> {
    Ok(PyQuditState { inner: cascade::evaluate_qudit(&config.inner).map_err(err)? })
}

/// Beam-splitter simulation in Fock space: `(amplitudes, success_probability)`.
#[pyfunction]
#[pyo3(signature = (config, cutoff = None))]
fn oracle_cascade(config: &PyCascadeConfig, cutoff: Option<usize>) -> PyResult<(Vec<C64>, f64)> {
    let c = cutoff.unwrap_or_else(|| config.inner.policy_cutoff());
    let (state, p) = cascade::oracle_cascade(&config.inner, c).map_err(err)?;
    Ok((vector(state), p))
}

#[pyfunction]
#[pyo3(signature = (config, cutoff = None))]
fn cross_check<'py>(py: Python<'py>, config: &PyCascadeConfig, cutoff: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let c = cutoff.unwrap_or_else(|| config.inner.policy_cutoff());
    let x = cascade::cross_check(&config.inner, c).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("fidelity", x.fidelity)?;
    d.set_item("closed_form_probability", x.closed_form_probability)?;
    d.set_item("oracle_probability", x.oracle_probability)?;
    d.set_item("probability_relative_error", x.probability_relative_error)?;
    d.set_item("cutoff", x.cutoff)?;
    Ok(d)
}

#[pyfunction]
fn coherent_state(alpha: C64, cutoff: usize) -> PyResult<Vec<C64>> {
    Ok(vector(fock::coherent_state(alpha, cutoff).map_err(err)?))
}

/// Largest deviation of the beam-splitter blocks from unitarity.
#[pyfunction]
fn beamsplitter_unitarity_error(reflectivity: f64, max_total: usize) -> PyResult<f64> {
    Ok(fock::beamsplitter_unitary(reflectivity, max_total).map_err(err)?.unitarity_error())
}

#[pyfunction]
fn lscs_state(g: usize, h: usize, gamma: C64, cutoff: usize) -> PyResult<Vec<C64>> {
    Ok(vector(targets::lscs_state(g, h, gamma, cutoff).map_err(err)?))
}

#[pyfunction]
fn on_state(a: C64, n: usize, cutoff: usize) -> PyResult<Vec<C64>> {
    Ok(vector(targets::on_state(a, n, cutoff).map_err(err)?))
}

#[pyfunction]
fn cubic_phase_state(a: C64, cutoff: usize) -> PyResult<Vec<C64>> {
    Ok(vector(targets::cubic_phase_state(a, cutoff).map_err(err)?))
}

/// `|⟨a|b⟩|²` for pure states given as amplitude lists.
#[pyfunction]
fn pure_fidelity(a: Vec<C64>, b: Vec<C64>) -> PyResult<f64> {
    let a = FockVector::new(a).map_err(err)?;
    let b = FockVector::new(b).map_err(err)?;
    metrics::pure_fidelity(&a, &b).map_err(err)
}

/// Wigner function on `xs × ps` (`β = x + ip`); `values[i][j]` is at `(xs[i], ps[j])`.
#[pyfunction]
#[pyo3(signature = (qudit, xs, ps, method = "closed_form"))]
fn wigner(qudit: &PyQuditState, xs: Vec<f64>, ps: Vec<f64>, method: &str) -> PyResult<Vec<Vec<f64>>> {
    let grid = match method {
        "closed_form" => metrics::wigner_closed_form(&qudit.inner, &xs, &ps),
        "numeric" => {
            let state = cascade::qudit_to_fock(&qudit.inner, qudit.inner.policy_cutoff()).map_err(err)?;
            metrics::wigner_numeric(&state.to_density(), &xs, &ps).map_err(err)?
        }
        other => {
            return Err(pyo3::exceptions::PyValueError::new_err(format!(
                "method must be 'closed_form' or 'numeric', got {other:?}"
            )))
        }
    };
    Ok(grid.values)
}

/// Multistart search for `(α, R)` matching `target_pnd` (length `l + 1`).
#[pyfunction]
#[pyo3(signature = (target_pnd, seed = 0, restarts = 64, target_amplitudes = None, reflectivity_prefix = None))]
fn optimize<'py>(
    py: Python<'py>,
    target_pnd: Vec<f64>,
    seed: u64,
    restarts: usize,
    target_amplitudes: Option<Vec<C64>>,
    reflectivity_prefix: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let l = target_pnd.len().saturating_sub(1);
    let mut problem = OptimizationProblem::new(l, target_pnd)
        .map_err(err)?
        .with_seed(seed)
        .with_restarts(restarts)
        .with_reflectivity_prefix(reflectivity_prefix.unwrap_or_default());
    if let Some(a) = target_amplitudes {
        problem = problem.with_target_amplitudes(a);
    }
    let r = py.detach(|| optimizer::optimize(&problem)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("reflectivities", r.reflectivities.clone())?;
    d.set_item("objective", r.objective)?;
    d.set_item("pnd", r.amplitudes.clone())?;
    d.set_item("fidelity", r.fidelity_vs_target)?;
    d.set_item("quantum_fidelity", r.quantum_fidelity)?;
    d.set_item("rotation", r.rotation)?;
    d.set_item("success_probability", r.success_probability)?;
    Ok(d)
}

/// `[(eta_s, fidelity, success_probability), ...]` at fixed detector efficiency.
#[pyfunction]
#[pyo3(signature = (config, eta_d, eta_s, cutoff = None, povm_terms = None))]
fn realistic_sweep(
    py: Python<'_>,
    config: &PyCascadeConfig,
    eta_d: f64,
    eta_s: Vec<f64>,
    cutoff: Option<usize>,
    povm_terms: Option<usize>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let c = cutoff.unwrap_or_else(|| config.inner.policy_cutoff());
    let cfg = config.inner.clone();
    let sweep = py
        .detach(|| realistic::eta_s_sweep(&cfg, eta_d, &eta_s, povm_terms, c))
        .map_err(err)?;
    Ok(sweep.into_iter().map(|p| (p.eta_s, p.fidelity, p.success_probability)).collect())
}

/// Every built-in reference row check as `(table, row, quantity, expected, achieved, passed)`.
#[pyfunction]
fn reference_checks() -> PyResult<Vec<(String, String, String, f64, f64, bool)>> {
    Ok(reference::all_checks()
        .map_err(err)?
        .into_iter()
        .map(|c| (c.table.to_string(), c.row, c.quantity.to_string(), c.expected, c.achieved, c.pass))
        .collect())
}

#[pymodule]
fn catalysis(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CatalysisError", m.py().get_type::<CatalysisError>())?;
    m.add_class::<PyCascadeConfig>()?;
    m.add_class::<PyQuditState>()?;
    m.add_function(wrap_pyfunction!(evaluate_qudit, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(cross_check, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_state, m)?)?;
    m.add_function(wrap_pyfunction!(beamsplitter_unitarity_error, m)?)?;
    m.add_function(wrap_pyfunction!(lscs_state, m)?)?;
    m.add_function(wrap_pyfunction!(on_state, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_phase_state, m)?)?;
    m.add_function(wrap_pyfunction!(pure_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(realistic_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reference_checks, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings for the dispersive Van der Waals toolkit.

// Triggered by the `#[pyfunction]` expansion of pyo3 0.22, not by this code.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use dispersive_vdw::experiments as ex;
use dispersive_vdw::integrate::{self, IntegratorConfig, Scheme};
use dispersive_vdw::normalform::{self, NormalFormSetting, ReducedState};
use dispersive_vdw::{jets, model, spectral, PressureLaw, SystemKind, C64};

fn err(e: dispersive_vdw::Error) -> PyErr {
    match e {
        dispersive_vdw::Error::NotContracting { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = dispersive_vdw::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Convert any serializable report into nested Python dicts and lists.
fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<PyObject> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<PyObject> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => {
            let items = a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new_bound(py, items).into_py(py)
        }
        Value::Object(m) => {
            let d = PyDict::new_bound(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_py(py)
        }
    })
}

/// Truncated Fourier grid: wavenumbers `|k| <= n_modes`.
#[pyclass(name = "Grid", frozen)]
#[derive(Clone, Copy)]
struct PyGrid(spectral::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n_modes, n_points=None))]
    fn new(n_modes: usize, n_points: Option<usize>) -> PyResult<Self> {
        let g = match n_points {
            Some(n) => spectral::Grid::new(n_modes, n),
            None => spectral::Grid::with_modes(n_modes),
        };
        g.map(PyGrid).map_err(err)
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.0.n_modes()
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.0.n_points()
    }

    fn wavenumbers(&self) -> Vec<i64> {
        self.0.wavenumbers().collect()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n_modes={}, n_points={})", self.0.n_modes(), self.0.n_points())
    }
}

/// Band-limited periodic field stored by Fourier coefficients.
#[pyclass(name = "Field")]
#[derive(Clone)]
struct PyField(spectral::SpectralField);

#[pymethods]
impl PyField {
    /// Coefficients ordered by wavenumber `-K..=K`.
    #[new]
    fn new(grid: PyGrid, coeffs: Vec<C64>) -> PyResult<Self> {
        let k = grid.0.n_modes() as i64;
        if coeffs.len() != (2 * k + 1) as usize {
            return Err(PyValueError::new_err(format!(
                "expected {} coefficients, got {}",
                2 * k + 1,
                coeffs.len()
            )));
        }
        Ok(PyField(spectral::SpectralField::from_fn(grid.0, |m| {
            coeffs[(m + k) as usize]
        })))
    }

    #[staticmethod]
    fn random(grid: PyGrid, seed: u64, band: usize) -> Self {
        PyField(spectral::random_field(grid.0, seed, band))
    }

    #[staticmethod]
    fn single_mode(grid: PyGrid, k: i64, c: C64) -> Self {
        PyField(spectral::SpectralField::single_mode(grid.0, k, c))
    }

    #[staticmethod]
    fn from_physical(grid: PyGrid, values: Vec<C64>) -> PyResult<Self> {
        spectral::SpectralField::from_physical(grid.0, &values)
            .map(PyField)
            .map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    /// Coefficients ordered by wavenumber `-K..=K`.
    fn coeffs(&self) -> Vec<C64> {
        self.0.grid().wavenumbers().map(|k| self.0.mode(k)).collect()
    }

    fn mode(&self, k: i64) -> C64 {
        self.0.mode(k)
    }

    fn to_physical(&self) -> Vec<C64> {
        self.0.to_physical()
    }

    fn evaluate_at(&self, x: f64) -> C64 {
        self.0.evaluate_at(x)
    }

    fn mean(&self) -> C64 {
        self.0.mean()
    }

    fn l2(&self) -> f64 {
        self.0.l2()
    }

    fn h1(&self) -> f64 {
        self.0.h1()
    }

    fn linf(&self) -> f64 {
        self.0.linf()
    }

    #[pyo3(signature = (order=1))]
    fn derivative(&self, order: u32) -> Self {
        PyField(self.0.derivative(order))
    }

    /// Mean-free antiderivative multiplier.
    fn apply_m(&self) -> Self {
        PyField(self.0.apply_m())
    }

    fn remove_mean(&self) -> Self {
        PyField(self.0.remove_mean())
    }

    fn conj(&self) -> Self {
        PyField(self.0.conj())
    }

    fn __add__(&self, o: &PyField) -> PyResult<Self> {
        same_grid(self, o)?;
        Ok(PyField(&self.0 + &o.0))
    }

    fn __sub__(&self, o: &PyField) -> PyResult<Self> {
        same_grid(self, o)?;
        Ok(PyField(&self.0 - &o.0))
    }

    fn __mul__(&self, a: C64) -> Self {
        PyField(self.0.scale(a))
    }

    fn __rmul__(&self, a: C64) -> Self {
        PyField(self.0.scale(a))
    }

    fn __repr__(&self) -> String {
        format!("Field(n_modes={}, l2={:.6e})", self.0.grid().n_modes(), self.0.l2())
    }
}

fn same_grid(a: &PyField, b: &PyField) -> PyResult<()> {
    if a.0.grid() == b.0.grid() {
        Ok(())
    } else {
        Err(err(dispersive_vdw::Error::GridMismatch))
    }
}

/// Pair `(u1, u2)` of fields on one grid.
#[pyclass(name = "State")]
#[derive(Clone)]
struct PyState(model::State);

#[pymethods]
impl PyState {
    #[new]
    fn new(u1: PyField, u2: PyField) -> PyResult<Self> {
        model::State::new(u1.0, u2.0).map(PyState).map_err(err)
    }

    #[getter]
    fn u1(&self) -> PyField {
        PyField(self.0.u1.clone())
    }

    #[getter]
    fn u2(&self) -> PyField {
        PyField(self.0.u2.clone())
    }

    /// `max(‖u1‖_{H¹}, ‖u2‖_{L²})`.
    fn h1_l2(&self) -> f64 {
        self.0.h1_l2()
    }

    fn __repr__(&self) -> String {
        format!("State(|u1|_H1={:.6e}, |u2|_L2={:.6e})", self.0.u1.h1(), self.0.u2.l2())
    }
}

/// Evolution system: `kind` is "regularized" or "modified"; `amplitude` is
/// `ε^α` or `λ`.
#[pyclass(name = "System", frozen)]
#[derive(Clone, Copy)]
struct PySystem(model::SystemSpec);

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (kind, epsilon, amplitude, rescaled=true))]
    fn new(kind: &str, epsilon: f64, amplitude: f64, rescaled: bool) -> PyResult<Self> {
        model::SystemSpec::new(parse(kind)?, epsilon, rescaled, amplitude)
            .map(PySystem)
            .map_err(err)
    }

    /// Amplitude of a theorem setting: `ε^α` (regularized) or `λ` (modified).
    #[staticmethod]
    fn theorem_amplitude(kind: &str, epsilon: f64, alpha_or_lambda: f64) -> PyResult<f64> {
        Ok(ex::run_amplitude(parse(kind)?, epsilon, alpha_or_lambda))
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude
    }

    #[getter]
    fn coefficients(&self) -> (f64, f64) {
        self.0.coefficients()
    }

    fn rhs(&self, pressure: &str, state: &PyState) -> PyResult<PyState> {
        model::rhs_full(&self.0, parse(pressure)?, &state.0, 0.0)
            .map(PyState)
            .map_err(err)
    }

    /// Conserved energy of a normalized state, divided by the squared amplitude.
    fn energy(&self, pressure: &str, state: &PyState) -> PyResult<f64> {
        model::scaled_energy(
            parse(pressure)?,
            &state.0,
            self.0.kind == SystemKind::Modified,
            self.0.amplitude,
        )
        .map(|e| e.value)
        .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "System(kind='{}', epsilon={}, amplitude={}, rescaled={})",
            self.0.kind, self.0.epsilon, self.0.amplitude, self.0.rescaled
        )
    }
}

fn setting(sys: &PySystem, pressure: &str) -> PyResult<NormalFormSetting> {
    integrate::setting_for(&sys.0, parse(pressure)?).map_err(err)
}

/// Zero-mean datum of norm `target_norm` with non-positive energy.
#[pyfunction]
#[pyo3(signature = (grid, seed, target_norm, pressure="p0", conjugated=false, band=(1, 8)))]
fn make_datum(
    grid: PyGrid,
    seed: u64,
    target_norm: f64,
    pressure: &str,
    conjugated: bool,
    band: (usize, usize),
) -> PyResult<PyState> {
    let mut spec = ex::DatumSpec::new(seed, target_norm, parse(pressure)?, conjugated);
    spec.mode_band = band;
    ex::make_datum(grid.0, &spec).map(PyState).map_err(err)
}

/// Integrate the full system; returns times, diagnostics, status and final state.
#[pyfunction]
#[pyo3(signature = (system, pressure, datum, dt, t_end, scheme="exp_rk2", rho_max=1.0, store_every=1))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    system: &PySystem,
    pressure: &str,
    datum: &PyState,
    dt: f64,
    t_end: f64,
    scheme: &str,
    rho_max: f64,
    store_every: usize,
) -> PyResult<PyObject> {
    let mut cfg = IntegratorConfig::new(dt, t_end).map_err(err)?;
    cfg.scheme = parse::<Scheme>(scheme)?;
    cfg.blowup_threshold = rho_max;
    cfg.store_every = store_every;
    let law: PressureLaw = parse(pressure)?;
    let tr = py
        .allow_threads(|| integrate::solve_full(&system.0, law, &datum.0, &cfg))
        .map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("times", tr.times.clone())?;
    out.set_item("status", to_py(py, &tr.status)?)?;
    out.set_item("diagnostics", to_py(py, &tr.diagnostics)?)?;
    out.set_item("max_proxy", tr.max_proxy())?;
    out.set_item("final_state", PyState(tr.states.last().unwrap().clone()).into_py(py))?;
    Ok(out.into_py(py))
}

/// Full unknowns at time `t` to reduced (normal-form, de-oscillated) unknowns.
#[pyfunction]
fn to_reduced(system: &PySystem, pressure: &str, state: &PyState, t: f64) -> PyResult<PyState> {
    let s = setting(system, pressure)?;
    Ok(PyState(normalform::full_to_reduced(&s, &state.0, t).fields()))
}

/// Inverse of [`to_reduced`].
#[pyfunction]
fn to_full(system: &PySystem, pressure: &str, reduced: &PyState, t: f64) -> PyResult<PyState> {
    let s = setting(system, pressure)?;
    Ok(PyState(normalform::reduced_to_full(
        &s,
        &ReducedState::from_fields(reduced.0.clone(), t),
    )))
}

/// L² norm of the commutator identity residual for `state`.
#[pyfunction]
fn cancellation_residual(system: &PySystem, pressure: &str, state: &PyState) -> PyResult<f64> {
    Ok(normalform::cancellation_residual(&setting(system, pressure)?, &state.0))
}

#[pyfunction]
#[pyo3(signature = (seed, n_modes, s_list=vec![0.0, 1.0, 2.0]))]
fn lemma_m_suite(py: Python<'_>, seed: u64, n_modes: usize, s_list: Vec<f64>) -> PyResult<PyObject> {
    let r = py
        .allow_threads(|| ex::lemma_m_suite(seed, n_modes, &s_list))
        .map_err(err)?;
    to_py(py, &r)
}

/// Jet coefficient `f_n(u)` of the cubic flow.
#[pyfunction]
fn f_n(u: &PyField, n: usize) -> PyResult<PyField> {
    jets::f_n(&u.0, n).map(PyField).map_err(err)
}

/// Smallest admissible integration-by-parts order.
#[pyfunction]
#[pyo3(signature = (lam, epsilon, c_embed=1.0))]
fn choose_n(lam: f64, epsilon: f64, c_embed: f64) -> PyResult<usize> {
    jets::choose_n(lam, epsilon, c_embed).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, epsilon, alpha, c=1.0, c0=1.0))]
fn continuation_schedule(
    py: Python<'_>,
    rho: f64,
    epsilon: f64,
    alpha: f64,
    c: f64,
    c0: f64,
) -> PyResult<PyObject> {
    to_py(py, &ex::continuation_schedule(rho, epsilon, alpha, c, c0).map_err(err)?)
}

#[pyfunction]
fn growth_experiment(py: Python<'_>, pressure: &str, u_star: f64, ks: Vec<i64>) -> PyResult<PyObject> {
    to_py(py, &ex::growth_experiment(parse(pressure)?, u_star, &ks).map_err(err)?)
}

/// Existence-time proxy over `epsilons` with `dt = dt_coeff ε²`,
/// `t_end = t_end_coeff ε²`.
#[pyfunction]
#[pyo3(signature = (kind, pressure, alpha_or_lambda, epsilons, n_modes=16, seed=7, target_norm=0.15, dt_coeff=0.01, t_end_coeff=100.0, rho_max=1.0))]
#[allow(clippy::too_many_arguments)]
fn scaling_sweep(
    py: Python<'_>,
    kind: &str,
    pressure: &str,
    alpha_or_lambda: f64,
    epsilons: Vec<f64>,
    n_modes: usize,
    seed: u64,
    target_norm: f64,
    dt_coeff: f64,
    t_end_coeff: f64,
    rho_max: f64,
) -> PyResult<PyObject> {
    let kind: SystemKind = parse(kind)?;
    let law: PressureLaw = parse(pressure)?;
    let datum = ex::DatumSpec::new(seed, target_norm, law, kind == SystemKind::Modified);
    let timing = ex::SweepTiming {
        dt_coeff,
        dt_power: 2.0,
        t_end_coeff,
        t_end_power: 2.0,
        rho_max,
        scheme: Scheme::ExpRk2,
    };
    let r = py
        .allow_threads(|| {
            ex::scaling_sweep(kind, law, alpha_or_lambda, &epsilons, n_modes, datum, timing)
        })
        .map_err(err)?;
    to_py(py, &r)
}

/// Picard iteration of the reduced system from `datum` on `[0, t_final]`;
/// returns the report and the sampled reduced trajectory.
#[pyfunction]
#[pyo3(signature = (system, pressure, datum, t_final, max_iter=50))]
fn picard_solve(
    py: Python<'_>,
    system: &PySystem,
    pressure: &str,
    datum: &PyState,
    t_final: f64,
    max_iter: usize,
) -> PyResult<PyObject> {
    let s = setting(system, pressure)?;
    let (traj, report) = py
        .allow_threads(|| integrate::picard_solve(&s, &datum.0.u1, &datum.0.u2, t_final, max_iter))
        .map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("report", to_py(py, &report)?)?;
    out.set_item("times", traj.iter().map(|w| w.t).collect::<Vec<_>>())?;
    let states: Vec<PyObject> = traj
        .into_iter()
        .map(|w| PyState(w.fields()).into_py(py))
        .collect();
    out.set_item("states", states)?;
    Ok(out.into_py(py))
}

#[pymodule]
fn dispersive_vdw_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(make_datum, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(to_reduced, m)?)?;
    m.add_function(wrap_pyfunction!(to_full, m)?)?;
    m.add_function(wrap_pyfunction!(cancellation_residual, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_m_suite, m)?)?;
    m.add_function(wrap_pyfunction!(f_n, m)?)?;
    m.add_function(wrap_pyfunction!(choose_n, m)?)?;
    m.add_function(wrap_pyfunction!(continuation_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(growth_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(picard_solve, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

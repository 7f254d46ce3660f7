//! Python bindings for `epqubits`.

use epqubits::dynamics::{evolve_exact, phase_trace};
use epqubits::entanglement;
use epqubits::lindblad::{integrate_master, LindbladParams};
use epqubits::model::{self, QubitParams};
use epqubits::numerics::{CMatrix, C64};
use epqubits::optimizer::{self, OptimalSearch};
use epqubits::perturbation;
use epqubits::spectra::{self, SweepRange};
use epqubits::state::{DensityMatrix, PureState};
use epqubits::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::NotIdenticalResonant | Error::DimensionMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

fn rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix(rows: Vec<Vec<C64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn state(amplitudes: [C64; 4]) -> PureState {
    PureState::from_amplitudes(amplitudes)
}

/// Parameters of the coupled qubit pair.
#[pyclass(name = "SystemParams", frozen)]
struct PySystem(model::SystemParams);

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (gamma1, omega1, gamma2, omega2, coupling, delta1 = 0.0, delta2 = 0.0))]
    fn new(gamma1: f64, omega1: f64, gamma2: f64, omega2: f64, coupling: f64, delta1: f64, delta2: f64) -> PyResult<Self> {
        let q1 = QubitParams::new(delta1, gamma1, omega1).map_err(to_py)?;
        let q2 = QubitParams::new(delta2, gamma2, omega2).map_err(to_py)?;
        Ok(Self(model::SystemParams::new(q1, q2, coupling).map_err(to_py)?))
    }

    /// Identical resonant qubits.
    #[staticmethod]
    fn identical(gamma: f64, omega: f64, coupling: f64) -> PyResult<Self> {
        Ok(Self(model::SystemParams::identical(gamma, omega, coupling).map_err(to_py)?))
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.0.coupling
    }

    /// `(delta, gamma, omega)` of qubit 1 and qubit 2.
    #[getter]
    fn qubits(&self) -> [(f64, f64, f64); 2] {
        [self.0.qubit1, self.0.qubit2].map(|q| (q.delta, q.gamma, q.omega))
    }

    fn hamiltonian(&self) -> Vec<Vec<C64>> {
        rows(&self.0.hamiltonian())
    }

    fn eigenvalues(&self) -> PyResult<Vec<C64>> {
        Ok(spectra::system_eigensystem(&self.0).map_err(to_py)?.eigenvalues)
    }

    /// Pairwise moduli of normalized right-eigenvector overlaps.
    fn overlaps(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(spectra::system_overlap_matrix(&self.0).map_err(to_py)?.values)
    }

    fn __repr__(&self) -> String {
        let [a, b] = self.qubits();
        format!("SystemParams(qubit1={a:?}, qubit2={b:?}, coupling={})", self.0.coupling)
    }
}

/// Normalized amplitudes of `exp(-iHt) psi0` in the order ff, fe, ef, ee.
#[pyfunction]
fn evolve(system: &PySystem, psi0: [C64; 4], t: f64) -> PyResult<[C64; 4]> {
    Ok(evolve_exact(&system.0, &state(psi0), t).map_err(to_py)?.normalized.amplitudes())
}

#[pyfunction]
fn concurrence_pure(amplitudes: [C64; 4]) -> PyResult<f64> {
    entanglement::concurrence_pure(&state(amplitudes)).map_err(to_py)
}

/// Wootters concurrence of a 4x4 density matrix (trace-normalized first).
#[pyfunction]
fn concurrence_mixed(rho: Vec<Vec<C64>>) -> PyResult<f64> {
    let rho = DensityMatrix::new(matrix(rho)?).map_err(to_py)?;
    entanglement::concurrence_mixed(&rho).map_err(to_py)
}

/// Concurrence of the exact trajectory from |ff> on the given times.
#[pyfunction]
fn concurrence_series(system: &PySystem, times: Vec<f64>) -> PyResult<Vec<f64>> {
    let uniform = times.windows(3).all(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() <= 1e-12 * w[2].abs().max(1.0));
    if !uniform {
        return times
            .iter()
            .map(|&t| {
                let psi = evolve_exact(&system.0, &PureState::ff(), t).map_err(to_py)?;
                entanglement::concurrence_pure(&psi.raw).map_err(to_py)
            })
            .collect();
    }
    optimizer::concurrence_series(&system.0, &PureState::ff(), &times).map_err(to_py)
}

/// Wrapped `Arg(alpha) + Arg(delta) - Arg(beta) - Arg(zeta)` from |ff>.
#[pyfunction]
fn differential_phase(system: &PySystem, times: Vec<f64>) -> PyResult<Vec<f64>> {
    let records = phase_trace(&system.0, &PureState::ff(), &times).map_err(to_py)?;
    Ok(records.iter().map(|r| r.dphi).collect())
}

#[pyfunction]
fn concurrence_closed_form(gamma: f64, omega: f64, coupling: f64, t: f64) -> PyResult<f64> {
    perturbation::concurrence_closed_form(gamma, omega, coupling, t).map_err(to_py)
}

/// First-order eigenvalues of the coupled identical pair.
#[pyfunction]
fn perturbed_eigenvalues(gamma: f64, omega: f64, coupling: f64) -> PyResult<[C64; 4]> {
    Ok(perturbation::perturbed_eigensystem(gamma, omega, coupling).map_err(to_py)?.eigenvalues)
}

#[pyfunction]
#[pyo3(signature = (system, omega, eps = spectra::DEFAULT_APPROACH_EPS, threshold = spectra::DEFAULT_OVERLAP_THRESHOLD, gap = spectra::DEFAULT_CLUSTER_GAP))]
fn ep_order(system: &PySystem, omega: f64, eps: f64, threshold: f64, gap: f64) -> PyResult<usize> {
    Ok(spectra::ep_order(&system.0, omega, eps, threshold, gap).map_err(to_py)?.order)
}

/// Grid search of C(Omega, t) from |ff>; returns the refined argmax.
#[pyfunction]
#[pyo3(signature = (coupling, gamma, omega_range, t_range))]
fn concurrence_map<'py>(
    py: Python<'py>,
    coupling: f64,
    gamma: f64,
    omega_range: (f64, f64, usize),
    t_range: (f64, f64, usize),
) -> PyResult<Bound<'py, PyDict>> {
    let w = SweepRange::new(omega_range.0, omega_range.1, omega_range.2).map_err(to_py)?;
    let t = SweepRange::new(t_range.0, t_range.1, t_range.2).map_err(to_py)?;
    let g = py.detach(|| optimizer::concurrence_map(coupling, gamma, &w, &t)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("omega_axis", g.omega_axis)?;
    d.set_item("t_axis", g.t_axis)?;
    d.set_item("values", g.values)?;
    d.set_item("omega_star", g.argmax.omega)?;
    d.set_item("t_star", g.argmax.t)?;
    d.set_item("c_max", g.argmax.c_max)?;
    Ok(d)
}

/// `(omega_star, t_star, c_max)` of the highest first entanglement peak.
#[pyfunction]
fn first_peak_optimum(py: Python<'_>, gamma: f64, coupling: f64) -> PyResult<(f64, f64, f64)> {
    let search = OptimalSearch::default();
    let base = model::SystemParams::identical(gamma, search.omega.start, coupling).map_err(to_py)?;
    let o = py.detach(|| optimizer::first_peak_optimum(&base, &search)).map_err(to_py)?;
    Ok((o.omega_star, o.t_star, o.c_max))
}

/// First time the undamped pair reaches `target` concurrence from |ff>.
#[pyfunction]
#[pyo3(signature = (coupling, omega, target = optimizer::HERMITIAN_TARGET))]
fn hermitian_baseline(coupling: f64, omega: f64, target: f64) -> PyResult<f64> {
    optimizer::hermitian_baseline(coupling, omega, &PureState::ff(), target).map_err(to_py)
}

/// Master-equation run from |ff>; returns times, traces and concurrences.
#[pyfunction]
#[pyo3(signature = (system, gamma_f, t_max, dt = epqubits::lindblad::DEFAULT_DT))]
fn lindblad<'py>(py: Python<'py>, system: &PySystem, gamma_f: f64, t_max: f64, dt: f64) -> PyResult<Bound<'py, PyDict>> {
    let mut p = LindbladParams::new(system.0, gamma_f, t_max).map_err(to_py)?;
    p.dt = dt;
    let rho0 = DensityMatrix::from_pure(&PureState::ff());
    let trace = py.detach(|| integrate_master(&rho0, &p)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t", trace.points.iter().map(|x| x.t).collect::<Vec<_>>())?;
    d.set_item("trace", trace.points.iter().map(|x| x.trace).collect::<Vec<_>>())?;
    d.set_item("concurrence", trace.points.iter().map(|x| x.concurrence).collect::<Vec<_>>())?;
    d.set_item("step_doubling_change", trace.step_doubling_change)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "epqubits")]
fn epqubits_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_pure, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_series, m)?)?;
    m.add_function(wrap_pyfunction!(differential_phase, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(perturbed_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(ep_order, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_map, m)?)?;
    m.add_function(wrap_pyfunction!(first_peak_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(hermitian_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(lindblad, m)?)?;
    Ok(())
}

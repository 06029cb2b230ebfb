//! Python bindings: scenario configuration, simulation, trace access and the
//! verification monitors, exposed in-process.
//!
//! Usage from Python:
//!
//! ```text
//! import salvo_py
//! sc = salvo_py.Scenario.from_preset("example1")
//! trace = sc.run()
//! print(trace.hit_times(0.01))
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use salvo_core::error::Error;
use salvo_core::graph::{self, CommGraph};
use salvo_core::guidance::reference_at_unchecked;
use salvo_core::output::emit_outputs;
use salvo_core::scenario::{LawMode, ScenarioConfig};
use salvo_core::sim;
use salvo_core::trace::SimTrace;
use salvo_core::verify;

fn err_to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Serialize(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A validated scenario configuration.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Load a built-in preset: "example1" or "example2".
    #[staticmethod]
    fn from_preset(name: &str) -> PyResult<Self> {
        match name {
            "example1" => Ok(Self {
                cfg: salvo_core::scenario::example1(),
            }),
            "example2" => Ok(Self {
                cfg: salvo_core::scenario::example2(),
            }),
            other => Err(PyValueError::new_err(format!(
                "unknown preset '{other}' (expected example1 or example2)"
            ))),
        }
    }

    /// Parse a scenario from TOML text (validates every invariant).
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: ScenarioConfig::from_toml_str(text).map_err(err_to_py)?,
        })
    }

    /// Load and validate a scenario file.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: ScenarioConfig::from_path(std::path::Path::new(path)).map_err(err_to_py)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.cfg.to_toml_string().map_err(err_to_py)
    }

    /// Number of attackers.
    #[getter]
    fn n(&self) -> usize {
        self.cfg.n()
    }

    #[getter]
    fn law(&self) -> String {
        self.cfg.guidance.law.to_string()
    }

    #[getter]
    fn tf(&self) -> f64 {
        self.cfg.time.tf_s
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.cfg.time.dt_s
    }

    /// Change the integration step (revalidated at run time).
    fn set_dt(&mut self, dt: f64) {
        self.cfg.time.dt_s = dt;
    }

    /// Select the guidance law: known | observed | piecewise | ballistic.
    fn set_law(&mut self, law: &str) -> PyResult<()> {
        self.cfg.guidance.law = match law {
            "known" => LawMode::Known,
            "observed" => LawMode::Observed,
            "piecewise" => LawMode::Piecewise,
            "ballistic" => LawMode::Ballistic,
            other => return Err(PyValueError::new_err(format!("unknown law '{other}'"))),
        };
        Ok(())
    }

    /// Piecewise segment count.
    fn set_segments(&mut self, segments: usize) {
        self.cfg.guidance.segments = segments;
    }

    /// Integrate the scenario and return the full trace.
    fn run(&self) -> PyResult<Trace> {
        Ok(Trace {
            trace: sim::run_scenario(&self.cfg).map_err(err_to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(law={}, n={}, t=[{}, {}], dt={})",
            self.cfg.guidance.law,
            self.cfg.n(),
            self.cfg.time.t0_s,
            self.cfg.time.tf_s,
            self.cfg.time.dt_s
        )
    }
}

/// A completed (or truncated) simulation trace.
#[pyclass]
struct Trace {
    trace: SimTrace,
}

impl Trace {
    fn attacker(&self, i: usize) -> PyResult<&salvo_core::trace::AttackerSeries> {
        self.trace
            .attackers
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("attacker index {i} out of range")))
    }
}

#[pymethods]
impl Trace {
    #[getter]
    fn n(&self) -> usize {
        self.trace.n()
    }

    fn __len__(&self) -> usize {
        self.trace.len()
    }

    #[getter]
    fn is_complete(&self) -> bool {
        self.trace.is_complete()
    }

    #[getter]
    fn diagnostic(&self) -> Option<String> {
        self.trace.diagnostic.clone()
    }

    fn times(&self) -> Vec<f64> {
        self.trace.t.clone()
    }

    fn r(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.r.clone())
    }

    fn v_r(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.v_r.clone())
    }

    fn v_lambda(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.v_lambda.clone())
    }

    fn los_angle(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.lambda.clone())
    }

    fn command_radial(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.a_mr.clone())
    }

    fn command_lateral(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.a_mlambda.clone())
    }

    fn costate_r(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.rho_r.clone())
    }

    fn costate_v_lambda(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.rho_vlambda.clone())
    }

    /// Observer error series Ã_T (empty outside observed/piecewise runs).
    fn observation_error(&self, i: usize) -> PyResult<Vec<f64>> {
        Ok(self.attacker(i)?.a_t_err.clone())
    }

    /// Attacker track as (xs, ys).
    fn position(&self, i: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let a = self.attacker(i)?;
        Ok((a.x.clone(), a.y.clone()))
    }

    /// Target track as (xs, ys).
    fn target_track(&self) -> (Vec<f64>, Vec<f64>) {
        (self.trace.target.x.clone(), self.trace.target.y.clone())
    }

    fn lyapunov(&self) -> Vec<f64> {
        self.trace.lyapunov.clone()
    }

    /// Reference values (R*, V_r*, V_λ*) of attacker `i` at time `t`.
    fn reference(&self, i: usize, t: f64) -> PyResult<(f64, f64, f64)> {
        if self.trace.meta.segments.is_empty() {
            return Err(PyValueError::new_err(
                "ballistic traces carry no reference trajectories",
            ));
        }
        if i >= self.trace.n() {
            return Err(PyValueError::new_err(format!(
                "attacker index {i} out of range"
            )));
        }
        let seg = self.trace.segment_at(t);
        let rp = reference_at_unchecked(&seg.gains, &seg.boundary, i, t);
        Ok((rp.r_star, rp.v_r_star, rp.v_lambda_star))
    }

    /// First killing-radius crossings, one entry per attacker (None = no hit).
    fn hit_times(&self, killing_radius_km: f64) -> PyResult<Vec<Option<f64>>> {
        let report = sim::detect_simultaneity(&self.trace, killing_radius_km).map_err(err_to_py)?;
        Ok(report.hit_times)
    }

    fn to_json(&self) -> PyResult<String> {
        self.trace.to_json().map_err(err_to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            trace: SimTrace::from_json(text).map_err(err_to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(law={}, n={}, samples={}, complete={})",
            self.trace.meta.law,
            self.trace.n(),
            self.trace.len(),
            self.trace.is_complete()
        )
    }
}

/// Trapezoidal cost functional of a trace (piecewise-aware).
#[pyfunction]
fn evaluate_cost(trace: &Trace) -> PyResult<f64> {
    verify::evaluate_cost_segments(&trace.trace).map_err(err_to_py)
}

/// Stationarity/Hamiltonian diagnostics of a single-segment trace.
#[pyfunction]
fn check_stationarity<'py>(py: Python<'py>, trace: &Trace) -> PyResult<Bound<'py, PyDict>> {
    if trace.trace.meta.segments.len() != 1 {
        return Err(PyValueError::new_err(
            "stationarity check expects a single-segment trace",
        ));
    }
    let report = verify::check_stationarity(&trace.trace, &trace.trace.meta.segments[0].gains)
        .map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("j", report.j)?;
    out.set_item("h_terminal", report.h_terminal)?;
    out.set_item(
        "max_stationarity_residual_r",
        report.max_stationarity_residual_r,
    )?;
    out.set_item(
        "max_stationarity_residual_vlambda",
        report.max_stationarity_residual_vlambda,
    )?;
    out.set_item("max_costate_ode_residual_r", report.max_costate_ode_residual_r)?;
    out.set_item(
        "max_costate_ode_residual_vlambda",
        report.max_costate_ode_residual_vlambda,
    )?;
    out.set_item("convexity_ok", report.convexity_ok)?;
    Ok(out)
}

/// Lyapunov monitor of an observed/piecewise trace.
#[pyfunction]
#[pyo3(signature = (trace, tol = verify::LYAPUNOV_TOL))]
fn lyapunov_monitor<'py>(py: Python<'py>, trace: &Trace, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let report = verify::lyapunov_monitor(&trace.trace, tol).map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("monotone", report.monotone)?;
    out.set_item("max_step_increase", report.max_step_increase)?;
    out.set_item("bound_violations", report.bound_violations)?;
    out.set_item("max_bound_excursion", report.max_bound_excursion)?;
    out.set_item("v", report.v_series)?;
    out.set_item("dv", report.dv_series)?;
    Ok(out)
}

/// Hit times, spread and the predicted common impact time.
#[pyfunction]
fn detect_simultaneity<'py>(
    py: Python<'py>,
    trace: &Trace,
    killing_radius_km: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = sim::detect_simultaneity(&trace.trace, killing_radius_km).map_err(err_to_py)?;
    let out = PyDict::new(py);
    out.set_item("hit_times", report.hit_times)?;
    out.set_item("spread", report.spread)?;
    out.set_item("predicted_impact_time", report.predicted_impact_time)?;
    out.set_item("predicted_per_attacker", report.predicted_per_attacker)?;
    Ok(out)
}

/// Write the full artifact set (trace JSON, CSV series, SVG plots, summary,
/// manifest) for a trace; returns the artifact names.
#[pyfunction]
fn write_outputs(trace: &Trace, dir: &str) -> PyResult<Vec<String>> {
    let manifest = emit_outputs(&trace.trace, None, None, "python", std::path::Path::new(dir))
        .map_err(err_to_py)?;
    Ok(manifest.artifacts)
}

/// True iff the weighted adjacency matrix contains a directed spanning tree.
#[pyfunction]
fn contains_spanning_tree(weights: Vec<Vec<f64>>) -> PyResult<bool> {
    let g = CommGraph::new(weights).map_err(err_to_py)?;
    Ok(graph::contains_spanning_tree(&g))
}

/// Neighbor-weighted terminal aggregation (1/N)·A·x.
#[pyfunction]
fn consensus_terminal(weights: Vec<Vec<f64>>, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let g = CommGraph::new(weights).map_err(err_to_py)?;
    graph::consensus_terminal(&g, &values).map_err(err_to_py)
}

/// One relay hop: from (R_i, λ_i) and the link (r_ij, α) to (R_j, λ_j).
#[pyfunction]
fn relay_target_info(r_i: f64, lambda_i: f64, r_ij: f64, alpha: f64) -> PyResult<(f64, f64)> {
    let obs = graph::RelayObservation {
        observer_id: 1,
        target_speed: 1.0,
        r_i,
        lambda_i,
        r_ij,
        alpha,
    };
    graph::relay_target_info(&obs).map_err(err_to_py)
}

#[pymodule]
fn salvo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Scenario>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(evaluate_cost, m)?)?;
    m.add_function(wrap_pyfunction!(check_stationarity, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_monitor, m)?)?;
    m.add_function(wrap_pyfunction!(detect_simultaneity, m)?)?;
    m.add_function(wrap_pyfunction!(write_outputs, m)?)?;
    m.add_function(wrap_pyfunction!(contains_spanning_tree, m)?)?;
    m.add_function(wrap_pyfunction!(consensus_terminal, m)?)?;
    m.add_function(wrap_pyfunction!(relay_target_info, m)?)?;
    Ok(())
}

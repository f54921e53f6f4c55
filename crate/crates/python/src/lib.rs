//! Python bindings: meshes, space-time solves, convergence and step-size
//! studies, the two-step stability analysis and the modal ODE oracle.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wavefem::config::parse_solver;
use wavefem::mesh::{build_structured_mesh, mesh_metrics, Rectangle, TriMesh};
use wavefem::ode::{discrete_modal_solve, observed_orders, solve_modal, Forcing, ModalProblem};
use wavefem::spatial::{assemble_spatial, EdgeDofMap};
use wavefem::stability::{self as stab, Criterion};
use wavefem::system::{SolutionCoefficients, SolverKind, SpaceTimeSystem};
use wavefem::temporal::TimePartition;
use wavefem::verification::{self as ver, ManufacturedCase};
use wavefem::FemError;

fn py_err(e: FemError) -> PyErr {
    match e {
        FemError::InvalidArgument(_) | FemError::Parse(_) | FemError::InvalidMesh(_) | FemError::InvalidPartition(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn case_from(name: &str, sigma: Option<bool>, end_time: Option<f64>) -> PyResult<ManufacturedCase> {
    let mut case = ManufacturedCase::new(name.parse().map_err(py_err)?);
    if let Some(s) = sigma {
        case = case.with_sigma(s);
    }
    if let Some(t) = end_time {
        case = case.with_end_time(t);
    }
    Ok(case)
}

fn solver_from(name: &str) -> PyResult<SolverKind> {
    parse_solver(name).map_err(py_err)
}

/// Conforming triangulation of a rectangle.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: TriMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> PyResult<Self> {
        Ok(PyMesh { inner: TriMesh::from_parts(vertices, triangles).map_err(py_err)? })
    }

    /// `n × n` squares, each split along its diagonal.
    #[staticmethod]
    #[pyo3(signature = (n, x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0))]
    fn structured(n: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> PyResult<Self> {
        let rect = Rectangle::new(x_min, x_max, y_min, y_max);
        Ok(PyMesh { inner: build_structured_mesh(rect, n).map_err(py_err)? })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn vertices(&self) -> Vec<[f64; 2]> {
        self.inner.vertices().to_vec()
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles().to_vec()
    }

    /// `(h_max, h_min, quasi_uniformity, shape_constant)` with `h = |K|^(1/2)`.
    fn metrics(&self) -> (f64, f64, f64, f64) {
        let m = mesh_metrics(&self.inner);
        (m.h_max, m.h_min, m.quasi_uniformity, m.shape_constant_cf)
    }

    fn inverse_inequality_constant(&self) -> PyResult<f64> {
        stab::inverse_inequality_constant(&self.inner).map_err(py_err)
    }

    /// Largest eigenvalue of `A_xx v = λ M_x v` for the material of `case`.
    #[pyo3(signature = (case="A1", sigma=None))]
    fn max_eigenvalue(&self, case: &str, sigma: Option<bool>) -> PyResult<f64> {
        let case = case_from(case, sigma, None)?;
        let dm = EdgeDofMap::new(&self.inner);
        let sp = assemble_spatial(&self.inner, &case.material(), &dm).map_err(py_err)?;
        stab::max_generalized_eigenvalue(&sp.a_xx, &sp.m_x, 1e-8, 500).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMesh { inner: TriMesh::from_text(text).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, triangles={}, edges={})", self.inner.n_vertices(), self.inner.n_triangles(), self.inner.n_edges())
    }
}

/// Discrete solution of a manufactured case.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    mesh: TriMesh,
    case: ManufacturedCase,
    sol: SolutionCoefficients,
    #[pyo3(get)]
    n_dofs: usize,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn residual(&self) -> f64 {
        self.sol.residual
    }

    /// Coefficients per quadratic time node over all edges; node 0 is the
    /// initial interpolant.
    fn nodal(&self) -> Vec<Vec<f64>> {
        self.sol.nodal.clone()
    }

    fn time_nodes(&self) -> Vec<f64> {
        (0..self.sol.nodal.len()).map(|i| self.sol.partition.quadratic_node(i)).collect()
    }

    /// `((A_1, A_2), (∂ₜA_1, ∂ₜA_2), curl A)` at `(t, x, y)`.
    fn evaluate(&self, t: f64, x: f64, y: f64) -> PyResult<([f64; 2], [f64; 2], f64)> {
        let v = self.sol.evaluate(&self.mesh, t, [x, y]).map_err(py_err)?;
        Ok((v.value, v.time_derivative, v.curl))
    }

    /// `(L2(Q) error, H^(curl;1)(Q) seminorm error)` against the exact field.
    fn errors(&self) -> PyResult<(f64, f64)> {
        let e = ver::compute_errors(&self.sol, &self.mesh, &self.case.material(), &self.case).map_err(py_err)?;
        Ok((e.l2, e.seminorm))
    }

    fn to_csv(&self) -> String {
        self.sol.to_csv()
    }
}

/// Assembles and solves a manufactured case on an `n × n` mesh with
/// `n_time` time elements.
#[pyfunction]
#[pyo3(signature = (case, n_per_side, n_time, solver="marching", sigma=None, end_time=None))]
fn solve(
    py: Python<'_>,
    case: &str,
    n_per_side: usize,
    n_time: usize,
    solver: &str,
    sigma: Option<bool>,
    end_time: Option<f64>,
) -> PyResult<PySolution> {
    let case = case_from(case, sigma, end_time)?;
    let kind = solver_from(solver)?;
    py.detach(|| {
        let mesh = build_structured_mesh(case.domain(), n_per_side)?;
        let problem = case.problem(mesh.clone(), TimePartition::equidistant(case.end_time, n_time)?);
        let system = SpaceTimeSystem::assemble(&problem)?;
        let sol = system.solve_with(kind)?;
        Ok(PySolution { mesh, case, sol, n_dofs: system.n_dofs() })
    })
    .map_err(py_err)
}

/// One cell of a convergence table or step-size sweep.
#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    n_per_side: usize,
    n_time: usize,
    h_x: f64,
    h_t: f64,
    n_dofs: usize,
    l2: f64,
    seminorm: f64,
    residual: f64,
    level: Option<u32>,
    eoc_l2: Option<f64>,
    eoc_semi: Option<f64>,
}

impl PyRunResult {
    fn from_run(r: &ver::RunResult) -> Self {
        PyRunResult {
            n_per_side: r.n_per_side,
            n_time: r.n_time,
            h_x: r.h_x,
            h_t: r.h_t,
            n_dofs: r.n_dofs,
            l2: r.errors.l2,
            seminorm: r.errors.seminorm,
            residual: r.residual,
            level: None,
            eoc_l2: None,
            eoc_semi: None,
        }
    }
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!("RunResult(n={}, N_t={}, l2={:.4e}, seminorm={:.4e})", self.n_per_side, self.n_time, self.l2, self.seminorm)
    }
}

#[pyfunction]
#[pyo3(signature = (case, n_per_side, n_time, solver="marching", sigma=None, end_time=None))]
fn run_case(
    py: Python<'_>,
    case: &str,
    n_per_side: usize,
    n_time: usize,
    solver: &str,
    sigma: Option<bool>,
    end_time: Option<f64>,
) -> PyResult<PyRunResult> {
    let case = case_from(case, sigma, end_time)?;
    let kind = solver_from(solver)?;
    let r = py.detach(|| ver::run_case(&case, n_per_side, n_time, kind)).map_err(py_err)?;
    Ok(PyRunResult::from_run(&r))
}

/// Uniform refinement with `2^L` cells per side and `h_t = ratio · h_x`.
#[pyfunction]
#[pyo3(signature = (case, levels, ratio=1.0, solver="marching", sigma=None, end_time=None))]
fn convergence_study(
    py: Python<'_>,
    case: &str,
    levels: Vec<u32>,
    ratio: f64,
    solver: &str,
    sigma: Option<bool>,
    end_time: Option<f64>,
) -> PyResult<Vec<PyRunResult>> {
    let case = case_from(case, sigma, end_time)?;
    let kind = solver_from(solver)?;
    let table =
        py.detach(|| ver::run_convergence_study(&case, &levels, |l| ver::level_resolution(&case, l, ratio), kind)).map_err(py_err)?;
    Ok(table
        .rows
        .iter()
        .map(|row| PyRunResult { level: Some(row.level), eoc_l2: row.eoc_l2, eoc_semi: row.eoc_semi, ..PyRunResult::from_run(&row.run) })
        .collect())
}

/// Error grid: rows follow `n_per_side`, columns follow `n_time`.
#[pyfunction]
#[pyo3(signature = (case, n_per_side, n_time, solver="marching", sigma=None, end_time=None))]
fn cfl_sweep(
    py: Python<'_>,
    case: &str,
    n_per_side: Vec<usize>,
    n_time: Vec<usize>,
    solver: &str,
    sigma: Option<bool>,
    end_time: Option<f64>,
) -> PyResult<Vec<Vec<PyRunResult>>> {
    let case = case_from(case, sigma, end_time)?;
    let kind = solver_from(solver)?;
    let sweep = py.detach(|| ver::run_cfl_sweep(&case, &n_per_side, &n_time, kind)).map_err(py_err)?;
    Ok(sweep.cells.iter().map(|row| row.iter().map(PyRunResult::from_run).collect()).collect())
}

/// Eigenvalue verdicts of the two-step recursion at `q = λ h_t²`.
#[pyclass(name = "StabilityReport", frozen, get_all)]
struct PyStabilityReport {
    q: f64,
    eigenvalues: Vec<(f64, f64)>,
    max_abs_re: f64,
    spectral_radius: f64,
    eigen_stable: bool,
    strict: bool,
    relaxed: bool,
}

impl From<&stab::StabilityReport> for PyStabilityReport {
    fn from(r: &stab::StabilityReport) -> Self {
        PyStabilityReport {
            q: r.q,
            eigenvalues: r.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
            max_abs_re: r.max_abs_re,
            spectral_radius: r.spectral_radius,
            eigen_stable: r.eigen_stable,
            strict: r.strict,
            relaxed: r.relaxed,
        }
    }
}

#[pymethods]
impl PyStabilityReport {
    fn __repr__(&self) -> String {
        format!("StabilityReport(q={}, max_abs_re={:.6}, eigen_stable={})", self.q, self.max_abs_re, self.eigen_stable)
    }
}

#[pyfunction]
fn stability_report(q: f64) -> PyResult<PyStabilityReport> {
    Ok((&stab::stability_report(q).map_err(py_err)?).into())
}

/// Reports on the grid `q_min, q_min + step, …` and the contiguous unstable
/// runs `(first q, last q)`.
#[pyfunction]
#[pyo3(signature = (q_min=0.0, q_max=100.0, step=0.1))]
fn stability_sweep(q_min: f64, q_max: f64, step: f64) -> PyResult<(Vec<PyStabilityReport>, Vec<(f64, f64)>)> {
    let sweep = stab::stability_sweep(q_min, q_max, step).map_err(py_err)?;
    Ok((sweep.reports.iter().map(Into::into).collect(), sweep.unstable_runs))
}

/// `strict` excludes the band `[10, 12]`; both require `q ≤ 60`.
#[pyfunction]
#[pyo3(signature = (q, strict=true))]
fn classify(q: f64, strict: bool) -> bool {
    stab::classify(q, if strict { Criterion::StrictNoBand } else { Criterion::Relaxed })
}

/// Largest admissible `h_t / h_x` as `(strict, relaxed)`.
#[pyfunction]
fn cfl_bounds(c_i: f64) -> PyResult<(f64, f64)> {
    let b = stab::cfl_bounds(c_i).map_err(py_err)?;
    Ok((b.ratio_strict, b.ratio_relaxed))
}

/// `(nodal values, growth factor, saturated)` of the scalar recursion.
#[pyfunction]
#[pyo3(signature = (q, n_steps, u0=1.0))]
fn simulate_recursion(q: f64, n_steps: usize, u0: f64) -> PyResult<(Vec<f64>, f64, bool)> {
    let tr = stab::simulate_recursion(q, n_steps, u0).map_err(py_err)?;
    Ok((tr.values, tr.growth_factor, tr.saturated))
}

/// `c'' + βc' + λc = f`, `c(0) = α0`, `c'(0) = v0`. The forcing is `None`,
/// a list of at most four polynomial coefficients, or a callable of `t`.
#[pyclass(name = "ModalProblem", frozen)]
struct PyModalProblem {
    inner: ModalProblem,
}

#[pymethods]
impl PyModalProblem {
    #[new]
    #[pyo3(signature = (beta, lam, alpha0, v0, forcing=None))]
    fn new(beta: f64, lam: f64, alpha0: f64, v0: f64, forcing: Option<Bound<'_, PyAny>>) -> PyResult<Self> {
        let forcing = match forcing {
            None => Forcing::Zero,
            Some(f) if f.is_callable() => {
                let f = f.unbind();
                Forcing::general(move |t| Python::attach(|py| f.call1(py, (t,)).and_then(|r| r.extract::<f64>(py)).unwrap_or(f64::NAN)))
            }
            Some(f) => Forcing::Polynomial(f.extract()?),
        };
        Ok(PyModalProblem { inner: ModalProblem::new(beta, lam, alpha0, v0, forcing).map_err(py_err)? })
    }

    /// Exact `(c(t), c'(t))`.
    fn solve(&self, t: f64) -> (f64, f64) {
        solve_modal(&self.inner, t)
    }

    /// Quadratic Galerkin–Petrov values at the `2N + 1` nodes of `[0, T]`.
    fn discrete_solve(&self, end_time: f64, n_elements: usize) -> PyResult<Vec<f64>> {
        let partition = TimePartition::equidistant(end_time, n_elements).map_err(py_err)?;
        Ok(discrete_modal_solve(&self.inner, &partition).map_err(py_err)?.nodal)
    }

    /// `(errors, orders)` under `refinements` halvings starting from `n_start`.
    fn observed_orders(&self, end_time: f64, n_start: usize, refinements: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        observed_orders(&self.inner, end_time, n_start, refinements).map_err(py_err)
    }
}

#[pymodule(name = "wavefem")]
fn wavefem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyStabilityReport>()?;
    m.add_class::<PyModalProblem>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_case, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(cfl_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(stability_report, m)?)?;
    m.add_function(wrap_pyfunction!(stability_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(cfl_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_recursion, m)?)?;
    Ok(())
}

//! Python bindings: medium generation, the prepared solver, and the wave
//! packet transform, driven from numpy arrays.
//!
//! Usage from Python:
//!
//!     import helmprec
//!     c, stats = helmprec.gen_medium(seed=3, n=128)
//!     solver = helmprec.PreparedHelmholtz(c, omega=8 * math.pi)
//!     u, report = solver.solve_seeded(7)

use num_complex::Complex64;
use numpy::{IntoPyArray, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use helmprec_core::filter::FilterConfig;
use helmprec_core::grid::{make_grid, norm, CField};
use helmprec_core::helmholtz::HelmholtzOp;
use helmprec_core::lwpt::LwptConfig;
use helmprec_core::lwpt::{build_weights, DiagonalWeights, Lwpt};
use helmprec_core::medium::{sample_medium, Medium, MediumClassParams, DEFAULT_ALPHA};
use helmprec_core::solver::{execute_prepared, random_rhs, SolveReport};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn report_dict<'py>(py: Python<'py>, report: &SolveReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iterations", report.iterations)?;
    d.set_item("converged", report.converged)?;
    d.set_item("prepare_seconds", report.prepare_seconds)?;
    d.set_item("execute_seconds", report.execute_seconds)?;
    d.set_item("residual_history", report.residual_history.clone())?;
    Ok(d)
}

/// Draw a velocity field from the random smooth-medium family.
#[pyfunction]
#[pyo3(signature = (seed, n=128))]
fn gen_medium<'py>(
    py: Python<'py>,
    seed: u64,
    n: usize,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Bound<'py, PyDict>)> {
    let grid = make_grid(n, n, 1.0, 1.0).map_err(err)?;
    let medium = sample_medium(&MediumClassParams::new(seed), grid).map_err(err)?;
    let stats = PyDict::new(py);
    stats.set_item("c_min", medium.c_min)?;
    stats.set_item("c_max", medium.c_max)?;
    stats.set_item("c_mean", medium.c_mean)?;
    Ok((medium.c.into_pyarray(py), stats))
}

/// A medium prepared for repeated solves at one frequency: filter bank,
/// ray tables, kernels and weights are built once, then any number of
/// right-hand sides can be solved.
#[pyclass]
struct PreparedHelmholtz {
    medium: Medium,
    omega: f64,
    tol: f64,
    max_iter: usize,
    lwpt: Lwpt,
    weights: DiagonalWeights,
    prepare_seconds: f64,
}

#[pymethods]
impl PreparedHelmholtz {
    /// Build from an `n x n` velocity array on the unit square. `bands`
    /// defaults to the frequency-scaled rule; `alpha` is the constant
    /// damping level.
    #[new]
    #[pyo3(signature = (c, omega, alpha=DEFAULT_ALPHA, bands=None, tol=1e-5, max_iter=500))]
    fn new(
        c: PyReadonlyArray2<f64>,
        omega: f64,
        alpha: f64,
        bands: Option<usize>,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Self> {
        let c = c.as_array().to_owned();
        let (ny, nx) = c.dim();
        if nx != ny {
            return Err(PyValueError::new_err("velocity array must be square"));
        }
        let grid = make_grid(nx, ny, 1.0, 1.0).map_err(err)?;
        let alpha_field = ndarray::Array2::from_elem(grid.shape(), alpha);
        let medium = Medium::new(grid, c, alpha_field, 1.0).map_err(err)?;
        let lwpt_cfg = LwptConfig {
            filter: FilterConfig {
                n_bands: bands.unwrap_or_else(|| FilterConfig::auto_bands(omega, 1.0)),
                ..FilterConfig::default()
            },
            ..LwptConfig::default()
        };
        let t0 = std::time::Instant::now();
        let lwpt = Lwpt::prepare(&medium, omega, &lwpt_cfg).map_err(err)?;
        let weights = build_weights(&lwpt, &medium);
        Ok(PreparedHelmholtz {
            medium,
            omega,
            tol,
            max_iter,
            lwpt,
            weights,
            prepare_seconds: t0.elapsed().as_secs_f64(),
        })
    }

    /// Solve with a seeded complex-normal right-hand side; returns the
    /// solution field and a report dict.
    fn solve_seeded<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
    ) -> PyResult<(Bound<'py, PyArray2<Complex64>>, Bound<'py, PyDict>)> {
        let rhs = random_rhs(self.medium.grid, seed);
        let (u, mut report) = execute_prepared(
            &self.medium, self.omega, &self.lwpt, &self.weights,
            self.tol, self.max_iter, &rhs,
        )
        .map_err(err)?;
        report.prepare_seconds = self.prepare_seconds;
        Ok((u.into_pyarray(py), report_dict(py, &report)?))
    }

    /// Solve for a given complex right-hand side array.
    fn solve<'py>(
        &self,
        py: Python<'py>,
        rhs: PyReadonlyArray2<Complex64>,
    ) -> PyResult<(Bound<'py, PyArray2<Complex64>>, Bound<'py, PyDict>)> {
        let rhs: CField = rhs.as_array().to_owned();
        let (u, mut report) = execute_prepared(
            &self.medium, self.omega, &self.lwpt, &self.weights,
            self.tol, self.max_iter, &rhs,
        )
        .map_err(err)?;
        report.prepare_seconds = self.prepare_seconds;
        Ok((u.into_pyarray(py), report_dict(py, &report)?))
    }

    /// Apply the discrete Helmholtz operator (for residual checks).
    fn apply_operator<'py>(
        &self,
        py: Python<'py>,
        u: PyReadonlyArray2<Complex64>,
    ) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
        let u: CField = u.as_array().to_owned();
        let op = HelmholtzOp::new(&self.medium, self.omega);
        Ok(op.apply(&u).map_err(err)?.into_pyarray(py))
    }

    /// Relative defect of one frame analysis/synthesis round trip on a
    /// seeded random field: near machine precision for constant media,
    /// small for the smooth random family.
    fn frame_roundtrip_defect(&self, seed: u64) -> PyResult<f64> {
        let u = random_rhs(self.medium.grid, seed);
        let coeffs = self.lwpt.forward(&u).map_err(err)?;
        let back = self.lwpt.adjoint(&coeffs).map_err(err)?;
        Ok(norm(&(&back - &u)) / norm(&u))
    }

    /// Frame coefficient count of the prepared transform.
    fn coefficient_count(&self) -> usize {
        self.lwpt.layout.total
    }
}

#[pymodule]
fn helmprec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gen_medium, m)?)?;
    m.add_class::<PreparedHelmholtz>()?;
    m.add("DEFAULT_ALPHA", DEFAULT_ALPHA)?;
    Ok(())
}

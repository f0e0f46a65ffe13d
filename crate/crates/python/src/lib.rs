use bifactor::admm::Termination;
use bifactor::norms::{self, FactorKind};
use bifactor::{prox, DenseMatrix, Error, ObservationMask, SolverOptions, SolverReport};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

/// Builds the data matrix and observed set from nested lists; `nan` entries
/// are treated as missing.
fn matrix_and_mask(rows: &[Vec<f64>]) -> PyResult<(DenseMatrix, ObservationMask)> {
    let raw = DenseMatrix::from_rows(rows).map_err(to_py)?;
    let flags: Vec<bool> = raw.as_slice().iter().map(|v| !v.is_nan()).collect();
    let mask = ObservationMask::from_flags(raw.rows(), raw.cols(), &flags).map_err(to_py)?;
    Ok((raw.map(|v| if v.is_nan() { 0.0 } else { v }), mask))
}

fn dense(rows: &[Vec<f64>]) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(rows).map_err(to_py)
}

/// Result of a solver run. Matrices are returned as lists of rows.
#[pyclass(name = "Report", frozen)]
struct PyReport {
    inner: SolverReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn low_rank(&self) -> Vec<Vec<f64>> {
        self.inner.l.to_rows()
    }

    #[getter]
    fn sparse(&self) -> Vec<Vec<f64>> {
        self.inner.s.to_rows()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.u.to_rows()
    }

    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        self.inner.v.to_rows()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.termination == Termination::Converged
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    #[getter]
    fn stop_metric_trace(&self) -> Vec<f64> {
        self.inner.stop_metric_trace.clone()
    }

    /// Resolved solver settings: d, lambda, mu0, rho, mu_max, epsilon, max_iters.
    #[getter]
    fn options(&self) -> (usize, f64, f64, f64, f64, f64, usize) {
        let o = &self.inner.options;
        (
            o.d,
            o.lambda,
            o.mu0,
            o.rho,
            o.mu_max,
            o.epsilon,
            o.max_iters,
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(d={}, lambda={}, iterations={}, termination={})",
            self.inner.options.d,
            self.inner.options.lambda,
            self.inner.iterations,
            self.inner.termination.as_str()
        )
    }
}

type Solver = fn(&DenseMatrix, &ObservationMask, &SolverOptions) -> bifactor::Result<SolverReport>;

#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    solver: Solver,
    mut opts: SolverOptions,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    let (d, mask) = matrix_and_mask(&data)?;
    opts.d = match rank {
        Some(r) => r,
        None => {
            bifactor::estimate_rank(&d, &mask, None)
                .map_err(to_py)?
                .rank
        }
    };
    opts.lambda = lambda.or(opts.lambda);
    if let Some(e) = epsilon {
        opts.epsilon = e;
    }
    if let Some(n) = max_iters {
        opts.max_iters = n;
    }
    let inner = py.detach(|| solver(&d, &mask, &opts)).map_err(to_py)?;
    Ok(PyReport { inner })
}

/// Robust PCA with the double nuclear penalty on `L` and an l1/2 penalty on `S`.
#[pyfunction]
#[pyo3(signature = (data, rank=None, lambda_=None, epsilon=None, max_iters=None))]
fn solve_sl_half(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda_: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    run(
        py,
        bifactor::solve_sl_half,
        SolverOptions::rpca(1),
        data,
        rank,
        lambda_,
        epsilon,
        max_iters,
    )
}

/// Robust PCA with the Frobenius/nuclear penalty on `L` and an l2/3 penalty on `S`.
#[pyfunction]
#[pyo3(signature = (data, rank=None, lambda_=None, epsilon=None, max_iters=None))]
fn solve_sl_two_thirds(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda_: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    run(
        py,
        bifactor::solve_sl_two_thirds,
        SolverOptions::rpca(1),
        data,
        rank,
        lambda_,
        epsilon,
        max_iters,
    )
}

/// Nuclear norm plus l1 baseline.
#[pyfunction]
#[pyo3(signature = (data, rank=None, lambda_=None, epsilon=None, max_iters=None))]
fn solve_rpca_nuclear(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda_: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    run(
        py,
        bifactor::solve_rpca_nuclear,
        SolverOptions::rpca(1),
        data,
        rank,
        lambda_,
        epsilon,
        max_iters,
    )
}

/// Matrix completion with the double nuclear penalty; `nan` marks missing entries.
#[pyfunction]
#[pyo3(signature = (data, rank=None, lambda_=None, epsilon=None, max_iters=None))]
fn complete_dn(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda_: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    run(
        py,
        bifactor::complete_dn,
        SolverOptions::completion(1),
        data,
        rank,
        lambda_,
        epsilon,
        max_iters,
    )
}

/// Matrix completion with the Frobenius/nuclear penalty; `nan` marks missing entries.
#[pyfunction]
#[pyo3(signature = (data, rank=None, lambda_=None, epsilon=None, max_iters=None))]
fn complete_fn(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    rank: Option<usize>,
    lambda_: Option<f64>,
    epsilon: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<PyReport> {
    run(
        py,
        bifactor::complete_fn,
        SolverOptions::completion(1),
        data,
        rank,
        lambda_,
        epsilon,
        max_iters,
    )
}

#[pyfunction]
#[pyo3(signature = (data, k=None))]
fn estimate_rank(data: Vec<Vec<f64>>, k: Option<usize>) -> PyResult<usize> {
    let (d, mask) = matrix_and_mask(&data)?;
    Ok(bifactor::estimate_rank(&d, &mask, k).map_err(to_py)?.rank)
}

#[pyfunction]
fn half_threshold(a: f64, gamma: f64) -> f64 {
    prox::half_threshold(a, gamma)
}

#[pyfunction]
fn two_thirds_threshold(a: f64, gamma: f64) -> f64 {
    prox::two_thirds_threshold(a, gamma)
}

#[pyfunction]
fn soft_threshold(a: f64, tau: f64) -> f64 {
    prox::soft_threshold(a, tau)
}

#[pyfunction]
fn dn_penalty(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(norms::dn_penalty(&dense(&u)?, &dense(&v)?)
        .map_err(to_py)?
        .value())
}

#[pyfunction]
fn fn_penalty(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(norms::fn_penalty(&dense(&u)?, &dense(&v)?)
        .map_err(to_py)?
        .value())
}

#[pyfunction]
fn schatten_half(x: Vec<Vec<f64>>) -> PyResult<f64> {
    norms::schatten_half(&dense(&x)?).map_err(to_py)
}

#[pyfunction]
fn schatten_two_thirds(x: Vec<Vec<f64>>) -> PyResult<f64> {
    norms::schatten_two_thirds(&dense(&x)?).map_err(to_py)
}

/// Returns `(U, V)` with `X = U V^T` whose penalty `kind` ("dn" or "fn")
/// attains the matching Schatten quasi-norm.
#[pyfunction]
fn spectral_factorization(x: Vec<Vec<f64>>, d: usize, kind: &str) -> PyResult<(Rows, Rows)> {
    let kind = match kind {
        "dn" => FactorKind::DoubleNuclear,
        "fn" => FactorKind::FrobeniusNuclear,
        other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    };
    let (u, v) = norms::spectral_factorization(&dense(&x)?, d, kind).map_err(to_py)?;
    Ok((u.to_rows(), v.to_rows()))
}

#[pymodule]
#[pyo3(name = "bifactor")]
fn bifactor_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve_sl_half, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sl_two_thirds, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rpca_nuclear, m)?)?;
    m.add_function(wrap_pyfunction!(complete_dn, m)?)?;
    m.add_function(wrap_pyfunction!(complete_fn, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rank, m)?)?;
    m.add_function(wrap_pyfunction!(half_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(two_thirds_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(dn_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(fn_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(schatten_half, m)?)?;
    m.add_function(wrap_pyfunction!(schatten_two_thirds, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_factorization, m)?)?;
    Ok(())
}

use hwt_core::costs::{self, LayerSpec, ReplacementPolicy, Resnet20Variant};
use hwt_core::haar::{self, Variant};
use hwt_core::layer::{stripes_dataset, train_toy, ToyConfig};
use hwt_core::qsim::{self, Pauli, PauliChoice, RunMode};
use hwt_core::{Error, Matrix};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty matrix"));
    }
    Matrix::from_rows(&rows).map_err(to_py)
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    match name {
        "orthonormal" => Ok(Variant::Orthonormal),
        "integer" => Ok(Variant::IntegerAddSub),
        _ => Err(PyValueError::new_err(format!("unknown variant {name:?}"))),
    }
}

/// Transform plan for signals of length `n`.
#[pyclass(name = "HaarPlan", frozen)]
struct PyHaarPlan {
    inner: haar::HaarPlan,
}

#[pymethods]
impl PyHaarPlan {
    #[new]
    #[pyo3(signature = (n, levels=None, variant="orthonormal"))]
    fn new(n: usize, levels: Option<u32>, variant: &str) -> PyResult<Self> {
        let variant = parse_variant(variant)?;
        let levels = levels.unwrap_or(n.trailing_zeros());
        let inner = haar::HaarPlan::new(n, levels, variant).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn levels(&self) -> u32 {
        self.inner.levels()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        haar::dwt1d(&x, &self.inner).map_err(to_py)
    }

    fn inverse(&self, coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
        haar::idwt1d(&coeffs, &self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "HaarPlan(n={}, levels={}, variant={:?})",
            self.inner.n(),
            self.inner.levels(),
            self.inner.variant()
        )
    }
}

/// Orthonormal Haar matrix of size `2^k`.
#[pyfunction]
fn haar_matrix(k: u32) -> PyResult<Vec<Vec<f64>>> {
    Ok(haar::haar_matrix(k).map_err(to_py)?.to_rows())
}

#[pyfunction]
fn dwt1d(x: Vec<f64>) -> PyResult<Vec<f64>> {
    let plan = haar::HaarPlan::full(x.len()).map_err(to_py)?;
    haar::dwt1d(&x, &plan).map_err(to_py)
}

#[pyfunction]
fn idwt1d(coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
    let plan = haar::HaarPlan::full(coeffs.len()).map_err(to_py)?;
    haar::idwt1d(&coeffs, &plan).map_err(to_py)
}

fn square_plan(m: &Matrix) -> PyResult<haar::HaarPlan> {
    if !m.is_square() {
        return Err(PyValueError::new_err("image must be square"));
    }
    haar::HaarPlan::full(m.rows()).map_err(to_py)
}

#[pyfunction]
fn dwt2d(img: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix(img)?;
    let plan = square_plan(&m)?;
    Ok(haar::dwt2d(&m, &plan).map_err(to_py)?.to_rows())
}

#[pyfunction]
fn idwt2d(coeffs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix(coeffs)?;
    let plan = square_plan(&m)?;
    Ok(haar::idwt2d(&m, &plan).map_err(to_py)?.to_rows())
}

/// Runs a 4x4 patch through the gate-level circuit. `mode` is `"exact"` or
/// `"shots"`.
#[pyfunction]
#[pyo3(signature = (patch, mode="exact", shots=qsim::DEFAULT_SHOTS, seed=0))]
fn run_2d_haar_quantum(patch: Vec<Vec<f64>>, mode: &str, shots: u64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let mode = match mode {
        "exact" => RunMode::Exact,
        "shots" => RunMode::Shots { shots, seed },
        _ => return Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
    };
    let out = qsim::run_2d_haar_quantum(&matrix(patch)?, &mode).map_err(to_py)?;
    Ok(out.to_rows())
}

#[pyfunction]
fn mse(q: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> PyResult<f64> {
    qsim::mse(&matrix(q)?, &matrix(c)?).map_err(to_py)
}

#[pyfunction]
fn max_abs_error(ideal: Vec<Vec<f64>>, noisy: Vec<Vec<f64>>) -> PyResult<f64> {
    qsim::max_abs_error(&matrix(ideal)?, &matrix(noisy)?).map_err(to_py)
}

/// Mean and worst `ε_max` per error probability, as `(p, mean, max)` tuples.
#[pyfunction]
#[pyo3(signature = (patch, ps, trials=1000, seed=0, pauli="uniform", per_gate=false))]
fn noise_sweep(
    patch: Vec<Vec<f64>>,
    ps: Vec<f64>,
    trials: usize,
    seed: u64,
    pauli: &str,
    per_gate: bool,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let choice = match pauli {
        "uniform" => PauliChoice::Uniform,
        "x" => PauliChoice::Fixed(Pauli::X),
        "y" => PauliChoice::Fixed(Pauli::Y),
        "z" => PauliChoice::Fixed(Pauli::Z),
        _ => return Err(PyValueError::new_err(format!("unknown Pauli choice {pauli:?}"))),
    };
    let points = qsim::noise_sweep(&matrix(patch)?, &ps, trials, seed, choice, per_gate).map_err(to_py)?;
    Ok(points.into_iter().map(|p| (p.p, p.mean_eps_max, p.max_eps_max)).collect())
}

#[pyfunction]
#[pyo3(signature = (k, channels, n, c_out=None))]
fn conv_macs(k: u64, channels: u64, n: u64, c_out: Option<u64>) -> PyResult<u64> {
    let spec = LayerSpec::Conv { k, c_in: channels, c_out: c_out.unwrap_or(channels), n };
    costs::macs(&spec).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (paths, channels, n, c_out=None))]
fn perceptron_macs(paths: u64, channels: u64, n: u64, c_out: Option<u64>) -> PyResult<u64> {
    let spec = LayerSpec::HtPerceptron { paths, c_in: channels, c_out: c_out.unwrap_or(channels), n };
    costs::macs(&spec).map_err(to_py)
}

/// `variant` is `"baseline"`, `"hwt"` or `"ht"`.
#[pyfunction]
#[pyo3(signature = (variant="baseline", paths=3))]
fn resnet20_params(variant: &str, paths: u64) -> PyResult<u64> {
    let variant = match variant {
        "baseline" => Resnet20Variant::Baseline,
        "hwt" => Resnet20Variant::Hwt(paths),
        "ht" => Resnet20Variant::Ht(paths),
        _ => return Err(PyValueError::new_err(format!("unknown variant {variant:?}"))),
    };
    costs::resnet20_params(variant, &ReplacementPolicy::default()).map_err(to_py)
}

/// Trains on the stripes task; returns `(epoch, loss, accuracy)` with the
/// pre-training evaluation as epoch 0.
#[pyfunction]
#[pyo3(signature = (epochs=200, lr=0.05, seed=0, samples=200))]
fn train_demo(py: Python<'_>, epochs: usize, lr: f64, seed: u64, samples: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let report = py
        .detach(|| {
            let data = stripes_dataset(samples, 8, seed);
            train_toy(&data, &ToyConfig { epochs, lr, seed, ..ToyConfig::default() })
        })
        .map_err(to_py)?;
    Ok(std::iter::once(report.initial)
        .chain(report.trace)
        .map(|s| (s.epoch, s.loss, s.accuracy))
        .collect())
}

#[pymodule]
fn hwt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHaarPlan>()?;
    m.add_function(wrap_pyfunction!(haar_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dwt1d, m)?)?;
    m.add_function(wrap_pyfunction!(idwt1d, m)?)?;
    m.add_function(wrap_pyfunction!(dwt2d, m)?)?;
    m.add_function(wrap_pyfunction!(idwt2d, m)?)?;
    m.add_function(wrap_pyfunction!(run_2d_haar_quantum, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(max_abs_error, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(conv_macs, m)?)?;
    m.add_function(wrap_pyfunction!(perceptron_macs, m)?)?;
    m.add_function(wrap_pyfunction!(resnet20_params, m)?)?;
    m.add_function(wrap_pyfunction!(train_demo, m)?)?;
    m.add("DEFAULT_SHOTS", qsim::DEFAULT_SHOTS)?;
    Ok(())
}

//! Python bindings for `qspsim`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qspsim::analytics::{self, MulticellInputs, SingleCellInputs};
use qspsim::detection::{estimate_rate as mc_rate, optimize_alpha_mc, AlphaGrid, RateEstimate};
use qspsim::estimation::{mse_bound_multicell as bound, McSetup, Scheme, TrialCounts};
use qspsim::geometry::{self, NetworkMoments};
use qspsim::harness::{self, parse_config, Scale};
use qspsim::rng::{SeedTree, GEOMETRY};

fn py_err(e: qspsim::Error) -> PyErr {
    match e {
        qspsim::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Scenario of the simulated network.
#[pyclass(name = "NetworkConfig", from_py_object)]
#[derive(Clone)]
struct PyNetworkConfig {
    inner: geometry::NetworkConfig,
}

#[pymethods]
impl PyNetworkConfig {
    #[new]
    #[pyo3(signature = (cells=7, users_per_cell=12, antennas=100, coherence=200, snr_db=-10.0, alpha=0.5))]
    fn new(cells: usize, users_per_cell: usize, antennas: usize, coherence: usize, snr_db: f64, alpha: f64) -> PyResult<Self> {
        let inner =
            geometry::NetworkConfig { cells, users_per_cell, antennas, coherence, alpha, ..Default::default() }.with_snr_db(snr_db);
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells
    }

    #[getter]
    fn users_per_cell(&self) -> usize {
        self.inner.users_per_cell
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas
    }

    #[getter]
    fn coherence(&self) -> usize {
        self.inner.coherence
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn total_users(&self) -> usize {
        self.inner.total_users()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "NetworkConfig(cells={}, users_per_cell={}, antennas={}, coherence={}, rho={}, alpha={})",
            c.cells, c.users_per_cell, c.antennas, c.coherence, c.rho, c.alpha
        )
    }
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(py_err)
}

fn rate_dict<'py>(py: Python<'py>, r: &RateEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rate_bits", r.rate_bits)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("alpha", r.alpha_used)?;
    d.set_item("noise_var", r.noise_var)?;
    d.set_item("n_trials", r.n_trials)?;
    d.set_item("scheme", r.scheme.as_str())?;
    d.set_item("pilot_removal", r.pilot_removal)?;
    Ok(d)
}

/// Closed-form SINR of one cell without inter-cell interference.
#[pyfunction]
#[pyo3(signature = (alpha, rho, t, m, k, quantized=true))]
fn sinr_single(alpha: f64, rho: f64, t: f64, m: f64, k: f64, quantized: bool) -> PyResult<f64> {
    let p = SingleCellInputs { alpha, rho, t, m, k };
    if quantized { analytics::sinr_qsp_single(&p) } else { analytics::sinr_uqsp_single(&p) }.map_err(py_err)
}

/// Closed-form SINR of the multicell network with moments `zeta`.
#[pyfunction]
#[pyo3(signature = (alpha, rho, t, m, zeta, quantized=true))]
fn sinr_multicell(alpha: f64, rho: f64, t: f64, m: f64, zeta: (f64, f64, f64), quantized: bool) -> PyResult<f64> {
    let p = MulticellInputs { alpha, rho, t, m, moments: NetworkMoments { zeta1: zeta.0, zeta2: zeta.1, zeta3: zeta.2 } };
    if quantized { analytics::sinr_qsp_multicell(&p) } else { analytics::sinr_uqsp_multicell(&p) }.map_err(py_err)
}

/// Optimal pilot power fraction and its SINR; `zeta=None` selects the
/// single-cell model with `k` users.
#[pyfunction]
#[pyo3(signature = (rho, t, m, k=12.0, zeta=None, quantized=true))]
fn optimal_alpha(rho: f64, t: f64, m: f64, k: f64, zeta: Option<(f64, f64, f64)>, quantized: bool) -> PyResult<(f64, f64)> {
    let o = match zeta {
        None => analytics::optimal_alpha_single(&SingleCellInputs { alpha: 0.5, rho, t, m, k }, quantized),
        Some((zeta1, zeta2, zeta3)) => analytics::optimal_alpha_multicell(
            &MulticellInputs { alpha: 0.5, rho, t, m, moments: NetworkMoments { zeta1, zeta2, zeta3 } },
            quantized,
        ),
    }
    .map_err(py_err)?;
    Ok((o.alpha, o.sinr))
}

/// `log2(1 + sinr)`.
#[pyfunction]
fn rate_bits(sinr: f64) -> f64 {
    analytics::rate_bits(sinr)
}

/// Upper bound on the quantized channel-estimation MSE.
#[pyfunction]
fn mse_bound(alpha: f64, rho: f64, t: usize, zeta1: f64) -> f64 {
    bound(alpha, rho, t, zeta1)
}

/// Monte Carlo network moments `(zeta1, zeta2, zeta3)`.
#[pyfunction]
fn zeta_stats(config: &PyNetworkConfig, n_drops: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let s = geometry::estimate_zeta_stats(&config.inner, n_drops, SeedTree::new(seed).child(GEOMETRY)).map_err(py_err)?;
    Ok((s.zeta1, s.zeta2, s.zeta3))
}

/// Monte Carlo achievable rate; optionally maximized over the power fraction.
#[pyfunction]
#[pyo3(signature = (config, scheme_name, seed, pilot_removal=false, optimize=false, n_outer=20, n_inner=4))]
#[allow(clippy::too_many_arguments)]
fn estimate_rate<'py>(
    py: Python<'py>,
    config: &PyNetworkConfig,
    scheme_name: &str,
    seed: u64,
    pilot_removal: bool,
    optimize: bool,
    n_outer: usize,
    n_inner: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = scheme(scheme_name)?;
    let setup = McSetup::new(TrialCounts { n_outer, n_inner }, seed);
    let cfg = config.inner.clone();
    let rate = py
        .detach(|| {
            if optimize {
                optimize_alpha_mc(&cfg, scheme, pilot_removal, &AlphaGrid::default(), &setup).map(|f| f.rate)
            } else {
                mc_rate(&cfg, scheme, pilot_removal, &setup)
            }
        })
        .map_err(py_err)?;
    rate_dict(py, &rate)
}

/// Runs a built-in experiment and returns its CSV.
#[pyfunction]
#[pyo3(signature = (name, seed=None, publication=false))]
fn run_preset(py: Python<'_>, name: &str, seed: Option<u64>, publication: bool) -> PyResult<String> {
    let mut spec = harness::preset(name, if publication { Scale::Publication } else { Scale::Desk }).map_err(py_err)?;
    if seed.is_some() {
        spec.seed = seed;
    }
    let table = py.detach(|| harness::run_experiment(&spec)).map_err(py_err)?;
    Ok(table.to_csv_string(Some(&harness::version_comment(&spec))))
}

/// Runs an experiment described by TOML text and returns its CSV.
#[pyfunction]
fn run_config(py: Python<'_>, text: &str) -> PyResult<String> {
    let spec = parse_config(text).map_err(py_err)?;
    let table = py.detach(|| harness::run_experiment(&spec)).map_err(py_err)?;
    Ok(table.to_csv_string(Some(&harness::version_comment(&spec))))
}

#[pymodule]
pub fn qspsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetworkConfig>()?;
    m.add_function(wrap_pyfunction!(sinr_single, m)?)?;
    m.add_function(wrap_pyfunction!(sinr_multicell, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(rate_bits, m)?)?;
    m.add_function(wrap_pyfunction!(mse_bound, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_stats, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings. Matrices cross the boundary as lists of rows and
//! vectors as lists of floats; wrap them with `numpy.asarray` as needed.

use lattice_concordance::bayes::{self, ChainConfig, GmcarPosterior, PairedData, PriorSpec};
use lattice_concordance::concordance::{self, LinInputs};
use lattice_concordance::gmcar::{self, GmcarParams, Mean};
use lattice_concordance::lattice::{self, SpatialStructure};
use lattice_concordance::survey::{self, SaeInputs, SurveySample};
use lattice_concordance::Error;
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

/// An undirected lattice of areal units.
#[pyclass(name = "Lattice", module = "latcon")]
struct PyLattice {
    inner: lattice::Lattice,
}

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (n, edges, ids=None))]
    fn new(n: usize, edges: Vec<(usize, usize)>, ids: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match ids {
            Some(ids) if ids.len() != n => {
                return Err(PyValueError::new_err(format!("{} ids for {n} units", ids.len())))
            }
            Some(ids) => lattice::Lattice::with_ids(ids, edges),
            None => lattice::Lattice::new(n, edges),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Rook-adjacency grid in row-major order.
    #[staticmethod]
    fn grid(rows: usize, cols: usize) -> PyResult<Self> {
        Ok(Self {
            inner: lattice::grid_lattice(rows, cols).map_err(to_py)?,
        })
    }

    /// Reads an `ID1,ID2` edge list.
    #[staticmethod]
    #[pyo3(signature = (path, header=false))]
    fn from_file(path: std::path::PathBuf, header: bool) -> PyResult<Self> {
        Ok(Self {
            inner: lattice::load_adjacency(path, header).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    /// 0/1 matrix of units at shortest-path distance exactly `order`.
    fn contiguity(&self, order: usize) -> PyResult<Vec<Vec<f64>>> {
        let w1 = lattice::build_contiguity(&self.inner);
        let w = lattice::higher_order_contiguity(&w1, order).map_err(to_py)?;
        Ok(rows(w.matrix()))
    }

    fn __repr__(&self) -> String {
        format!("Lattice(n={}, edges={})", self.inner.n(), self.inner.n_edges())
    }
}

/// A lattice with its contiguity matrices up to `max_order`.
#[pyclass(name = "SpatialStructure", module = "latcon")]
struct PyStructure {
    inner: SpatialStructure,
}

#[pymethods]
impl PyStructure {
    #[new]
    #[pyo3(signature = (lattice, max_order=1))]
    fn new(lattice: PyRef<'_, PyLattice>, max_order: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SpatialStructure::new(lattice.inner.clone(), max_order).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    /// `log det(D_w − ρ W)`, or `None` outside the valid range.
    fn log_det_car_kernel(&self, rho: f64) -> Option<f64> {
        self.inner.log_det_car_kernel(rho)
    }

    fn __repr__(&self) -> String {
        format!("SpatialStructure(n={}, max_order={})", self.inner.n(), self.inner.max_order())
    }
}

/// GMCAR parameters with constant means. Noise terms are precisions.
#[pyclass(name = "GmcarParams", module = "latcon")]
struct PyParams {
    inner: GmcarParams,
}

fn constant(m: &Mean) -> f64 {
    match m {
        Mean::Constant(v) => *v,
        Mean::Vector(v) => v.mean(),
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (rho1, rho2, eta, tau1, tau2, mu1=0.0, mu2=0.0, noise_prec1=None, noise_prec2=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        rho1: f64,
        rho2: f64,
        eta: Vec<f64>,
        tau1: f64,
        tau2: f64,
        mu1: f64,
        mu2: f64,
        noise_prec1: Option<f64>,
        noise_prec2: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = GmcarParams::new(rho1, rho2, eta, tau1, tau2, mu1, mu2);
        inner.noise_prec1 = noise_prec1;
        inner.noise_prec2 = noise_prec2;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn rho1(&self) -> f64 {
        self.inner.rho1
    }
    #[getter]
    fn rho2(&self) -> f64 {
        self.inner.rho2
    }
    #[getter]
    fn eta(&self) -> Vec<f64> {
        self.inner.eta.clone()
    }
    #[getter]
    fn tau1(&self) -> f64 {
        self.inner.tau1
    }
    #[getter]
    fn tau2(&self) -> f64 {
        self.inner.tau2
    }
    #[getter]
    fn mu1(&self) -> f64 {
        constant(&self.inner.mu1)
    }
    #[getter]
    fn mu2(&self) -> f64 {
        constant(&self.inner.mu2)
    }
    #[getter]
    fn noise_prec1(&self) -> Option<f64> {
        self.inner.noise_prec1
    }
    #[getter]
    fn noise_prec2(&self) -> Option<f64> {
        self.inner.noise_prec2
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// `Σ11`, `Σ12` and `Σ22` of the latent field, keyed by name.
#[pyfunction]
fn covariance_blocks<'py>(
    py: Python<'py>,
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = gmcar::covariance_blocks(&params.inner, &structure.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("sigma11", rows(&b.sigma11))?;
    d.set_item("sigma12", rows(&b.sigma12))?;
    d.set_item("sigma22", rows(&b.sigma22))?;
    d.set_item("linking", rows(&b.linking))?;
    Ok(d)
}

/// Covariance of the observed `(X1, X2)`, noise included.
#[pyfunction]
fn joint_covariance(
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
) -> PyResult<Vec<Vec<f64>>> {
    let b = gmcar::covariance_blocks(&params.inner, &structure.inner).map_err(to_py)?;
    Ok(rows(&gmcar::joint_covariance(&b, &params.inner)))
}

#[pyfunction]
fn log_density(
    x1: Vec<f64>,
    x2: Vec<f64>,
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
) -> PyResult<f64> {
    gmcar::log_density(
        &DVector::from_vec(x1),
        &DVector::from_vec(x2),
        &params.inner,
        &structure.inner,
    )
    .map_err(to_py)
}

/// One draw of `(X1, X2)`.
#[pyfunction]
fn sample(
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = gmcar::sample(&params.inner, &structure.inner, &mut rng).map_err(to_py)?;
    Ok((a.as_slice().to_vec(), b.as_slice().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (params, structure, include_noise=false))]
fn spatial_concordance(
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
    include_noise: bool,
) -> PyResult<f64> {
    concordance::spatial_concordance_with(&params.inner, &structure.inner, include_noise)
        .map_err(to_py)
}

/// Monte Carlo estimate of the coefficient; returns `(value, std_error)`.
#[pyfunction]
#[pyo3(signature = (params, structure, n_draws=100_000, seed=0))]
fn mc_concordance(
    params: PyRef<'_, PyParams>,
    structure: PyRef<'_, PyStructure>,
    n_draws: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = concordance::mc_concordance_oracle(&params.inner, &structure.inner, n_draws, &mut rng)
        .map_err(to_py)?;
    Ok((e.value, e.std_error))
}

/// Lin's coefficient with its Pearson and bias-correction factors.
#[pyfunction]
fn lin_concordance<'py>(
    py: Python<'py>,
    mu1: f64,
    mu2: f64,
    var1: f64,
    var2: f64,
    cov12: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let out = concordance::lin_concordance(&LinInputs {
        mu1,
        mu2,
        var1,
        var2,
        cov12,
    })
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("rho_c", out.rho_c)?;
    d.set_item("rho", out.rho)?;
    d.set_item("c", out.c)?;
    d.set_item("v", out.v)?;
    d.set_item("u", out.u)?;
    Ok(d)
}

/// Weighted multivariate concordance; `weights` defaults to all ones.
#[pyfunction]
#[pyo3(signature = (mu1, mu2, sigma11, sigma12, sigma22, weights=None))]
fn multivariate_concordance(
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    sigma11: Vec<Vec<f64>>,
    sigma12: Vec<Vec<f64>>,
    sigma22: Vec<Vec<f64>>,
    weights: Option<Vec<Vec<f64>>>,
) -> PyResult<f64> {
    let w = match weights {
        Some(w) => concordance::ConcordanceWeights::new(matrix(&w)?).map_err(to_py)?,
        None => concordance::ConcordanceWeights::ones(mu1.len()),
    };
    concordance::multivariate_concordance(
        &DVector::from_vec(mu1),
        &DVector::from_vec(mu2),
        &matrix(&sigma11)?,
        &matrix(&sigma12)?,
        &matrix(&sigma22)?,
        &w,
    )
    .map_err(to_py)
}

/// Posterior draws of one fit.
#[pyclass(name = "Fit", module = "latcon")]
struct PyFit {
    #[pyo3(get)]
    names: Vec<String>,
    #[pyo3(get)]
    draws: Vec<Vec<f64>>,
    #[pyo3(get)]
    rho_sc: Vec<f64>,
    #[pyo3(get)]
    rho_sc_with_noise: Option<Vec<f64>>,
    #[pyo3(get)]
    log_posterior: Vec<f64>,
    #[pyo3(get)]
    acceptance: Vec<f64>,
    #[pyo3(get)]
    dic: f64,
    #[pyo3(get)]
    p_d: f64,
}

#[pymethods]
impl PyFit {
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| PyValueError::new_err(format!("no parameter {name:?}")))?;
        Ok(self.draws.iter().map(|r| r[j]).collect())
    }

    fn __len__(&self) -> usize {
        self.draws.len()
    }

    fn __repr__(&self) -> String {
        format!("Fit(draws={}, dic={:.3})", self.draws.len(), self.dic)
    }
}

/// Runs the MCMC sampler for a GMCAR model of the given linking order.
#[pyfunction]
#[pyo3(signature = (
    structure, x1, x2, order=1, noise=true, mu_prior_mean=0.0,
    iterations=30_000, burn_in=15_000, thin=1, seed=0, adapt=true,
    include_noise_in_coefficient=false,
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    structure: PyRef<'_, PyStructure>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    order: usize,
    noise: bool,
    mu_prior_mean: f64,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
    adapt: bool,
    include_noise_in_coefficient: bool,
) -> PyResult<PyFit> {
    let s = &structure.inner;
    let data = PairedData::new(DVector::from_vec(x1), DVector::from_vec(x2)).map_err(to_py)?;
    let config = ChainConfig {
        iterations,
        burn_in,
        thin,
        seed,
        adapt,
        include_noise_in_coefficient,
        ..ChainConfig::default()
    };
    py.detach(|| {
        let post = GmcarPosterior::new(s, &data, order, noise, PriorSpec::with_mu_mean(mu_prior_mean))?;
        let draws = bayes::run_chain(&post, &config)?;
        let d = bayes::dic(&draws, &post)?;
        Ok(PyFit {
            names: draws.names,
            draws: draws.rows,
            rho_sc: draws.rho_sc,
            rho_sc_with_noise: draws.rho_sc_with_noise,
            log_posterior: draws.log_posterior,
            acceptance: draws.acceptance,
            dic: d.dic,
            p_d: d.p_d,
        })
    })
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (samples, prob=0.95))]
fn hpd_interval(samples: Vec<f64>, prob: f64) -> PyResult<(f64, f64)> {
    bayes::hpd_interval(&samples, prob).map_err(to_py)
}

fn survey_sample(y: Vec<f64>, pi: Vec<f64>) -> PyResult<SurveySample> {
    SurveySample::new((0..y.len()).collect(), y, pi).map_err(to_py)
}

#[pyfunction]
fn ht_total(y: Vec<f64>, pi: Vec<f64>) -> PyResult<f64> {
    Ok(survey::ht_total(&survey_sample(y, pi)?))
}

#[pyfunction]
fn ht_mean(y: Vec<f64>, pi: Vec<f64>, population_size: usize) -> PyResult<f64> {
    survey::ht_mean(&survey_sample(y, pi)?, population_size).map_err(to_py)
}

/// Returns `(lambda, r_sae)`.
#[pyfunction]
fn sae_composite(r_dir: f64, var_dir: f64, r_syn: f64, var_syn: f64) -> PyResult<(f64, f64)> {
    let e = survey::sae_composite(&SaeInputs {
        r_dir,
        var_dir,
        r_syn,
        var_syn,
    })
    .map_err(to_py)?;
    Ok((e.lambda, e.r_sae))
}

#[pyfunction]
fn fit_beta(design: Vec<Vec<f64>>, responses: Vec<f64>) -> PyResult<Vec<f64>> {
    let beta = survey::fit_beta(&matrix(&design)?, &DVector::from_vec(responses)).map_err(to_py)?;
    Ok(beta.as_slice().to_vec())
}

#[pymodule]
pub fn latcon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyStructure>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(covariance_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(joint_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(log_density, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_concordance, m)?)?;
    m.add_function(wrap_pyfunction!(mc_concordance, m)?)?;
    m.add_function(wrap_pyfunction!(lin_concordance, m)?)?;
    m.add_function(wrap_pyfunction!(multivariate_concordance, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(hpd_interval, m)?)?;
    m.add_function(wrap_pyfunction!(ht_total, m)?)?;
    m.add_function(wrap_pyfunction!(ht_mean, m)?)?;
    m.add_function(wrap_pyfunction!(sae_composite, m)?)?;
    m.add_function(wrap_pyfunction!(fit_beta, m)?)?;
    Ok(())
}

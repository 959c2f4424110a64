//! Agreement coefficients: Lin's `ρ_c`, the weighted multivariate `ϱ_c`, and
//! the spatial coefficient `ϱ_s,c` evaluated on GMCAR covariance blocks with
//! weight matrix `J_n = 1 1ᵀ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gmcar::{covariance_blocks, CovarianceBlocks, GmcarParams, GmcarSampler};
use crate::lattice::SpatialStructure;

/// Moments of a bivariate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinInputs {
    pub mu1: f64,
    pub mu2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov12: f64,
}

/// `ρ_c = ρ · C` together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinConcordance {
    pub rho_c: f64,
    /// Pearson correlation.
    pub rho: f64,
    /// Bias correction factor, in (0, 1].
    pub c: f64,
    /// Scale shift `σ_1 / σ_2`.
    pub v: f64,
    /// Location shift `(μ_1 − μ_2) / √(σ_1 σ_2)`.
    pub u: f64,
}

pub fn lin_concordance(inputs: &LinInputs) -> Result<LinConcordance> {
    let LinInputs {
        mu1,
        mu2,
        var1,
        var2,
        cov12,
    } = *inputs;
    if !(var1 > 0.0 && var2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variances must be positive, got {var1} and {var2}"
        )));
    }
    let (sd1, sd2) = (var1.sqrt(), var2.sqrt());
    if cov12.abs() > sd1 * sd2 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "covariance {cov12} exceeds the Cauchy-Schwarz bound {}",
            sd1 * sd2
        )));
    }
    let rho = cov12 / (sd1 * sd2);
    let v = sd1 / sd2;
    let u = (mu1 - mu2) / (sd1 * sd2).sqrt();
    let c = 2.0 / (v + 1.0 / v + u * u);
    let rho_c = 2.0 * cov12 / (var1 + var2 + (mu1 - mu2).powi(2));
    Ok(LinConcordance { rho_c, rho, c, v, u })
}

/// Symmetric non-negative definite weight matrix `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceWeights {
    d: DMatrix<f64>,
}

impl ConcordanceWeights {
    pub fn new(d: DMatrix<f64>) -> Result<Self> {
        if !d.is_square() {
            return Err(Error::InvalidArgument("weight matrix must be square".into()));
        }
        if !d.relative_eq(&d.transpose(), 1e-12, 1e-12) {
            return Err(Error::InvalidArgument("weight matrix must be symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(d.clone()).eigenvalues.min();
        if min_eig < -1e-10 {
            return Err(Error::InvalidArgument(format!(
                "weight matrix is not non-negative definite (eigenvalue {min_eig})"
            )));
        }
        Ok(Self { d })
    }

    /// `J_n = 1 1ᵀ`.
    pub fn ones(n: usize) -> Self {
        Self {
            d: DMatrix::from_element(n, n, 1.0),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            d: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }
}

/// `Tr(D M)` without forming the product.
fn trace_of_product(d: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    d.component_mul(&m.transpose()).sum()
}

/// Weighted multivariate concordance
/// `Tr[DΣ12 + DΣ12ᵀ] / (Tr[DΣ11 + DΣ22] + (μ1−μ2)ᵀD(μ1−μ2))`.
pub fn multivariate_concordance(
    mu1: &DVector<f64>,
    mu2: &DVector<f64>,
    sigma11: &DMatrix<f64>,
    sigma12: &DMatrix<f64>,
    sigma22: &DMatrix<f64>,
    weights: &ConcordanceWeights,
) -> Result<f64> {
    let n = weights.d.nrows();
    let shapes_ok = mu1.len() == n
        && mu2.len() == n
        && sigma11.shape() == (n, n)
        && sigma12.shape() == (n, n)
        && sigma22.shape() == (n, n);
    if !shapes_ok {
        return Err(Error::InvalidArgument(format!(
            "dimensions do not agree with the {n}x{n} weight matrix"
        )));
    }
    let d = &weights.d;
    let numerator = trace_of_product(d, sigma12) + trace_of_product(d, &sigma12.transpose());
    let delta = mu1 - mu2;
    let bias = (delta.transpose() * d * &delta)[0];
    let denominator = trace_of_product(d, sigma11) + trace_of_product(d, sigma22) + bias;
    if denominator == 0.0 {
        return Err(Error::Degenerate(
            "concordance denominator is zero".into(),
        ));
    }
    Ok(numerator / denominator)
}

/// Concordance with `D = J_n`; `Tr(J_n M)` is the grand sum of `M`.
pub fn spatial_concordance_from_blocks(
    blocks: &CovarianceBlocks,
    mu1: &DVector<f64>,
    mu2: &DVector<f64>,
    noise_variances: Option<(f64, f64)>,
) -> Result<f64> {
    let n = blocks.n() as f64;
    let numerator = 2.0 * blocks.sigma12.sum();
    let diff = (mu1 - mu2).sum();
    let mut denominator = blocks.sigma11.sum() + blocks.sigma22.sum() + diff * diff;
    if let Some((v1, v2)) = noise_variances {
        denominator += n * (v1 + v2);
    }
    if denominator == 0.0 {
        return Err(Error::Degenerate(
            "concordance denominator is zero".into(),
        ));
    }
    Ok(numerator / denominator)
}

/// `ϱ_s,c` on the latent GMCAR blocks; measurement noise is ignored.
pub fn spatial_concordance(params: &GmcarParams, structure: &SpatialStructure) -> Result<f64> {
    spatial_concordance_with(params, structure, false)
}

/// As [`spatial_concordance`], optionally adding the noise variances to the
/// diagonal blocks.
pub fn spatial_concordance_with(
    params: &GmcarParams,
    structure: &SpatialStructure,
    include_noise: bool,
) -> Result<f64> {
    let blocks = covariance_blocks(params, structure)?;
    let n = structure.n();
    let noise = if include_noise {
        Some((
            params.noise_prec1.map_or(0.0, f64::recip),
            params.noise_prec2.map_or(0.0, f64::recip),
        ))
    } else {
        None
    };
    spatial_concordance_from_blocks(
        &blocks,
        &params.mu1.to_vector(n)?,
        &params.mu2.to_vector(n)?,
        noise,
    )
}

/// `ϱ_s,c` from grand sums alone, using the spectral form of the CAR inverses.
///
/// Agrees with [`spatial_concordance`] but costs O(n²·p) instead of O(n³),
/// which matters when evaluating the coefficient at every posterior draw.
pub fn spatial_concordance_fast(
    params: &GmcarParams,
    structure: &SpatialStructure,
    include_noise: bool,
) -> Result<f64> {
    params.validate()?;
    let n = structure.n();
    if params.order() > structure.max_order() {
        return Err(Error::InvalidArgument(format!(
            "linking order {} exceeds structure order {}",
            params.order(),
            structure.max_order()
        )));
    }
    let ones = DVector::from_element(n, 1.0);
    // a = Aᵀ1 = η_0 1 + Σ η_j W_j 1 (W_j symmetric)
    let mut a = &ones * params.eta[0];
    for (eta_j, w) in params.eta[1..].iter().zip(structure.contiguity()) {
        a.gemv(*eta_j, w.matrix(), &ones, 1.0);
    }
    let one_spec = structure.spectral_coordinates(&ones);
    let a_spec = structure.spectral_coordinates(&a);
    let (rho1, tau1, rho2, tau2) = (params.rho1, params.tau1, params.rho2, params.tau2);
    let s12 = structure.car_inverse_form(rho2, tau2, &a_spec, &one_spec);
    let s22 = structure.car_inverse_form(rho2, tau2, &one_spec, &one_spec);
    let s11 = structure.car_inverse_form(rho1, tau1, &one_spec, &one_spec)
        + structure.car_inverse_form(rho2, tau2, &a_spec, &a_spec);
    let diff = (params.mu1.to_vector(n)? - params.mu2.to_vector(n)?).sum();
    let mut denominator = s11 + s22 + diff * diff;
    if include_noise {
        let nf = n as f64;
        denominator += nf * params.noise_prec1.map_or(0.0, f64::recip);
        denominator += nf * params.noise_prec2.map_or(0.0, f64::recip);
    }
    if denominator == 0.0 {
        return Err(Error::Degenerate(
            "concordance denominator is zero".into(),
        ));
    }
    Ok(2.0 * s12 / denominator)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Estimates `ϱ_s,c` as `1 − E[(X1−X2)ᵀJ(X1−X2)] / E[... | Σ12 = 0]` by
/// simulation, independently of the closed form.
///
/// The numerator uses draws from the GMCAR model; the denominator uses an
/// independence coupling: `X1` taken from one model draw and `X2` from a
/// second, independent draw, which keeps both marginals and sets `Σ12 = 0`.
pub fn mc_concordance_oracle<R: Rng + ?Sized>(
    params: &GmcarParams,
    structure: &SpatialStructure,
    n_draws: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if n_draws < 1000 {
        return Err(Error::InvalidArgument(format!(
            "at least 1000 draws are required, got {n_draws}"
        )));
    }
    let pure = params.without_noise();
    let sampler = GmcarSampler::new(&pure, structure)?;
    let mut joint = Welford::default();
    let mut coupled = Welford::default();
    for _ in 0..n_draws {
        let (x1, x2) = sampler.draw(rng);
        let s = (x1 - x2).sum();
        joint.push(s * s);
        let (x1a, _) = sampler.draw(rng);
        let (_, x2b) = sampler.draw(rng);
        let s = (x1a - x2b).sum();
        coupled.push(s * s);
    }
    let (a, b) = (joint.mean, coupled.mean);
    let m = n_draws as f64;
    let var_a = joint.variance() / m;
    let var_b = coupled.variance() / m;
    let ratio = a / b;
    let std_error = (var_a / (b * b) + ratio * ratio * var_b / (b * b)).sqrt();
    Ok(McEstimate {
        value: 1.0 - ratio,
        std_error,
    })
}

#[derive(Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.count - 1.0)
    }
}

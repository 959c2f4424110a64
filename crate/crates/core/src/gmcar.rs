//! The bivariate GMCAR process.
//!
//! `X_2 ~ N(μ_2, [τ_2(D_w − ρ_2 W_1)]⁻¹)` and
//! `X_1 | X_2 ~ N(μ_1 + A(X_2 − μ_2), [τ_1(D_w − ρ_1 W_1)]⁻¹)` with linking
//! matrix `A = η_0 I + Σ_j η_j W_j`. Optional white measurement noise with
//! precisions `ν_1, ν_2` is added on top of the latent field and always
//! marginalised analytically.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{ContiguityMatrix, SpatialStructure};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Univariate CAR: precision `τ(D_w − ρ W_1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarSpec {
    pub rho: f64,
    pub tau: f64,
}

impl CarSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (-1, 1), got {}",
                self.rho
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

pub fn car_precision(spec: &CarSpec, structure: &SpatialStructure) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let q = structure.car_kernel(spec.rho) * spec.tau;
    debug_assert!(q.relative_eq(&q.transpose(), 1e-12, 1e-12));
    if Cholesky::new(q.clone()).is_none() {
        return Err(Error::NotPositiveDefinite(format!(
            "CAR precision at rho = {}",
            spec.rho
        )));
    }
    Ok(q)
}

/// A mean vector, or a constant broadcast over all units.
#[derive(Debug, Clone, PartialEq)]
pub enum Mean {
    Constant(f64),
    Vector(DVector<f64>),
}

impl Mean {
    pub fn to_vector(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            Mean::Constant(m) => Ok(DVector::from_element(n, *m)),
            Mean::Vector(v) if v.len() == n => Ok(v.clone()),
            Mean::Vector(v) => Err(Error::InvalidArgument(format!(
                "mean vector has length {}, lattice has {n} units",
                v.len()
            ))),
        }
    }
}

impl From<f64> for Mean {
    fn from(m: f64) -> Self {
        Mean::Constant(m)
    }
}

/// Parameters of `GMCAR(ρ_1, ρ_2, η, τ_1, τ_2)` plus means and optional noise.
///
/// `eta = (η_0, η_1, …, η_p)`; `p` is the highest neighbor order in the
/// linking matrix. Noise precisions are precisions, not variances.
#[derive(Debug, Clone, PartialEq)]
pub struct GmcarParams {
    pub rho1: f64,
    pub rho2: f64,
    pub eta: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: Mean,
    pub mu2: Mean,
    pub noise_prec1: Option<f64>,
    pub noise_prec2: Option<f64>,
}

impl GmcarParams {
    /// Noise-free parameters with constant means.
    pub fn new(rho1: f64, rho2: f64, eta: Vec<f64>, tau1: f64, tau2: f64, mu1: f64, mu2: f64) -> Self {
        Self {
            rho1,
            rho2,
            eta,
            tau1,
            tau2,
            mu1: Mean::Constant(mu1),
            mu2: Mean::Constant(mu2),
            noise_prec1: None,
            noise_prec2: None,
        }
    }

    pub fn with_noise(mut self, prec1: f64, prec2: f64) -> Self {
        self.noise_prec1 = Some(prec1);
        self.noise_prec2 = Some(prec2);
        self
    }

    pub fn without_noise(&self) -> Self {
        Self {
            noise_prec1: None,
            noise_prec2: None,
            ..self.clone()
        }
    }

    /// Highest neighbor order used by the linking matrix.
    pub fn order(&self) -> usize {
        self.eta.len().saturating_sub(1)
    }

    pub fn has_noise(&self) -> bool {
        self.noise_prec1.is_some() || self.noise_prec2.is_some()
    }

    pub fn conditional_car(&self) -> CarSpec {
        CarSpec {
            rho: self.rho1,
            tau: self.tau1,
        }
    }

    pub fn marginal_car(&self) -> CarSpec {
        CarSpec {
            rho: self.rho2,
            tau: self.tau2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.conditional_car().validate()?;
        self.marginal_car().validate()?;
        if self.eta.is_empty() {
            return Err(Error::InvalidParameter("eta must contain at least eta_0".into()));
        }
        if let Some(e) = self.eta.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite eta {e}")));
        }
        for nu in [self.noise_prec1, self.noise_prec2].into_iter().flatten() {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "noise precision must be positive, got {nu}"
                )));
            }
        }
        Ok(())
    }

    fn validate_for(&self, structure: &SpatialStructure) -> Result<()> {
        self.validate()?;
        if self.order() > structure.max_order() {
            return Err(Error::InvalidArgument(format!(
                "linking matrix of order {} but structure only holds orders up to {}",
                self.order(),
                structure.max_order()
            )));
        }
        Ok(())
    }
}

/// Covariance blocks of the joint GMCAR distribution.
#[derive(Debug, Clone)]
pub struct CovarianceBlocks {
    pub sigma11: DMatrix<f64>,
    pub sigma12: DMatrix<f64>,
    pub sigma22: DMatrix<f64>,
    /// `Σ_{11·2}`, the conditional covariance of `X_1 | X_2`.
    pub conditional: DMatrix<f64>,
    /// `A`.
    pub linking: DMatrix<f64>,
}

impl CovarianceBlocks {
    pub fn n(&self) -> usize {
        self.sigma11.nrows()
    }

    /// The 2n×2n matrix `[[Σ11, Σ12], [Σ12ᵀ, Σ22]]`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.sigma11);
        m.view_mut((0, n), (n, n)).copy_from(&self.sigma12);
        m.view_mut((n, 0), (n, n)).copy_from(&self.sigma12.transpose());
        m.view_mut((n, n), (n, n)).copy_from(&self.sigma22);
        m
    }
}

/// `A = η_0 I + Σ_{j≥1} η_j W_j`.
pub fn linking_matrix(
    n: usize,
    eta: &[f64],
    contiguity: &[ContiguityMatrix],
) -> Result<DMatrix<f64>> {
    if eta.len() != contiguity.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} linking coefficients for {} contiguity matrices",
            eta.len(),
            contiguity.len()
        )));
    }
    if let Some(w) = contiguity.iter().find(|w| w.n() != n) {
        return Err(Error::InvalidArgument(format!(
            "contiguity matrix of order {} has {} units, expected {n}",
            w.order(),
            w.n()
        )));
    }
    let mut a = DMatrix::identity(n, n) * eta[0];
    for (eta_j, w) in eta[1..].iter().zip(contiguity) {
        if *eta_j != 0.0 {
            a += w.matrix() * *eta_j;
        }
    }
    Ok(a)
}

fn structure_linking(eta: &[f64], structure: &SpatialStructure) -> Result<DMatrix<f64>> {
    let p = eta.len().saturating_sub(1);
    if p > structure.max_order() {
        return Err(Error::InvalidArgument(format!(
            "linking order {p} exceeds structure order {}",
            structure.max_order()
        )));
    }
    linking_matrix(structure.n(), eta, &structure.contiguity()[..p])
}

fn spd_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite(what.into()))?;
    let inv = chol.inverse();
    // symmetrise away round-off
    Ok((&inv + inv.transpose()) * 0.5)
}

pub fn covariance_blocks(
    params: &GmcarParams,
    structure: &SpatialStructure,
) -> Result<CovarianceBlocks> {
    params.validate_for(structure)?;
    let sigma22 = spd_inverse(car_precision(&params.marginal_car(), structure)?, "marginal CAR")?;
    let conditional = spd_inverse(
        car_precision(&params.conditional_car(), structure)?,
        "conditional CAR",
    )?;
    let linking = structure_linking(&params.eta, structure)?;
    let sigma12 = &linking * &sigma22;
    let sigma11 = &conditional + &sigma12 * linking.transpose();
    Ok(CovarianceBlocks {
        sigma11,
        sigma12,
        sigma22,
        conditional,
        linking,
    })
}

/// Marginal covariance of the observations: GMCAR blocks plus `ν_i⁻¹ I` on
/// each diagonal block when noise is present.
pub fn joint_covariance(blocks: &CovarianceBlocks, params: &GmcarParams) -> DMatrix<f64> {
    let n = blocks.n();
    let mut m = blocks.assemble();
    if let Some(nu) = params.noise_prec1 {
        for i in 0..n {
            m[(i, i)] += 1.0 / nu;
        }
    }
    if let Some(nu) = params.noise_prec2 {
        for i in n..2 * n {
            m[(i, i)] += 1.0 / nu;
        }
    }
    m
}

/// `rᵀ(D_w − ρW_1)r` via the edge list.
fn car_quadratic(structure: &SpatialStructure, rho: f64, r: &DVector<f64>) -> f64 {
    let d = structure.degree().diagonal();
    let diag: f64 = r.iter().zip(d).map(|(x, &w)| w as f64 * x * x).sum();
    let off: f64 = structure
        .lattice()
        .edges()
        .map(|(a, b)| r[a] * r[b])
        .sum();
    diag - 2.0 * rho * off
}

fn check_len(x: &DVector<f64>, n: usize, name: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{name} has length {}, lattice has {n} units",
            x.len()
        )));
    }
    Ok(())
}

/// Exact joint log-density of `(x1, x2)`.
///
/// Without noise this uses the factorisation `f(x1 | x2) f(x2)`. With noise it
/// evaluates the marginal Gaussian density under [`joint_covariance`], via the
/// latent precision and the Woodbury identity when both noise terms exist.
pub fn log_density(
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    params: &GmcarParams,
    structure: &SpatialStructure,
) -> Result<f64> {
    params.validate_for(structure)?;
    let n = structure.n();
    check_len(x1, n, "x1")?;
    check_len(x2, n, "x2")?;
    let s = x2 - params.mu2.to_vector(n)?;
    let r1 = x1 - params.mu1.to_vector(n)?;
    match (params.noise_prec1, params.noise_prec2) {
        (None, None) => factorized_log_density(&r1, &s, params, structure),
        (Some(nu1), Some(nu2)) => marginal_log_density(&r1, &s, params, nu1, nu2, structure),
        _ => dense_log_density(&r1, &s, params, structure),
    }
}

fn log_det_kernel(structure: &SpatialStructure, rho: f64) -> Result<f64> {
    structure
        .log_det_car_kernel(rho)
        .ok_or_else(|| Error::NotPositiveDefinite(format!("D_w - rho W_1 at rho = {rho}")))
}

fn factorized_log_density(
    r1: &DVector<f64>,
    s: &DVector<f64>,
    params: &GmcarParams,
    structure: &SpatialStructure,
) -> Result<f64> {
    let n = structure.n() as f64;
    let mut r = r1.clone();
    r.axpy(-params.eta[0], s, 1.0);
    for (eta_j, w) in params.eta[1..].iter().zip(structure.contiguity()) {
        if *eta_j != 0.0 {
            r.gemv(-*eta_j, w.matrix(), s, 1.0);
        }
    }
    let ld1 = log_det_kernel(structure, params.rho1)?;
    let ld2 = log_det_kernel(structure, params.rho2)?;
    let cond = 0.5 * n * params.tau1.ln() + 0.5 * ld1
        - 0.5 * params.tau1 * car_quadratic(structure, params.rho1, &r);
    let marg = 0.5 * n * params.tau2.ln() + 0.5 * ld2
        - 0.5 * params.tau2 * car_quadratic(structure, params.rho2, s);
    Ok(cond + marg - n * LN_2PI)
}

fn marginal_log_density(
    r1: &DVector<f64>,
    s: &DVector<f64>,
    params: &GmcarParams,
    nu1: f64,
    nu2: f64,
    structure: &SpatialStructure,
) -> Result<f64> {
    let n = structure.n();
    let nf = n as f64;
    let q1 = structure.car_kernel(params.rho1) * params.tau1;
    let q2 = structure.car_kernel(params.rho2) * params.tau2;
    let a = structure_linking(&params.eta, structure)?;
    let q1a = &q1 * &a;
    // Latent precision Q = [[Q1, -Q1 A], [-Aᵀ Q1, Q2 + Aᵀ Q1 A]], plus N = diag(ν).
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&q1);
    m.view_mut((0, n), (n, n)).copy_from(&(-&q1a));
    m.view_mut((n, 0), (n, n)).copy_from(&(-q1a.transpose()));
    m.view_mut((n, n), (n, n))
        .copy_from(&(q2 + a.transpose() * &q1a));
    for i in 0..n {
        m[(i, i)] += nu1;
        m[(n + i, n + i)] += nu2;
    }
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::NotPositiveDefinite("latent precision plus noise".into()))?;
    let log_det_qn = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let log_det_q = nf * (params.tau1.ln() + params.tau2.ln())
        + log_det_kernel(structure, params.rho1)?
        + log_det_kernel(structure, params.rho2)?;
    let log_det_n = nf * (nu1.ln() + nu2.ln());
    let log_det_sigma = log_det_qn - log_det_q - log_det_n;

    let mut nr = DVector::zeros(2 * n);
    for i in 0..n {
        nr[i] = nu1 * r1[i];
        nr[n + i] = nu2 * s[i];
    }
    let rnr = nu1 * r1.norm_squared() + nu2 * s.norm_squared();
    let y = chol
        .l_dirty()
        .solve_lower_triangular(&nr)
        .expect("cholesky factor has a positive diagonal");
    let quad = rnr - y.norm_squared();
    Ok(-nf * LN_2PI - 0.5 * log_det_sigma - 0.5 * quad)
}

fn dense_log_density(
    r1: &DVector<f64>,
    s: &DVector<f64>,
    params: &GmcarParams,
    structure: &SpatialStructure,
) -> Result<f64> {
    let blocks = covariance_blocks(params, structure)?;
    let sigma = joint_covariance(&blocks, params);
    let mut r = DVector::zeros(sigma.nrows());
    r.rows_mut(0, r1.len()).copy_from(r1);
    r.rows_mut(r1.len(), s.len()).copy_from(s);
    mvn_log_pdf_centered(&sigma, &r)
}

/// Log-pdf of `N(0, sigma)` at `r`.
pub(crate) fn mvn_log_pdf_centered(sigma: &DMatrix<f64>, r: &DVector<f64>) -> Result<f64> {
    let chol = Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("joint covariance".into()))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let y = chol
        .l_dirty()
        .solve_lower_triangular(r)
        .expect("cholesky factor has a positive diagonal");
    Ok(-0.5 * (r.len() as f64) * LN_2PI - 0.5 * log_det - 0.5 * y.norm_squared())
}

/// Precomputed factors for repeated draws from one parameter set.
pub struct GmcarSampler {
    mu1: DVector<f64>,
    mu2: DVector<f64>,
    linking: DMatrix<f64>,
    cond_chol: Cholesky<f64, Dyn>,
    marg_chol: Cholesky<f64, Dyn>,
    noise_sd1: Option<f64>,
    noise_sd2: Option<f64>,
}

impl GmcarSampler {
    pub fn new(params: &GmcarParams, structure: &SpatialStructure) -> Result<Self> {
        params.validate_for(structure)?;
        let n = structure.n();
        let chol = |spec: CarSpec, what: &str| -> Result<Cholesky<f64, Dyn>> {
            Cholesky::new(car_precision(&spec, structure)?)
                .ok_or_else(|| Error::NotPositiveDefinite(what.into()))
        };
        Ok(Self {
            mu1: params.mu1.to_vector(n)?,
            mu2: params.mu2.to_vector(n)?,
            linking: structure_linking(&params.eta, structure)?,
            cond_chol: chol(params.conditional_car(), "conditional CAR")?,
            marg_chol: chol(params.marginal_car(), "marginal CAR")?,
            noise_sd1: params.noise_prec1.map(|nu| nu.sqrt().recip()),
            noise_sd2: params.noise_prec2.map(|nu| nu.sqrt().recip()),
        })
    }

    /// Draws `z ~ N(0, Q⁻¹)` given the Cholesky factor of `Q`.
    fn draw_from_precision<R: Rng + ?Sized>(chol: &Cholesky<f64, Dyn>, rng: &mut R) -> DVector<f64> {
        let n = chol.l_dirty().nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        chol.l_dirty()
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Draws the latent field `(φ_1, φ_2)` with zero mean.
    pub fn draw_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let phi2 = Self::draw_from_precision(&self.marg_chol, rng);
        let e = Self::draw_from_precision(&self.cond_chol, rng);
        let phi1 = &self.linking * &phi2 + e;
        (phi1, phi2)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let (phi1, phi2) = self.draw_latent(rng);
        let mut x1 = &self.mu1 + phi1;
        let mut x2 = &self.mu2 + phi2;
        for (x, sd) in [(&mut x1, self.noise_sd1), (&mut x2, self.noise_sd2)] {
            if let Some(sd) = sd {
                for v in x.iter_mut() {
                    *v += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        (x1, x2)
    }
}

/// One draw of `(x1, x2)`. Use [`GmcarSampler`] for many draws.
pub fn sample<R: Rng + ?Sized>(
    params: &GmcarParams,
    structure: &SpatialStructure,
    rng: &mut R,
) -> Result<(DVector<f64>, DVector<f64>)> {
    Ok(GmcarSampler::new(params, structure)?.draw(rng))
}

//! Bayesian fitting of the GMCAR model with measurement noise.
//!
//! The posterior is explored with a component-wise random-walk Metropolis
//! sampler on unconstrained scales (logit for `ρ`, log for precisions,
//! identity for `η` and `μ`). Proposal scales may be tuned by Robbins-Monro
//! during burn-in; they are frozen afterwards. The spatial concordance
//! coefficient is evaluated at each stored draw (plug-in posterior), and
//! models of different linking order are compared with DIC based on the
//! noise-marginalised likelihood.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::concordance::spatial_concordance_fast;
use crate::error::{Error, Result};
use crate::gmcar::{log_density, GmcarParams, Mean};
use crate::lattice::SpatialStructure;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const TARGET_ACCEPTANCE: f64 = 0.44;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

impl UniformPrior {
    /// Support is the closed interval `[lo, hi]`.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            -(self.hi - self.lo).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Shape/rate parameterisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPrior {
    pub fn log_pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        -0.5 * (LN_2PI + self.variance.ln()) - 0.5 * (x - self.mean).powi(2) / self.variance
    }
}

/// Independent priors on every model parameter.
///
/// Noise terms carry a prior on their precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub rho: UniformPrior,
    pub tau: GammaPrior,
    pub noise: GammaPrior,
    pub eta: NormalPrior,
    pub mu: NormalPrior,
}

impl PriorSpec {
    /// `ρ_i ~ U(0,1)`, `τ_i, ν_i ~ Gamma(0.1, 0.1)`, `η_j ~ N(0, 100)`,
    /// `μ_i ~ N(mu_mean, 10)`.
    pub fn with_mu_mean(mu_mean: f64) -> Self {
        Self {
            rho: UniformPrior { lo: 0.0, hi: 1.0 },
            tau: GammaPrior {
                shape: 0.1,
                rate: 0.1,
            },
            noise: GammaPrior {
                shape: 0.1,
                rate: 0.1,
            },
            eta: NormalPrior {
                mean: 0.0,
                variance: 100.0,
            },
            mu: NormalPrior {
                mean: mu_mean,
                variance: 10.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rho.lo < self.rho.hi
            && self.rho.lo >= -1.0
            && self.rho.hi <= 1.0
            && self.tau.shape > 0.0
            && self.tau.rate > 0.0
            && self.noise.shape > 0.0
            && self.noise.rate > 0.0
            && self.eta.variance > 0.0
            && self.mu.variance > 0.0
            && self.mu.mean.is_finite()
            && self.eta.mean.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid prior specification {self:?}")))
        }
    }
}

fn log_prior_mean(mean: &Mean, prior: &NormalPrior) -> f64 {
    match mean {
        Mean::Constant(m) => prior.log_pdf(*m),
        Mean::Vector(v) => v.iter().map(|&m| prior.log_pdf(m)).sum(),
    }
}

/// Sum of the independent prior log-densities; `-∞` outside the support.
pub fn log_prior(params: &GmcarParams, spec: &PriorSpec) -> f64 {
    let mut lp = spec.rho.log_pdf(params.rho1) + spec.rho.log_pdf(params.rho2);
    lp += spec.tau.log_pdf(params.tau1) + spec.tau.log_pdf(params.tau2);
    for nu in [params.noise_prec1, params.noise_prec2].into_iter().flatten() {
        lp += spec.noise.log_pdf(nu);
    }
    lp += params.eta.iter().map(|&e| spec.eta.log_pdf(e)).sum::<f64>();
    lp += log_prior_mean(&params.mu1, &spec.mu) + log_prior_mean(&params.mu2, &spec.mu);
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// Paired observations; `x1` is the conditioned sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedData {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
}

impl PairedData {
    pub fn new(x1: DVector<f64>, x2: DVector<f64>) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::InvalidArgument(format!(
                "sequences differ in length: {} vs {}",
                x1.len(),
                x2.len()
            )));
        }
        if x1.iter().chain(x2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("data contain non-finite values".into()));
        }
        Ok(Self { x1, x2 })
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

/// Log posterior up to a constant: noise-marginalised likelihood plus prior.
pub fn log_posterior(
    params: &GmcarParams,
    data: &PairedData,
    structure: &SpatialStructure,
    spec: &PriorSpec,
) -> f64 {
    let lp = log_prior(params, spec);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    match log_density(&data.x1, &data.x2, params, structure) {
        Ok(ll) if ll.is_finite() => ll + lp,
        _ => f64::NEG_INFINITY,
    }
}

/// Map from a constrained coordinate to the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// `y = log x`.
    Log,
    /// `y = logit((x − lo) / (hi − lo))`.
    Logit { lo: f64, hi: f64 },
}

impl Transform {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit { lo, hi } => {
                let p = (x - lo) / (hi - lo);
                (p / (1.0 - p)).ln()
            }
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Transform::Identity => y,
            Transform::Log => y.exp(),
            Transform::Logit { lo, hi } => lo + (hi - lo) / (1.0 + (-y).exp()),
        }
    }

    /// `log |dx/dy|` at unconstrained `y`.
    pub fn log_jacobian(&self, y: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Log => y,
            Transform::Logit { lo, hi } => {
                // log σ(y) + log σ(−y), written to avoid overflow
                (hi - lo).ln() - y.abs() - 2.0 * (-y.abs()).exp().ln_1p()
            }
        }
    }
}

/// A log density over a constrained parameter vector.
pub trait LogTarget {
    fn transforms(&self) -> &[Transform];
    fn log_density(&self, theta: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.transforms().len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub log_target: f64,
}

impl ChainState {
    pub fn new<T: LogTarget + ?Sized>(target: &T, theta: Vec<f64>) -> Self {
        let log_target = target.log_density(&theta);
        Self { theta, log_target }
    }
}

/// One sweep of single-coordinate random-walk Metropolis updates.
///
/// Each coordinate is proposed as `y' = y + s·z` on its unconstrained scale
/// and accepted with probability `min(1, exp(Δ log target + Δ log|J|))`.
/// A zero scale leaves the coordinate untouched and counts as accepted.
pub fn rw_metropolis_step<T: LogTarget + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &mut ChainState,
    scales: &[f64],
    rng: &mut R,
) -> Vec<bool> {
    let transforms = target.transforms();
    debug_assert_eq!(scales.len(), transforms.len());
    let mut accepted = vec![false; transforms.len()];
    let mut proposal = state.theta.clone();
    for (i, t) in transforms.iter().enumerate() {
        if scales[i] == 0.0 {
            accepted[i] = true;
            continue;
        }
        let y = t.forward(state.theta[i]);
        let y_new = y + scales[i] * rng.sample::<f64, _>(StandardNormal);
        proposal[i] = t.inverse(y_new);
        let lt_new = target.log_density(&proposal);
        let log_alpha =
            lt_new - state.log_target + t.log_jacobian(y_new) - t.log_jacobian(y);
        let u: f64 = rng.random();
        if lt_new.is_finite() && u.ln() < log_alpha {
            state.theta[i] = proposal[i];
            state.log_target = lt_new;
            accepted[i] = true;
        } else {
            proposal[i] = state.theta[i];
        }
    }
    accepted
}

/// Positions of each parameter within the flat sampling vector.
///
/// Order: `rho1, rho2, tau1, tau2, [nu1, nu2], eta0..=etap, mu1, mu2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub order: usize,
    pub noise: bool,
}

impl ParamLayout {
    pub fn dim(&self) -> usize {
        4 + if self.noise { 2 } else { 0 } + self.order + 1 + 2
    }

    fn eta_start(&self) -> usize {
        if self.noise {
            6
        } else {
            4
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["rho1", "rho2", "tau1", "tau2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.noise {
            names.push("nu1".into());
            names.push("nu2".into());
        }
        names.extend((0..=self.order).map(|j| format!("eta{j}")));
        names.push("mu1".into());
        names.push("mu2".into());
        names
    }

    pub fn transforms(&self, prior: &PriorSpec) -> Vec<Transform> {
        let rho = Transform::Logit {
            lo: prior.rho.lo,
            hi: prior.rho.hi,
        };
        let mut t = vec![rho, rho, Transform::Log, Transform::Log];
        if self.noise {
            t.extend([Transform::Log, Transform::Log]);
        }
        t.extend(std::iter::repeat_n(Transform::Identity, self.order + 1 + 2));
        t
    }

    pub fn to_params(&self, theta: &[f64]) -> GmcarParams {
        let e = self.eta_start();
        let mut p = GmcarParams::new(
            theta[0],
            theta[1],
            theta[e..e + self.order + 1].to_vec(),
            theta[2],
            theta[3],
            theta[e + self.order + 1],
            theta[e + self.order + 2],
        );
        if self.noise {
            p = p.with_noise(theta[4], theta[5]);
        }
        p
    }

    /// Flattens `params`; means must be constant.
    pub fn to_vector(&self, params: &GmcarParams) -> Result<Vec<f64>> {
        if params.order() != self.order {
            return Err(Error::InvalidArgument(format!(
                "parameters have linking order {}, layout expects {}",
                params.order(),
                self.order
            )));
        }
        let scalar = |m: &Mean| match m {
            Mean::Constant(v) => Ok(*v),
            Mean::Vector(_) => Err(Error::InvalidArgument(
                "the sampler supports constant means only".into(),
            )),
        };
        let mut v = vec![params.rho1, params.rho2, params.tau1, params.tau2];
        if self.noise {
            match (params.noise_prec1, params.noise_prec2) {
                (Some(a), Some(b)) => v.extend([a, b]),
                _ => {
                    return Err(Error::InvalidArgument(
                        "layout expects both noise precisions".into(),
                    ))
                }
            }
        }
        v.extend_from_slice(&params.eta);
        v.push(scalar(&params.mu1)?);
        v.push(scalar(&params.mu2)?);
        Ok(v)
    }
}

/// The GMCAR posterior as a sampling target.
#[derive(Debug, Clone)]
pub struct GmcarPosterior<'a> {
    structure: &'a SpatialStructure,
    data: &'a PairedData,
    prior: PriorSpec,
    layout: ParamLayout,
    transforms: Vec<Transform>,
    likelihood: bool,
}

impl<'a> GmcarPosterior<'a> {
    /// `order` is the highest neighbor order in the linking matrix; `noise`
    /// adds white measurement noise to both sequences.
    pub fn new(
        structure: &'a SpatialStructure,
        data: &'a PairedData,
        order: usize,
        noise: bool,
        prior: PriorSpec,
    ) -> Result<Self> {
        prior.validate()?;
        if data.len() != structure.n() {
            return Err(Error::InvalidArgument(format!(
                "{} observations for {} units",
                data.len(),
                structure.n()
            )));
        }
        if order > structure.max_order() {
            return Err(Error::InvalidArgument(format!(
                "order {order} exceeds the structure's {}",
                structure.max_order()
            )));
        }
        let layout = ParamLayout { order, noise };
        let transforms = layout.transforms(&prior);
        Ok(Self {
            structure,
            data,
            prior,
            layout,
            transforms,
            likelihood: true,
        })
    }

    /// Drops the likelihood so the chain samples the prior.
    pub fn prior_only(mut self) -> Self {
        self.likelihood = false;
        self
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn structure(&self) -> &SpatialStructure {
        self.structure
    }

    pub fn data(&self) -> &PairedData {
        self.data
    }

    /// Marginal log-likelihood, or an error for parameters outside the model.
    pub fn log_likelihood(&self, params: &GmcarParams) -> Result<f64> {
        log_density(&self.data.x1, &self.data.x2, params, self.structure)
    }

    /// Data-driven starting point: means at the sample means, precisions at
    /// the reciprocal sample variances, `ρ` at the prior midpoint, `η = 0`.
    pub fn initial_params(&self) -> Result<GmcarParams> {
        let mean = |x: &DVector<f64>| x.mean();
        let var = |x: &DVector<f64>| x.variance();
        let (v1, v2) = (var(&self.data.x1), var(&self.data.x2));
        if !(v1 > 0.0 && v2 > 0.0) {
            return Err(Error::Init(
                "a data sequence has zero variance; precision cannot be initialised".into(),
            ));
        }
        let rho = 0.5 * (self.prior.rho.lo + self.prior.rho.hi);
        let mut p = GmcarParams::new(
            rho,
            rho,
            vec![0.0; self.layout.order + 1],
            1.0 / v1,
            1.0 / v2,
            mean(&self.data.x1),
            mean(&self.data.x2),
        );
        if self.layout.noise {
            p = p.with_noise(1.0 / v1, 1.0 / v2);
        }
        Ok(p)
    }

    fn default_scales(&self) -> Vec<f64> {
        let n = self.data.len().max(1) as f64;
        let sd_mu = |x: &DVector<f64>| (x.variance().sqrt() / n.sqrt()).max(1e-3);
        let mut scales: Vec<f64> = self
            .transforms
            .iter()
            .map(|t| match t {
                Transform::Identity => 0.1,
                _ => 0.5,
            })
            .collect();
        let d = scales.len();
        scales[d - 2] = sd_mu(&self.data.x1);
        scales[d - 1] = sd_mu(&self.data.x2);
        scales
    }
}

impl LogTarget for GmcarPosterior<'_> {
    fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let params = self.layout.to_params(theta);
        if self.likelihood {
            log_posterior(&params, self.data, self.structure, &self.prior)
        } else {
            log_prior(&params, &self.prior)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Per-coordinate proposal scales on the unconstrained scale.
    pub proposal_scales: Option<Vec<f64>>,
    pub adapt: bool,
    /// Overrides the data-driven starting point.
    pub initial: Option<GmcarParams>,
    /// Also evaluate the coefficient with noise variances in its denominator.
    pub include_noise_in_coefficient: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 30_000,
            burn_in: 15_000,
            thin: 1,
            seed: 0,
            proposal_scales: None,
            adapt: true,
            initial: None,
            include_noise_in_coefficient: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Stored post-burn-in draws and chain diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub layout: ParamLayout,
    pub names: Vec<String>,
    /// One row per stored draw, columns as in `names`.
    pub rows: Vec<Vec<f64>>,
    /// Plug-in `ϱ_s,c` at each stored draw.
    pub rho_sc: Vec<f64>,
    /// Plug-in `ϱ_s,c` with noise in the denominator, when requested.
    pub rho_sc_with_noise: Option<Vec<f64>>,
    /// Log posterior at each stored draw.
    pub log_posterior: Vec<f64>,
    /// Log posterior at every iteration, burn-in included.
    pub trace: Vec<f64>,
    /// Post-burn-in acceptance rate per coordinate.
    pub acceptance: Vec<f64>,
    /// Proposal scales in force after burn-in.
    pub scales: Vec<f64>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn params(&self, i: usize) -> GmcarParams {
        self.layout.to_params(&self.rows[i])
    }
}

/// Settings for [`run_sampler`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adapt: bool,
}

/// Raw output of [`run_sampler`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    pub rows: Vec<Vec<f64>>,
    pub log_target: Vec<f64>,
    pub trace: Vec<f64>,
    pub acceptance: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Component-wise random-walk Metropolis on any [`LogTarget`].
///
/// During burn-in each log-scale moves by `t^{-0.6}·(accepted − 0.44)`
/// when `adapt` is set; afterwards scales are fixed. Stores every
/// `thin`-th post-burn-in state.
pub fn run_sampler<T: LogTarget + ?Sized>(
    target: &T,
    initial: Vec<f64>,
    mut scales: Vec<f64>,
    settings: &SamplerSettings,
) -> Result<SamplerOutput> {
    let dim = target.dim();
    if initial.len() != dim || scales.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "target has {dim} coordinates, got {} initial values and {} scales",
            initial.len(),
            scales.len()
        )));
    }
    if settings.burn_in >= settings.iterations || settings.thin == 0 {
        return Err(Error::InvalidArgument(format!(
            "invalid sampler settings {settings:?}"
        )));
    }
    let mut state = ChainState::new(target, initial);
    if !state.log_target.is_finite() {
        return Err(Error::Init(format!(
            "log target at the initial point {:?} is {}",
            state.theta, state.log_target
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let kept = (settings.iterations - settings.burn_in) / settings.thin;
    let mut rows = Vec::with_capacity(kept);
    let mut log_target = Vec::with_capacity(kept);
    let mut trace = Vec::with_capacity(settings.iterations);
    let mut accepted = vec![0usize; dim];
    for t in 0..settings.iterations {
        let flags = rw_metropolis_step(target, &mut state, &scales, &mut rng);
        trace.push(state.log_target);
        if t < settings.burn_in {
            if settings.adapt {
                let gamma = ((t + 1) as f64).powf(-0.6);
                for (s, &a) in scales.iter_mut().zip(&flags) {
                    if *s > 0.0 {
                        let hit = if a { 1.0 } else { 0.0 };
                        *s = (s.ln() + gamma * (hit - TARGET_ACCEPTANCE))
                            .exp()
                            .clamp(1e-6, 1e3);
                    }
                }
            }
            continue;
        }
        for (c, &a) in accepted.iter_mut().zip(&flags) {
            *c += a as usize;
        }
        if (t - settings.burn_in) % settings.thin == settings.thin - 1 {
            rows.push(state.theta.clone());
            log_target.push(state.log_target);
        }
    }
    let post = (settings.iterations - settings.burn_in) as f64;
    Ok(SamplerOutput {
        rows,
        log_target,
        trace,
        acceptance: accepted.iter().map(|&c| c as f64 / post).collect(),
        scales,
    })
}

/// Runs a single chain. Identical inputs give bitwise-identical output.
pub fn run_chain(posterior: &GmcarPosterior<'_>, config: &ChainConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    let layout = posterior.layout.clone();
    let init = match &config.initial {
        Some(p) => p.clone(),
        None => posterior.initial_params()?,
    };
    let theta0 = layout.to_vector(&init)?;
    let scales = match &config.proposal_scales {
        Some(s) => s.clone(),
        None => posterior.default_scales(),
    };
    let settings = SamplerSettings {
        iterations: config.iterations,
        burn_in: config.burn_in,
        thin: config.thin,
        seed: config.seed,
        adapt: config.adapt,
    };
    let out = run_sampler(posterior, theta0, scales, &settings)?;
    let mut draws = PosteriorDraws {
        names: layout.names(),
        layout,
        rows: out.rows,
        rho_sc: Vec::new(),
        rho_sc_with_noise: None,
        log_posterior: out.log_target,
        trace: out.trace,
        acceptance: out.acceptance,
        scales: out.scales,
    };
    draws.rho_sc = plugin_coefficient_draws(&draws, posterior.structure, false)?;
    if config.include_noise_in_coefficient {
        draws.rho_sc_with_noise = Some(plugin_coefficient_draws(&draws, posterior.structure, true)?);
    }
    Ok(draws)
}

/// Runs one chain per seed, sequentially; the chains share nothing.
pub fn run_chains(
    posterior: &GmcarPosterior<'_>,
    config: &ChainConfig,
    seeds: &[u64],
) -> Result<Vec<PosteriorDraws>> {
    seeds
        .iter()
        .map(|&seed| {
            run_chain(
                posterior,
                &ChainConfig {
                    seed,
                    ..config.clone()
                },
            )
        })
        .collect()
}

/// Potential scale reduction factor for one scalar quantity across chains.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument(
            "need at least two chains with two draws each".into(),
        ));
    }
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c[..n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = n as f64 / (m as f64 - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / m as f64;
    let var_hat = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    Ok((var_hat / w).sqrt())
}

/// `ϱ_s,c(θ⁽ᵗ⁾)` for every stored draw.
pub fn plugin_coefficient_draws(
    draws: &PosteriorDraws,
    structure: &SpatialStructure,
    include_noise: bool,
) -> Result<Vec<f64>> {
    (0..draws.len())
        .map(|i| spatial_concordance_fast(&draws.params(i), structure, include_noise))
        .collect()
}

/// Shortest interval spanning `⌈prob·m⌉` consecutive order statistics.
/// Ties go to the lowest start.
pub fn hpd_interval(samples: &[f64], prob: f64) -> Result<(f64, f64)> {
    if samples.len() < 20 {
        return Err(Error::InvalidArgument(format!(
            "HPD interval needs at least 20 samples, got {}",
            samples.len()
        )));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probability must lie in (0, 1), got {prob}"
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let k = ((prob * m as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=(m - k) {
        let width = sorted[i + k - 1] - sorted[i];
        if width < best_width {
            best_width = width;
            best = i;
        }
    }
    Ok((sorted[best], sorted[best + k - 1]))
}

/// Which parameter value the deviance was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlugIn {
    /// Posterior mean on the sampling scale, mapped back.
    TransformedMean,
    /// Coordinate-wise posterior median; used when the mean gives a
    /// non-finite deviance.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic {
    pub dic: f64,
    /// Posterior mean deviance.
    pub d_bar: f64,
    /// Effective number of parameters, `d_bar − D(θ̄)`.
    pub p_d: f64,
    pub d_at_plugin: f64,
    pub plug_in: PlugIn,
}

fn deviance(posterior: &GmcarPosterior<'_>, theta: &[f64]) -> f64 {
    let params = posterior.layout.to_params(theta);
    match posterior.log_likelihood(&params) {
        Ok(ll) => -2.0 * ll,
        Err(_) => f64::NAN,
    }
}

/// DIC with deviance `−2 log p(x | θ)` under the noise-marginalised likelihood.
pub fn dic(draws: &PosteriorDraws, posterior: &GmcarPosterior<'_>) -> Result<Dic> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no draws".into()));
    }
    if draws.layout != posterior.layout {
        return Err(Error::InvalidArgument(
            "draws were produced under a different parameter layout".into(),
        ));
    }
    let m = draws.len() as f64;
    let mut d_sum = 0.0;
    for row in &draws.rows {
        d_sum += deviance(posterior, row);
    }
    let d_bar = d_sum / m;
    if !d_bar.is_finite() {
        return Err(Error::Degenerate("mean deviance is not finite".into()));
    }
    let dim = posterior.layout.dim();
    let column = |j: usize| draws.rows.iter().map(move |r| r[j]);
    let mean_theta: Vec<f64> = (0..dim)
        .map(|j| {
            let first = draws.rows[0][j];
            if column(j).all(|v| v == first) {
                return first;
            }
            let t = posterior.transforms[j];
            t.inverse(column(j).map(|v| t.forward(v)).sum::<f64>() / m)
        })
        .collect();
    let mut d_hat = deviance(posterior, &mean_theta);
    let mut plug_in = PlugIn::TransformedMean;
    if !d_hat.is_finite() {
        let median_theta: Vec<f64> = (0..dim)
            .map(|j| {
                let mut c: Vec<f64> = column(j).collect();
                c.sort_by(f64::total_cmp);
                c[c.len() / 2]
            })
            .collect();
        d_hat = deviance(posterior, &median_theta);
        plug_in = PlugIn::Median;
        if !d_hat.is_finite() {
            return Err(Error::Degenerate(
                "deviance is not finite at either plug-in point".into(),
            ));
        }
    }
    let p_d = d_bar - d_hat;
    Ok(Dic {
        dic: d_bar + p_d,
        d_bar,
        p_d,
        d_at_plugin: d_hat,
        plug_in,
    })
}

//! Design-based survey estimators behind the two rate sequences: the
//! Horvitz-Thompson total and mean, and the composite small-area estimate
//! that blends a direct rate with a regression-based synthetic rate.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Values `y_k` for every member of a finite population.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePopulation {
    values: Vec<f64>,
}

impl FinitePopulation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("population is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("population has non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.size() as f64
    }

    /// The sample drawn at `indices` with inclusion probabilities `pi`.
    pub fn sample(&self, indices: &[usize], pi: &[f64]) -> Result<SurveySample> {
        if let Some(&k) = indices.iter().find(|&&k| k >= self.size()) {
            return Err(Error::InvalidArgument(format!(
                "index {k} outside a population of {}",
                self.size()
            )));
        }
        let y = indices.iter().map(|&k| self.values[k]).collect();
        SurveySample::new(indices.to_vec(), y, pi.to_vec())
    }
}

/// Sampled units with their values and inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveySample {
    indices: Vec<usize>,
    y: Vec<f64>,
    pi: Vec<f64>,
}

impl SurveySample {
    pub fn new(indices: Vec<usize>, y: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if indices.len() != y.len() || y.len() != pi.len() {
            return Err(Error::InvalidArgument(
                "indices, values and inclusion probabilities differ in length".into(),
            ));
        }
        if let Some(p) = pi.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "inclusion probability {p} outside (0, 1]"
            )));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("sampled indices repeat".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample has non-finite values".into()));
        }
        Ok(Self { indices, y, pi })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// `Σ_{k∈S} y_k / π_k`.
pub fn ht_total(sample: &SurveySample) -> f64 {
    sample.y.iter().zip(&sample.pi).map(|(y, p)| y / p).sum()
}

/// `ht_total / N`.
pub fn ht_mean(sample: &SurveySample, population_size: usize) -> Result<f64> {
    if population_size == 0 {
        return Err(Error::InvalidArgument("population size is zero".into()));
    }
    if population_size < sample.len() {
        return Err(Error::InvalidArgument(format!(
            "sample of {} exceeds population of {population_size}",
            sample.len()
        )));
    }
    Ok(ht_total(sample) / population_size as f64)
}

/// Unbiased variance estimate of the HT total under simple random sampling
/// without replacement: `N² (1 − n/N) s² / n`.
pub fn srs_ht_total_variance(sample: &SurveySample, population_size: usize) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two sampled units".into()));
    }
    if population_size < n {
        return Err(Error::InvalidArgument("sample exceeds population".into()));
    }
    let nf = n as f64;
    let big_n = population_size as f64;
    let mean = sample.y.iter().sum::<f64>() / nf;
    let s2 = sample.y.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(big_n * big_n * (1.0 - nf / big_n) * s2 / nf)
}

/// `r_SYN = xᵀβ`.
pub fn synthetic_rate(x: &[f64], beta: &[f64]) -> Result<f64> {
    if x.len() != beta.len() {
        return Err(Error::InvalidArgument(format!(
            "covariate length {} differs from coefficient length {}",
            x.len(),
            beta.len()
        )));
    }
    Ok(x.iter().zip(beta).map(|(a, b)| a * b).sum())
}

/// Least-squares coefficients via Householder QR.
pub fn fit_beta(design: &DMatrix<f64>, responses: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if responses.len() != rows {
        return Err(Error::InvalidArgument(format!(
            "{rows} design rows but {} responses",
            responses.len()
        )));
    }
    if cols == 0 || rows < cols {
        return Err(Error::InvalidArgument(format!(
            "design must have at least as many rows as columns, got {rows}x{cols}"
        )));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax().max(f64::MIN_POSITIVE);
    if r.diagonal().iter().any(|d| d.abs() <= scale * 1e-12 * rows as f64) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().tr_mul(responses);
    r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign)
}

/// Inputs to the composite small-area estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaeInputs {
    pub r_dir: f64,
    pub var_dir: f64,
    pub r_syn: f64,
    pub var_syn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaeEstimate {
    pub lambda: f64,
    pub r_sae: f64,
}

/// `λ = Var[r_DIR] / (Var[r_DIR] + Var[r_SYN])`, `r_SAE = (1−λ) r_DIR + λ r_SYN`.
///
/// The weight is applied exactly in this form: a noisier direct estimate
/// moves the composite toward the synthetic rate. Classical composite
/// estimators use MSEs here instead of variances.
pub fn sae_composite(inputs: &SaeInputs) -> Result<SaeEstimate> {
    let SaeInputs {
        r_dir,
        var_dir,
        r_syn,
        var_syn,
    } = *inputs;
    if !(var_dir >= 0.0 && var_syn >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variances must be non-negative, got {var_dir} and {var_syn}"
        )));
    }
    if var_dir + var_syn == 0.0 {
        return Err(Error::Degenerate("both variances are zero".into()));
    }
    let lambda = var_dir / (var_dir + var_syn);
    Ok(SaeEstimate {
        lambda,
        r_sae: (1.0 - lambda) * r_dir + lambda * r_syn,
    })
}

/// A sample file row: `id,y,pi`.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub y: f64,
    pub pi: f64,
}

/// Reads `id,y,pi` rows (with header). Ids are kept in file order.
pub fn read_sample_records<R: Read>(reader: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn load_sample(path: impl AsRef<Path>) -> Result<(Vec<String>, SurveySample)> {
    let records = read_sample_records(std::fs::File::open(path)?)?;
    let ids = records.iter().map(|r| r.id.clone()).collect();
    let sample = SurveySample::new(
        (0..records.len()).collect(),
        records.iter().map(|r| r.y).collect(),
        records.iter().map(|r| r.pi).collect(),
    )?;
    Ok((ids, sample))
}

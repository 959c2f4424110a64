//! The commands behind the `latcon` binary, usable as a library.
//!
//! Data files are comma-separated text. Every written table starts with `#`
//! provenance lines (tool version, seed, config hash); the fit summary is
//! TOML. Re-running a command with the same inputs and seed reproduces every
//! file byte for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bayes::{
    dic, hpd_interval, run_chain, ChainConfig, Dic, GmcarPosterior, PairedData, PlugIn,
    PosteriorDraws, PriorSpec,
};
use crate::concordance::spatial_concordance;
use crate::error::{Error, Result};
use crate::gmcar::{sample, GmcarParams};
use crate::lattice::{grid_lattice, load_adjacency, Lattice, SpatialStructure};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to fit one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub adjacency_path: PathBuf,
    pub adjacency_header: bool,
    pub data_path: PathBuf,
    /// Highest neighbor order in the linking matrix: 1, 2 or 3.
    pub model_order: usize,
    pub mu_prior_mean: f64,
    pub noise: bool,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adapt: bool,
    pub include_noise_in_coefficient: bool,
    pub swap: bool,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.model_order) {
            return Err(Error::InvalidArgument(format!(
                "model order must be 1, 2 or 3, got {}",
                self.model_order
            )));
        }
        for p in [&self.adjacency_path, &self.data_path] {
            if !p.is_file() {
                return Err(Error::InvalidArgument(format!("{} does not exist", p.display())));
            }
        }
        if !self.mu_prior_mean.is_finite() {
            return Err(Error::InvalidArgument("mu prior mean must be finite".into()));
        }
        Ok(())
    }

    fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            proposal_scales: None,
            adapt: self.adapt,
            initial: None,
            include_noise_in_coefficient: self.include_noise_in_coefficient,
        }
    }

    /// Hash of the settings and the contents of both input files.
    pub fn config_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(format!("{self:?}").replace(&self.output_dir.display().to_string(), ""));
        h.update(fs::read(&self.adjacency_path)?);
        h.update(fs::read(&self.data_path)?);
        Ok(hex::encode(&h.finalize()[..8]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hpd_lo: f64,
    pub hpd_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicSummary {
    pub dic: f64,
    pub d_bar: f64,
    pub p_d: f64,
    pub d_at_plugin: f64,
    pub plug_in: String,
}

impl From<Dic> for DicSummary {
    fn from(d: Dic) -> Self {
        Self {
            dic: d.dic,
            d_bar: d.d_bar,
            p_d: d.p_d,
            d_at_plugin: d.d_at_plugin,
            plug_in: match d.plug_in {
                PlugIn::TransformedMean => "transformed-mean".into(),
                PlugIn::Median => "median".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    fn header(&self) -> String {
        format!(
            "# {} {}\n# seed={}\n# config_hash={}\n",
            self.tool, self.version, self.seed, self.config_hash
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Acceptance {
    pub name: String,
    pub rate: f64,
}

/// Posterior summaries of one fit; written as `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultBundle {
    pub n_units: usize,
    pub model_order: usize,
    pub n_draws: usize,
    pub hpd_prob: f64,
    pub rho_sc: ParamSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_sc_with_noise: Option<ParamSummary>,
    pub dic: DicSummary,
    pub parameters: Vec<ParamSummary>,
    pub acceptance: Vec<Acceptance>,
    pub provenance: Provenance,
    pub config: RunConfig,
}

pub const HPD_PROB: f64 = 0.95;

pub fn summarize(name: &str, values: &[f64]) -> Result<ParamSummary> {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let (hpd_lo, hpd_hi) = hpd_interval(values, HPD_PROB)?;
    Ok(ParamSummary {
        name: name.into(),
        mean,
        sd,
        hpd_lo,
        hpd_hi,
    })
}

/// Reads `unit_id,rate1,rate2` (header required) and orders it by lattice index.
///
/// `rate1` is the conditioned sequence `X_1`; `swap` exchanges the columns.
pub fn load_paired_data(path: impl AsRef<Path>, lattice: &Lattice, swap: bool) -> Result<PairedData> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let n = lattice.n();
    let index: HashMap<&str, usize> = lattice
        .ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut x1 = vec![f64::NAN; n];
    let mut x2 = vec![f64::NAN; n];
    let mut seen = vec![false; n];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if record.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", record.len())));
        }
        let id = &record[0];
        let i = *index
            .get(id)
            .ok_or_else(|| Error::UnknownUnit(id.to_string()))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(parse_err(format!("unit {id} appears twice")));
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(format!("cannot parse rate {s:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite rate for unit {id}")));
            }
            if !(0.0..=1.0).contains(&v) {
                warn!("{}:{line}: rate {v} for unit {id} is outside [0, 1]", path.display());
            }
            Ok(v)
        };
        x1[i] = parse(&record[1])?;
        x2[i] = parse(&record[2])?;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "unit {} has no row in {}",
            lattice.ids()[i],
            path.display()
        )));
    }
    let (a, b) = if swap { (x2, x1) } else { (x1, x2) };
    PairedData::new(DVector::from_vec(a), DVector::from_vec(b))
}

fn write_draws(path: &Path, prov: &Provenance, draws: &PosteriorDraws) -> Result<()> {
    let mut out = prov.header();
    writeln!(out, "draw,{},log_posterior", draws.names.join(",")).unwrap();
    for (i, (row, lp)) in draws.rows.iter().zip(&draws.log_posterior).enumerate() {
        write!(out, "{i}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{lp}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_rho_sc(path: &Path, prov: &Provenance, draws: &PosteriorDraws) -> Result<()> {
    let mut out = prov.header();
    match &draws.rho_sc_with_noise {
        Some(noisy) => {
            out.push_str("draw,rho_sc,rho_sc_with_noise\n");
            for (i, (a, b)) in draws.rho_sc.iter().zip(noisy).enumerate() {
                writeln!(out, "{i},{a},{b}").unwrap();
            }
        }
        None => {
            out.push_str("draw,rho_sc\n");
            for (i, a) in draws.rho_sc.iter().enumerate() {
                writeln!(out, "{i},{a}").unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_trace(path: &Path, prov: &Provenance, draws: &PosteriorDraws) -> Result<()> {
    let mut out = prov.header();
    out.push_str("iteration,log_posterior\n");
    for (i, lp) in draws.trace.iter().enumerate() {
        writeln!(out, "{i},{lp}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

fn to_toml<T: Serialize>(value: &T, prov: &Provenance) -> Result<String> {
    let body = toml::to_string(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialise summary: {e}")))?;
    Ok(format!("{}{body}", prov.header()))
}

pub const SUMMARY_FILE: &str = "summary.toml";
pub const DRAWS_FILE: &str = "draws.csv";
pub const RHO_SC_FILE: &str = "rho_sc_draws.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Loads inputs, runs the chain and writes summary, draws, coefficient draws
/// and trace into the output directory.
pub fn cmd_fit(config: &RunConfig) -> Result<ResultBundle> {
    config.validate()?;
    let lattice = load_adjacency(&config.adjacency_path, config.adjacency_header)?;
    let data = load_paired_data(&config.data_path, &lattice, config.swap)?;
    let n_units = lattice.n();
    let structure = SpatialStructure::new(lattice, config.model_order)?;
    let prior = PriorSpec::with_mu_mean(config.mu_prior_mean);
    let posterior = GmcarPosterior::new(&structure, &data, config.model_order, config.noise, prior)?;
    info!(
        "fitting order-{} model on {n_units} units, {} iterations",
        config.model_order, config.iterations
    );
    let draws = run_chain(&posterior, &config.chain_config())?;
    let dic = dic(&draws, &posterior)?;

    let prov = Provenance {
        tool: "latcon".into(),
        version: VERSION.into(),
        seed: config.seed,
        config_hash: config.config_hash()?,
    };
    let parameters = draws
        .names
        .iter()
        .map(|name| summarize(name, &draws.column(name).expect("named column")))
        .collect::<Result<Vec<_>>>()?;
    let bundle = ResultBundle {
        n_units,
        model_order: config.model_order,
        n_draws: draws.len(),
        hpd_prob: HPD_PROB,
        rho_sc: summarize("rho_sc", &draws.rho_sc)?,
        rho_sc_with_noise: draws
            .rho_sc_with_noise
            .as_deref()
            .map(|v| summarize("rho_sc_with_noise", v))
            .transpose()?,
        dic: dic.into(),
        parameters,
        acceptance: draws
            .names
            .iter()
            .zip(&draws.acceptance)
            .map(|(name, &rate)| Acceptance {
                name: name.clone(),
                rate,
            })
            .collect(),
        provenance: prov.clone(),
        config: config.clone(),
    };
    let non_finite = bundle
        .parameters
        .iter()
        .chain(std::iter::once(&bundle.rho_sc))
        .any(|p| ![p.mean, p.sd, p.hpd_lo, p.hpd_hi].iter().all(|v| v.is_finite()));
    if non_finite {
        return Err(Error::Degenerate("posterior summary is not finite".into()));
    }

    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SUMMARY_FILE), to_toml(&bundle, &prov)?)?;
    write_draws(&dir.join(DRAWS_FILE), &prov, &draws)?;
    write_rho_sc(&dir.join(RHO_SC_FILE), &prov, &draws)?;
    write_trace(&dir.join(TRACE_FILE), &prov, &draws)?;
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicRow {
    pub model_order: usize,
    pub dic: f64,
    pub p_d: f64,
    pub selected: bool,
}

/// Flags the lowest DIC; ties go to the lowest order.
pub fn select_model(entries: &[(usize, f64)]) -> Vec<DicRow> {
    let best = entries
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.1 .0.cmp(&b.1 .0)))
        .map(|(i, _)| i);
    entries
        .iter()
        .enumerate()
        .map(|(i, &(model_order, dic))| DicRow {
            model_order,
            dic,
            p_d: f64::NAN,
            selected: Some(i) == best,
        })
        .collect()
}

/// Seed for the chain of a given model order, derived from the base seed.
pub fn derived_seed(base: u64, order: usize) -> u64 {
    // splitmix64
    let mut z = base.wrapping_add((order as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const COMPARE_FILE: &str = "compare.csv";

/// Fits each order into `<out>/order<k>/` and writes a DIC table.
///
/// The fits run on separate threads with seeds derived from `base.seed`.
pub fn cmd_compare(base: &RunConfig, orders: &[usize]) -> Result<Vec<DicRow>> {
    if orders.len() < 2 {
        return Err(Error::InvalidArgument("compare needs at least two model orders".into()));
    }
    let configs: Vec<RunConfig> = orders
        .iter()
        .map(|&k| RunConfig {
            model_order: k,
            seed: derived_seed(base.seed, k),
            output_dir: base.output_dir.join(format!("order{k}")),
            ..base.clone()
        })
        .collect();
    let results: Vec<Result<ResultBundle>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || cmd_fit(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });
    let bundles = results.into_iter().collect::<Result<Vec<_>>>()?;
    let entries: Vec<(usize, f64)> = bundles.iter().map(|b| (b.model_order, b.dic.dic)).collect();
    let mut rows = select_model(&entries);
    for (row, b) in rows.iter_mut().zip(&bundles) {
        row.p_d = b.dic.p_d;
    }
    let prov = Provenance {
        tool: "latcon".into(),
        version: VERSION.into(),
        seed: base.seed,
        config_hash: base.config_hash()?,
    };
    let mut out = prov.header();
    out.push_str("model_order,dic,p_d,selected\n");
    for r in &rows {
        writeln!(out, "{},{},{},{}", r.model_order, r.dic, r.p_d, r.selected).unwrap();
    }
    fs::create_dir_all(&base.output_dir)?;
    fs::write(base.output_dir.join(COMPARE_FILE), out)?;
    Ok(rows)
}

/// Where simulated data live.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LatticeSource {
    Grid { rows: usize, cols: usize },
    File { path: PathBuf, header: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    pub lattice: LatticeSource,
    pub rho1: f64,
    pub rho2: f64,
    pub eta: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub noise_prec1: Option<f64>,
    pub noise_prec2: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl SimulateConfig {
    pub fn params(&self) -> GmcarParams {
        let mut p = GmcarParams::new(
            self.rho1,
            self.rho2,
            self.eta.clone(),
            self.tau1,
            self.tau2,
            self.mu1,
            self.mu2,
        );
        p.noise_prec1 = self.noise_prec1;
        p.noise_prec2 = self.noise_prec2;
        p
    }
}

/// Ground truth written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub n_units: usize,
    pub rho1: f64,
    pub rho2: f64,
    pub eta: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub mu1: f64,
    pub mu2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_prec1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_prec2: Option<f64>,
    pub rho_sc: f64,
    pub seed: u64,
}

pub const SIM_DATA_FILE: &str = "data.csv";
pub const SIM_ADJACENCY_FILE: &str = "adjacency.csv";
pub const SIM_TRUTH_FILE: &str = "truth.toml";

/// Unit ids used for generated grids: `u0, u1, ...` in row-major order.
pub fn grid_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i}")).collect()
}

/// Draws one data set from the model and writes `data.csv`, `truth.toml`
/// and, for generated grids, `adjacency.csv`.
pub fn cmd_simulate(config: &SimulateConfig) -> Result<Truth> {
    let params = config.params();
    let (lattice, write_adjacency) = match &config.lattice {
        LatticeSource::Grid { rows, cols } => {
            let g = grid_lattice(*rows, *cols)?;
            let edges: Vec<_> = g.edges().collect();
            (Lattice::with_ids(grid_ids(g.n()), edges)?, true)
        }
        LatticeSource::File { path, header } => (load_adjacency(path, *header)?, false),
    };
    let structure = SpatialStructure::new(lattice, params.order().max(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (x1, x2) = sample(&params, &structure, &mut rng)?;
    let truth = Truth {
        n_units: structure.n(),
        rho1: params.rho1,
        rho2: params.rho2,
        eta: params.eta.clone(),
        tau1: params.tau1,
        tau2: params.tau2,
        mu1: config.mu1,
        mu2: config.mu2,
        noise_prec1: params.noise_prec1,
        noise_prec2: params.noise_prec2,
        rho_sc: spatial_concordance(&params, &structure)?,
        seed: config.seed,
    };

    let mut h = Sha256::new();
    h.update(format!("{:?}", config.lattice));
    h.update(format!("{params:?}"));
    let prov = Provenance {
        tool: "latcon".into(),
        version: VERSION.into(),
        seed: config.seed,
        config_hash: hex::encode(&h.finalize()[..8]),
    };
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let ids = structure.lattice().ids();
    let mut data = prov.header();
    data.push_str("unit_id,rate1,rate2\n");
    for i in 0..structure.n() {
        writeln!(data, "{},{},{}", ids[i], x1[i], x2[i]).unwrap();
    }
    fs::write(dir.join(SIM_DATA_FILE), data)?;
    if write_adjacency {
        let mut adj = prov.header();
        for (a, b) in structure.lattice().edges() {
            writeln!(adj, "{},{}", ids[a], ids[b]).unwrap();
        }
        fs::write(dir.join(SIM_ADJACENCY_FILE), adj)?;
    }
    fs::write(dir.join(SIM_TRUTH_FILE), to_toml(&truth, &prov)?)?;
    Ok(truth)
}

/// Reads one named column of a draws table, skipping `#` lines.
pub fn read_column(path: impl AsRef<Path>, column: &str) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let j = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {column:?} in {}", path.display())))?;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let v: f64 = record[j].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: record.position().map_or(0, |p| p.line() as usize),
            msg: format!("cannot parse {:?}", &record[j]),
        })?;
        values.push(v);
    }
    Ok(values)
}

/// Histogram density of a set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub mean: f64,
    pub hpd: Option<(f64, f64)>,
}

/// Bins the draws; the bin count defaults to the Freedman-Diaconis rule.
pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<PlotData> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no draws to bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("draws contain non-finite values".into()));
    }
    if bins == Some(0) {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let (min, max) = (sorted[0], sorted[m - 1]);
    let mean = values.iter().sum::<f64>() / m as f64;
    let hpd = hpd_interval(values, HPD_PROB).ok();
    let range = max - min;
    if range == 0.0 {
        return Ok(PlotData {
            bin_width: 1.0,
            centers: vec![min],
            densities: vec![1.0],
            mean,
            hpd,
        });
    }
    let k = bins.unwrap_or_else(|| {
        let q = |p: f64| sorted[((m - 1) as f64 * p).round() as usize];
        let fd = 2.0 * (q(0.75) - q(0.25)) * (m as f64).powf(-1.0 / 3.0);
        if fd > 0.0 {
            ((range / fd).ceil() as usize).clamp(1, 10_000)
        } else {
            ((m as f64).sqrt().ceil() as usize).max(1)
        }
    });
    let width = range / k as f64;
    let mut counts = vec![0usize; k];
    for v in &sorted {
        let b = (((v - min) / width) as usize).min(k - 1);
        counts[b] += 1;
    }
    Ok(PlotData {
        bin_width: width,
        centers: (0..k).map(|b| min + (b as f64 + 0.5) * width).collect(),
        densities: counts
            .iter()
            .map(|&c| c as f64 / (m as f64 * width))
            .collect(),
        mean,
        hpd,
    })
}

impl PlotData {
    pub fn density_table(&self) -> String {
        let mut out = String::from("bin_center,density\n");
        for (c, d) in self.centers.iter().zip(&self.densities) {
            writeln!(out, "{c},{d}").unwrap();
        }
        out
    }

    pub fn summary_table(&self, n_draws: usize) -> String {
        let (lo, hi) = self.hpd.unwrap_or((f64::NAN, f64::NAN));
        format!(
            "mean,hpd_lo,hpd_hi,n_draws,bin_width\n{},{lo},{hi},{n_draws},{}\n",
            self.mean, self.bin_width
        )
    }
}

pub const DENSITY_FILE: &str = "density.csv";
pub const DENSITY_SUMMARY_FILE: &str = "density_summary.csv";

/// Bins one column of a draws file. Writes `density.csv` and
/// `density_summary.csv` into `output_dir` when given.
pub fn cmd_plotdata(
    draws_path: impl AsRef<Path>,
    column: &str,
    bins: Option<usize>,
    output_dir: Option<&Path>,
) -> Result<PlotData> {
    let values = read_column(draws_path, column)?;
    let plot = histogram(&values, bins)?;
    if let Some(dir) = output_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(DENSITY_FILE), plot.density_table())?;
        fs::write(dir.join(DENSITY_SUMMARY_FILE), plot.summary_table(values.len()))?;
    }
    Ok(plot)
}

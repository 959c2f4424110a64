use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lattice_concordance::cli::{
    cmd_compare, cmd_fit, cmd_plotdata, cmd_simulate, LatticeSource, RunConfig, SimulateConfig,
};
use lattice_concordance::Error;

/// Spatial concordance between two sequences on the same areal units.
#[derive(Parser)]
#[command(name = "latcon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one GMCAR model and write posterior summaries and draws.
    Fit(FitArgs),
    /// Fit several linking orders and compare them by DIC.
    Compare {
        #[command(flatten)]
        fit: FitArgs,
        /// Orders to compare.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
    },
    /// Draw a synthetic data set from known parameters.
    Simulate(SimulateArgs),
    /// Bin a column of a draws table into a density table.
    PlotData {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long, default_value = "rho_sc")]
        column: String,
        /// Number of bins (default: Freedman-Diaconis).
        #[arg(long)]
        bins: Option<usize>,
        /// Write density.csv and density_summary.csv here instead of stdout.
        #[arg(long, env = "LATCON_OUT_DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct FitArgs {
    /// Edge list, one `ID1,ID2` pair per line.
    #[arg(long)]
    adjacency: PathBuf,
    /// The adjacency file has a header line.
    #[arg(long)]
    adjacency_header: bool,
    /// `unit_id,rate1,rate2` table with header; rate1 is the conditioned sequence.
    #[arg(long)]
    data: PathBuf,
    /// Highest neighbor order in the linking matrix.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    order: u8,
    #[arg(long, default_value_t = 30_000)]
    iterations: usize,
    #[arg(long, default_value_t = 15_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "LATCON_OUT_DIR")]
    out: PathBuf,
    /// Prior mean of both means.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu_prior_mean: f64,
    /// Also report the coefficient with noise variances in its denominator.
    #[arg(long)]
    include_noise_in_coefficient: bool,
    /// Treat rate2 as the conditioned sequence.
    #[arg(long)]
    swap: bool,
    /// Fit the latent GMCAR field without measurement noise.
    #[arg(long)]
    no_noise: bool,
    /// Keep proposal scales fixed during burn-in.
    #[arg(long)]
    no_adapt: bool,
}

impl FitArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            adjacency_path: self.adjacency.clone(),
            adjacency_header: self.adjacency_header,
            data_path: self.data.clone(),
            model_order: self.order as usize,
            mu_prior_mean: self.mu_prior_mean,
            noise: !self.no_noise,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            adapt: !self.no_adapt,
            include_noise_in_coefficient: self.include_noise_in_coefficient,
            swap: self.swap,
            output_dir: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Rook grid as ROWSxCOLS, e.g. 10x10.
    #[arg(long, conflicts_with = "adjacency", required_unless_present = "adjacency")]
    grid: Option<String>,
    #[arg(long)]
    adjacency: Option<PathBuf>,
    #[arg(long)]
    adjacency_header: bool,
    #[arg(long)]
    rho1: f64,
    #[arg(long)]
    rho2: f64,
    /// Linking coefficients eta0,eta1,...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    eta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    tau1: f64,
    #[arg(long, default_value_t = 1.0)]
    tau2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu2: f64,
    #[arg(long)]
    noise_prec1: Option<f64>,
    #[arg(long)]
    noise_prec2: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = "LATCON_OUT_DIR")]
    out: PathBuf,
}

fn parse_grid(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidArgument(format!("grid must look like ROWSxCOLS, got {s:?}"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit(args) => {
            let b = cmd_fit(&args.config())?;
            println!(
                "n_units={} order={} draws={} rho_sc_mean={:.4} hpd=({:.4}, {:.4}) dic={:.2}",
                b.n_units,
                b.model_order,
                b.n_draws,
                b.rho_sc.mean,
                b.rho_sc.hpd_lo,
                b.rho_sc.hpd_hi,
                b.dic.dic
            );
        }
        Command::Compare { fit, orders } => {
            let rows = cmd_compare(&fit.config(), &orders)?;
            println!("model_order,dic,p_d,selected");
            for r in rows {
                println!("{},{:.3},{:.3},{}", r.model_order, r.dic, r.p_d, r.selected);
            }
        }
        Command::Simulate(a) => {
            let lattice = match (&a.grid, &a.adjacency) {
                (Some(g), _) => {
                    let (rows, cols) = parse_grid(g)?;
                    LatticeSource::Grid { rows, cols }
                }
                (None, Some(p)) => LatticeSource::File {
                    path: p.clone(),
                    header: a.adjacency_header,
                },
                (None, None) => unreachable!("clap requires one lattice source"),
            };
            let truth = cmd_simulate(&SimulateConfig {
                lattice,
                rho1: a.rho1,
                rho2: a.rho2,
                eta: a.eta,
                tau1: a.tau1,
                tau2: a.tau2,
                mu1: a.mu1,
                mu2: a.mu2,
                noise_prec1: a.noise_prec1,
                noise_prec2: a.noise_prec2,
                seed: a.seed,
                output_dir: a.out,
            })?;
            println!("n_units={} rho_sc={}", truth.n_units, truth.rho_sc);
        }
        Command::PlotData {
            draws,
            column,
            bins,
            out,
        } => {
            let n = lattice_concordance::cli::read_column(&draws, &column)?.len();
            let plot = cmd_plotdata(&draws, &column, bins, out.as_deref())?;
            if out.is_none() {
                print!("{}", plot.density_table());
                for line in plot.summary_table(n).lines() {
                    println!("# {line}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latcon: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::{chi_square_uniform, hpd_oracle, CHI2_9DF_99};
use lattice_concordance::cli::{
    cmd_compare, cmd_fit, cmd_plotdata, cmd_simulate, read_column, LatticeSource, RunConfig,
    SimulateConfig, DRAWS_FILE, RHO_SC_FILE, SUMMARY_FILE, TRACE_FILE,
};
use lattice_concordance::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ADJACENCY: &str = "a,b\na,c\nb,d\nc,d\n";
const DATA: &str = "unit_id,rate1,rate2\na,0.10,0.11\nb,0.14,0.15\nc,0.09,0.07\nd,0.12,0.13\n";

fn fixture(dir: &Path, data: &str) -> RunConfig {
    fs::write(dir.join("adj.csv"), ADJACENCY).unwrap();
    fs::write(dir.join("data.csv"), data).unwrap();
    RunConfig {
        adjacency_path: dir.join("adj.csv"),
        adjacency_header: false,
        data_path: dir.join("data.csv"),
        model_order: 1,
        mu_prior_mean: 0.1,
        noise: true,
        iterations: 200,
        burn_in: 100,
        thin: 1,
        seed: 42,
        adapt: true,
        include_noise_in_coefficient: false,
        swap: false,
        output_dir: dir.join("out"),
    }
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1
}

#[test]
fn fit_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), DATA);
    let bundle = cmd_fit(&config).unwrap();
    assert_eq!(bundle.n_draws, 100);
    let out = &config.output_dir;
    for f in [SUMMARY_FILE, DRAWS_FILE, RHO_SC_FILE, TRACE_FILE] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert_eq!(data_rows(&out.join(DRAWS_FILE)), 100);
    assert_eq!(data_rows(&out.join(RHO_SC_FILE)), 100);
    assert_eq!(data_rows(&out.join(TRACE_FILE)), 200);
    let summary = fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
    assert!(summary.starts_with("# latcon "));
    assert!(summary.contains("# seed=42"));
    let parsed: toml::Table = summary.parse().unwrap();
    assert_eq!(parsed["n_draws"].as_integer(), Some(100));

    let rho = read_column(out.join(RHO_SC_FILE), "rho_sc").unwrap();
    let (lo, hi) = hpd_oracle(&rho, 0.95);
    let table = parsed["rho_sc"].as_table().unwrap();
    assert_eq!(table["hpd_lo"].as_float(), Some(lo));
    assert_eq!(table["hpd_hi"].as_float(), Some(hi));
    assert_eq!(bundle.rho_sc.hpd_lo, lo);
    assert!(rho.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = fixture(dir.path(), DATA);
    cmd_fit(&config).unwrap();
    let first: Vec<Vec<u8>> = [DRAWS_FILE, SUMMARY_FILE, RHO_SC_FILE]
        .iter()
        .map(|f| fs::read(config.output_dir.join(f)).unwrap())
        .collect();
    config.output_dir = dir.path().join("again");
    cmd_fit(&config).unwrap();
    for (f, bytes) in [DRAWS_FILE, SUMMARY_FILE, RHO_SC_FILE].iter().zip(first) {
        assert_eq!(fs::read(config.output_dir.join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn unknown_unit_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), &DATA.replace("d,0.12", "e,0.12"));
    assert!(matches!(cmd_fit(&config), Err(Error::UnknownUnit(id)) if id == "e"));
}

#[test]
fn missing_unit_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), &DATA.replace("d,0.12,0.13\n", ""));
    let err = cmd_fit(&config).unwrap_err();
    assert!(err.is_input_error());
}

#[test]
fn compare_selects_one_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), DATA);
    let rows = cmd_compare(&config, &[1, 2]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows.iter().filter(|r| r.selected).count(), 1);
    assert!(config.output_dir.join("order2").join(SUMMARY_FILE).is_file());
    assert!(config.output_dir.join("compare.csv").is_file());
}

fn simulate_config(out: PathBuf, eta: Vec<f64>, seed: u64) -> SimulateConfig {
    SimulateConfig {
        lattice: LatticeSource::Grid { rows: 4, cols: 5 },
        rho1: 0.5,
        rho2: 0.4,
        eta,
        tau1: 1.0,
        tau2: 1.0,
        mu1: 0.0,
        mu2: 0.0,
        noise_prec1: Some(100.0),
        noise_prec2: None,
        seed,
        output_dir: out,
    }
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let truth = cmd_simulate(&simulate_config(sim.clone(), vec![0.0, 0.0], 3)).unwrap();
    assert_eq!(truth.rho_sc, 0.0);
    assert_eq!(truth.n_units, 20);
    let again = dir.path().join("sim2");
    cmd_simulate(&simulate_config(again.clone(), vec![0.0, 0.0], 3)).unwrap();
    assert_eq!(
        fs::read(sim.join("data.csv")).unwrap(),
        fs::read(again.join("data.csv")).unwrap()
    );

    let correlated = cmd_simulate(&simulate_config(dir.path().join("c"), vec![0.8, 0.2], 3)).unwrap();
    assert!(correlated.rho_sc > 0.0 && correlated.rho_sc < 1.0);

    let config = RunConfig {
        adjacency_path: sim.join("adjacency.csv"),
        adjacency_header: true,
        data_path: sim.join("data.csv"),
        model_order: 1,
        mu_prior_mean: 0.0,
        noise: true,
        iterations: 400,
        burn_in: 200,
        thin: 2,
        seed: 1,
        adapt: true,
        include_noise_in_coefficient: true,
        swap: true,
        output_dir: dir.path().join("fit"),
    };
    let bundle = cmd_fit(&config).unwrap();
    assert_eq!(bundle.n_units, 20);
    assert_eq!(bundle.n_draws, 100);
    assert!(bundle.rho_sc_with_noise.is_some());
}

#[test]
fn plot_data_of_uniform_draws_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut body = String::from("# latcon test\ndraw,rho_sc\n");
    let m = 20_000;
    for i in 0..m {
        body.push_str(&format!("{i},{}\n", rng.random_range(-1.0..1.0)));
    }
    fs::write(&path, body).unwrap();
    let out = dir.path().join("plot");
    let plot = cmd_plotdata(&path, "rho_sc", Some(10), Some(&out)).unwrap();
    let counts: Vec<usize> = plot
        .densities
        .iter()
        .map(|d| (d * plot.bin_width * m as f64).round() as usize)
        .collect();
    assert_eq!(counts.iter().sum::<usize>(), m);
    assert!(chi_square_uniform(&counts) < CHI2_9DF_99);
    assert!(out.join("density.csv").is_file());
    assert!(out.join("density_summary.csv").is_file());
}

fn latcon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latcon"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), DATA);
    let base = |data: &Path| {
        let mut c = latcon();
        c.args(["fit", "--adjacency"])
            .arg(&config.adjacency_path)
            .arg("--data")
            .arg(data)
            .args(["--iterations", "120", "--burn-in", "60", "--seed", "9"])
            .args(["--mu-prior-mean", "0.1", "--out"])
            .arg(dir.path().join("bin_out"));
        c
    };
    let ok = base(&config.data_path).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("bin_out").join(SUMMARY_FILE).is_file());

    let bad_data = dir.path().join("bad.csv");
    fs::write(&bad_data, DATA.replace("d,0.12", "zz,0.12")).unwrap();
    let bad = base(&bad_data).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("zz"));

    let usage = latcon().args(["fit", "--order", "4"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

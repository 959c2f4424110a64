mod common;

use common::*;
use lattice_concordance::bayes::{
    dic, gelman_rubin, hpd_interval, log_posterior, log_prior, run_chain, run_chains,
    run_sampler, ChainConfig, GmcarPosterior, LogTarget, PairedData, PlugIn, PriorSpec,
    SamplerSettings, Transform,
};
use lattice_concordance::gmcar::{sample, GmcarParams};
use lattice_concordance::lattice::{grid_lattice, Lattice, SpatialStructure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF, Gamma};

/// Independent Gamma(3, rate 2) and Beta(2, 5) coordinates.
struct Toy {
    transforms: Vec<Transform>,
}

impl LogTarget for Toy {
    fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let (a, b) = (theta[0], theta[1]);
        if !(a > 0.0) || !(b > 0.0 && b < 1.0) {
            return f64::NEG_INFINITY;
        }
        2.0 * a.ln() - 2.0 * a + b.ln() + 4.0 * (1.0 - b).ln()
    }
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn toy_target_marginals_pass_ks() {
    let toy = Toy {
        transforms: vec![Transform::Log, Transform::Logit { lo: 0.0, hi: 1.0 }],
    };
    let settings = SamplerSettings {
        iterations: 2_010_000,
        burn_in: 10_000,
        thin: 20,
        seed: 2024,
        adapt: true,
    };
    let out = run_sampler(&toy, vec![1.0, 0.5], vec![1.0, 1.0], &settings).unwrap();
    assert_eq!(out.rows.len(), 100_000);
    let critical = 1.628 / (out.rows.len() as f64).sqrt();
    let gamma = Gamma::new(3.0, 2.0).unwrap();
    let beta = Beta::new(2.0, 5.0).unwrap();
    let d1 = ks_statistic(out.rows.iter().map(|r| r[0]).collect(), |x| gamma.cdf(x));
    let d2 = ks_statistic(out.rows.iter().map(|r| r[1]).collect(), |x| beta.cdf(x));
    assert!(d1 < critical, "gamma KS {d1} >= {critical}");
    assert!(d2 < critical, "beta KS {d2} >= {critical}");
    for a in out.acceptance {
        assert!((0.3..0.6).contains(&a), "acceptance {a}");
    }
}

fn simulated(rows: usize, cols: usize, seed: u64) -> (Lattice, SpatialStructure, PairedData, GmcarParams) {
    let g = grid_lattice(rows, cols).unwrap();
    let s = SpatialStructure::new(g.clone(), 2).unwrap();
    let truth = GmcarParams::new(0.6, 0.5, vec![0.5, 0.2], 4.0, 4.0, 1.0, 1.2).with_noise(50.0, 50.0);
    let (x1, x2) = sample(&truth, &s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (g, s, PairedData::new(x1, x2).unwrap(), truth)
}

#[test]
fn log_posterior_is_dense_likelihood_plus_prior() {
    let (g, s, data, _) = simulated(3, 3, 1);
    let spec = PriorSpec::with_mu_mean(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let mut p = random_params(&mut rng, 2, true);
        p.rho1 = p.rho1.abs();
        p.rho2 = p.rho2.abs();
        let want = oracle_log_density(&g, &p, &data.x1, &data.x2) + log_prior(&p, &spec);
        let got = log_posterior(&p, &data, &s, &spec);
        assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
    }
}

#[test]
fn moving_mean_away_from_data_lowers_posterior() {
    let (_, s, data, _) = simulated(3, 3, 6);
    let spec = PriorSpec::with_mu_mean(0.0);
    let m1 = data.x1.mean();
    let m2 = data.x2.mean();
    let at = |d1: f64, d2: f64| {
        let p = GmcarParams::new(0.0, 0.0, vec![0.0, 0.0], 2.0, 2.0, m1 + d1, m2 + d2);
        log_posterior(&p, &data, &s, &spec)
    };
    let base = at(0.0, 0.0);
    assert!(base.is_finite());
    for d in [0.5, 1.0, -0.7] {
        assert!(at(d, 0.0) < base);
        assert!(at(0.0, d) < base);
    }
}

#[test]
fn prior_monotone_in_precision_tail() {
    // Gamma(0.1, 0.1) density decreases on (0, ∞).
    let spec = PriorSpec::with_mu_mean(0.0);
    let base = GmcarParams::new(0.5, 0.5, vec![0.0, 0.0], 1.0, 1.0, 0.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..40 {
        let mut p = base.clone();
        p.tau1 = 0.05 * k as f64;
        let lp = log_prior(&p, &spec);
        assert!(lp < last);
        last = lp;
    }
}

#[test]
fn dic_matches_dense_recomputation() {
    let (g, s, data, _) = simulated(3, 3, 2);
    let post = GmcarPosterior::new(&s, &data, 1, true, PriorSpec::with_mu_mean(1.0)).unwrap();
    let config = ChainConfig {
        iterations: 3000,
        burn_in: 1500,
        seed: 4,
        ..ChainConfig::default()
    };
    let draws = run_chain(&post, &config).unwrap();
    let d = dic(&draws, &post).unwrap();
    let dev = |p: &GmcarParams| -2.0 * oracle_log_density(&g, p, &data.x1, &data.x2);
    let m = draws.len() as f64;
    let d_bar: f64 = (0..draws.len()).map(|i| dev(&draws.params(i))).sum::<f64>() / m;
    let col_mean = |name: &str, f: fn(f64) -> f64, finv: fn(f64) -> f64| {
        finv(draws.column(name).unwrap().iter().map(|&v| f(v)).sum::<f64>() / m)
    };
    let logit = |x: f64| (x / (1.0 - x)).ln();
    let expit = |y: f64| 1.0 / (1.0 + (-y).exp());
    let id = |x: f64| x;
    let bar = GmcarParams::new(
        col_mean("rho1", logit, expit),
        col_mean("rho2", logit, expit),
        vec![col_mean("eta0", id, id), col_mean("eta1", id, id)],
        col_mean("tau1", f64::ln, f64::exp),
        col_mean("tau2", f64::ln, f64::exp),
        col_mean("mu1", id, id),
        col_mean("mu2", id, id),
    )
    .with_noise(col_mean("nu1", f64::ln, f64::exp), col_mean("nu2", f64::ln, f64::exp));
    let d_hat = dev(&bar);
    assert_eq!(d.plug_in, PlugIn::TransformedMean);
    assert!((d.d_bar - d_bar).abs() <= 1e-8 * d_bar.abs().max(1.0));
    assert!((d.d_at_plugin - d_hat).abs() <= 1e-6 * d_hat.abs().max(1.0));
    assert!((d.dic - (2.0 * d_bar - d_hat)).abs() <= 1e-6 * d_bar.abs().max(1.0));
    assert!(d.p_d > 0.0);
}

#[test]
fn chains_are_reproducible_and_seed_dependent() {
    let (_, s, data, _) = simulated(2, 3, 3);
    let post = GmcarPosterior::new(&s, &data, 2, true, PriorSpec::with_mu_mean(1.0)).unwrap();
    let config = ChainConfig {
        iterations: 600,
        burn_in: 300,
        thin: 3,
        seed: 77,
        include_noise_in_coefficient: true,
        ..ChainConfig::default()
    };
    let a = run_chain(&post, &config).unwrap();
    let b = run_chain(&post, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 100);
    let c = run_chain(&post, &ChainConfig { seed: 78, ..config }).unwrap();
    assert_ne!(a.rows, c.rows);
    for (x, y) in a.rho_sc.iter().zip(a.rho_sc_with_noise.as_ref().unwrap()) {
        assert!(x.abs() <= 1.0 && y.abs() <= x.abs() + 1e-12);
    }
}

#[test]
fn adapted_acceptance_on_two_units() {
    let g = Lattice::new(2, [(0, 1)]).unwrap();
    let s = SpatialStructure::new(g, 1).unwrap();
    let data = PairedData::new(
        nalgebra::DVector::from_vec(vec![0.101, 0.099]),
        nalgebra::DVector::from_vec(vec![0.100, 0.102]),
    )
    .unwrap();
    let post = GmcarPosterior::new(&s, &data, 1, false, PriorSpec::with_mu_mean(0.1)).unwrap();
    let draws = run_chain(
        &post,
        &ChainConfig {
            iterations: 20_000,
            burn_in: 10_000,
            seed: 1,
            ..ChainConfig::default()
        },
    )
    .unwrap();
    for (name, a) in draws.names.iter().zip(&draws.acceptance) {
        assert!((0.1..=0.7).contains(a), "{name}: {a}");
    }
}

#[test]
fn independent_chains_agree() {
    let (_, s, data, _) = simulated(3, 3, 5);
    let post = GmcarPosterior::new(&s, &data, 1, false, PriorSpec::with_mu_mean(1.0)).unwrap();
    let config = ChainConfig {
        iterations: 20_000,
        burn_in: 5_000,
        ..ChainConfig::default()
    };
    let chains = run_chains(&post, &config, &[1, 2, 3]).unwrap();
    let mu: Vec<Vec<f64>> = chains.iter().map(|c| c.column("mu1").unwrap()).collect();
    let r_hat = gelman_rubin(&mu).unwrap();
    assert!(r_hat < 1.1, "R-hat {r_hat}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hpd_matches_oracle(
        xs in proptest::collection::vec(-50.0f64..50.0, 20..400),
        prob in 0.5f64..0.99,
    ) {
        prop_assert_eq!(hpd_interval(&xs, prob).unwrap(), hpd_oracle(&xs, prob));
    }

    #[test]
    fn hpd_with_ties_matches_oracle(
        xs in proptest::collection::vec(0u8..6, 20..200),
    ) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        prop_assert_eq!(hpd_interval(&xs, 0.9).unwrap(), hpd_oracle(&xs, 0.9));
    }
}

#[test]
fn hpd_rejects_short_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let xs: Vec<f64> = (0..19).map(|_| rng.random()).collect();
    assert!(hpd_interval(&xs, 0.95).is_err());
}

//! Independent reference computations shared by the integration tests.
//!
//! Everything here is built directly from the edge list with dense linear
//! algebra, without going through the library's structures.
#![allow(dead_code)]

use std::collections::VecDeque;

use lattice_concordance::gmcar::GmcarParams;
use lattice_concordance::lattice::Lattice;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn adjacency(lattice: &Lattice) -> DMatrix<f64> {
    let n = lattice.n();
    let mut w = DMatrix::zeros(n, n);
    for (a, b) in lattice.edges() {
        w[(a, b)] = 1.0;
        w[(b, a)] = 1.0;
    }
    w
}

/// Indicator of shortest-path distance exactly `order`.
pub fn distance_shell(lattice: &Lattice, order: usize) -> DMatrix<f64> {
    let w = adjacency(lattice);
    let n = lattice.n();
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        let mut d = vec![usize::MAX; n];
        d[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if w[(u, v)] == 1.0 && d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for v in 0..n {
            if d[v] == order {
                out[(s, v)] = 1.0;
            }
        }
    }
    out
}

fn car_precision(w: &DMatrix<f64>, rho: f64, tau: f64) -> DMatrix<f64> {
    let n = w.nrows();
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| w.row(i).sum()));
    (d - w * rho) * tau
}

/// Joint covariance of the latent pair, by numerically inverting the joint
/// precision implied by the conditional factorisation.
pub fn oracle_latent_covariance(lattice: &Lattice, p: &GmcarParams) -> DMatrix<f64> {
    let n = lattice.n();
    let w = adjacency(lattice);
    let q1 = car_precision(&w, p.rho1, p.tau1);
    let q2 = car_precision(&w, p.rho2, p.tau2);
    let mut a = DMatrix::identity(n, n) * p.eta[0];
    for (j, e) in p.eta.iter().enumerate().skip(1) {
        a += distance_shell(lattice, j) * *e;
    }
    let mut q = DMatrix::zeros(2 * n, 2 * n);
    q.view_mut((0, 0), (n, n)).copy_from(&q1);
    let off = -(&q1 * &a);
    q.view_mut((0, n), (n, n)).copy_from(&off);
    q.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
    q.view_mut((n, n), (n, n)).copy_from(&(q2 + a.transpose() * &q1 * &a));
    q.lu().try_inverse().expect("joint precision is singular")
}

pub fn oracle_covariance(lattice: &Lattice, p: &GmcarParams) -> DMatrix<f64> {
    let mut sigma = oracle_latent_covariance(lattice, p);
    let n = lattice.n();
    for i in 0..n {
        if let Some(v) = p.noise_prec1 {
            sigma[(i, i)] += 1.0 / v;
        }
        if let Some(v) = p.noise_prec2 {
            sigma[(n + i, n + i)] += 1.0 / v;
        }
    }
    sigma
}

pub fn mean_vector(p: &GmcarParams, n: usize) -> DVector<f64> {
    let m1 = p.mu1.to_vector(n).unwrap();
    let m2 = p.mu2.to_vector(n).unwrap();
    DVector::from_iterator(2 * n, m1.iter().chain(m2.iter()).copied())
}

/// Dense multivariate normal log density via LU.
pub fn oracle_log_density(
    lattice: &Lattice,
    p: &GmcarParams,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
) -> f64 {
    let n = lattice.n();
    let sigma = oracle_covariance(lattice, p);
    let x = DVector::from_iterator(2 * n, x1.iter().chain(x2.iter()).copied());
    let r = x - mean_vector(p, n);
    let lu = sigma.clone().lu();
    let log_det = lu.determinant().ln();
    let sol = lu.solve(&r).unwrap();
    -0.5 * (2.0 * n as f64 * LN_2PI + log_det + r.dot(&sol))
}

/// Random parameters inside the joint-validity region.
pub fn random_params<R: Rng>(rng: &mut R, order: usize, noise: bool) -> GmcarParams {
    let eta: Vec<f64> = (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = GmcarParams::new(
        rng.random_range(-0.95..0.95),
        rng.random_range(-0.95..0.95),
        eta,
        rng.random_range(0.2..5.0),
        rng.random_range(0.2..5.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    if noise {
        p.with_noise(rng.random_range(1.0..50.0), rng.random_range(1.0..50.0))
    } else {
        p
    }
}

/// Scans every pair of order statistics holding at least `prob·m` draws
/// and keeps the narrowest, earliest on ties.
pub fn hpd_oracle(samples: &[f64], prob: f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    let need = prob * m as f64 - 1e-9;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..m {
        for j in i..m {
            if ((j - i + 1) as f64) < need {
                continue;
            }
            let w = s[j] - s[i];
            if w < best.0 {
                best = (w, i, j);
            }
            break;
        }
    }
    (s[best.1], s[best.2])
}

/// Chi-square statistic of counts against equal expected frequencies.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Upper 1% point of chi-square with nine degrees of freedom.
pub const CHI2_9DF_99: f64 = 21.666;

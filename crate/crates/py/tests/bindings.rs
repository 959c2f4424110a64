use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(latcon::latcon)(py);
        let globals = PyDict::new(py);
        globals.set_item("latcon", module).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.display(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn covariance_and_concordance() {
    run(c"
g = latcon.Lattice.grid(3, 3)
assert g.n == 9 and len(g.edges) == 12
s = latcon.SpatialStructure(g, 2)
p = latcon.GmcarParams(0.5, 0.4, [0.4, 0.1, 0.05], 1.0, 1.0)
b = latcon.covariance_blocks(p, s)
assert len(b['sigma12']) == 9
num = 2 * sum(map(sum, b['sigma12']))
den = sum(map(sum, b['sigma11'])) + sum(map(sum, b['sigma22']))
rho = latcon.spatial_concordance(p, s)
assert abs(rho - num / den) < 1e-12, rho
est, se = latcon.mc_concordance(p, s, 20000, 3)
assert abs(est - rho) < 5 * se
x1, x2 = latcon.sample(p, s, 7)
assert latcon.sample(p, s, 7) == (x1, x2)
import math
assert math.isfinite(latcon.log_density(x1, x2, p, s))
");
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
try:
    latcon.GmcarParams(1.5, 0.4, [0.4], 1.0, 1.0)
    raise AssertionError('accepted rho outside (-1, 1)')
except ValueError:
    pass
try:
    latcon.Lattice(3, [(0, 1)])
    raise AssertionError('accepted an isolated unit')
except ValueError as e:
    assert '2' in str(e)
try:
    latcon.hpd_interval([0.0] * 5)
    raise AssertionError('accepted a short sample')
except ValueError:
    pass
");
}

#[test]
fn fit_and_survey() {
    run(c"
g = latcon.Lattice.grid(3, 3)
s = latcon.SpatialStructure(g, 1)
truth = latcon.GmcarParams(0.5, 0.4, [0.6, 0.1], 4.0, 4.0, 1.0, 1.0)
x1, x2 = latcon.sample(truth, s, 1)
f = latcon.fit(s, x1, x2, order=1, noise=False, mu_prior_mean=1.0,
               iterations=600, burn_in=300, seed=5)
assert len(f) == 300 and f.names[0] == 'rho1'
assert len(f.rho_sc) == 300 and all(-1 <= r <= 1 for r in f.rho_sc)
lo, hi = latcon.hpd_interval(f.rho_sc)
assert lo <= hi
assert f.column('mu1')[0] == f.draws[0][-2]
assert latcon.ht_total([1.0, 2.0], [0.5, 0.25]) == 10.0
lam, r = latcon.sae_composite(0.2, 0.01, 0.3, 0.03)
assert abs(lam - 0.25) < 1e-12 and abs(r - 0.225) < 1e-12
beta = latcon.fit_beta([[1, 0], [1, 1], [1, 2]], [1.0, 3.0, 5.0])
assert abs(beta[0] - 1) < 1e-12 and abs(beta[1] - 2) < 1e-12
");
}

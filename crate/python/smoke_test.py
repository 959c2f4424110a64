"""Smoke test for the `latcon` Python extension.

Build and install the extension first:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/latcon-*.whl

then run `python python/smoke_test.py`.
"""

import math

import numpy as np

import latcon


def main():
    grid = latcon.Lattice.grid(5, 5)
    structure = latcon.SpatialStructure(grid, 2)
    truth = latcon.GmcarParams(0.5, 0.4, [0.4, 0.1], 1.0, 1.0, noise_prec1=50.0, noise_prec2=50.0)

    blocks = {k: np.asarray(v) for k, v in latcon.covariance_blocks(truth, structure).items()}
    sigma = np.asarray(latcon.joint_covariance(truth, structure))
    n = grid.n
    assert np.allclose(sigma[:n, n:], blocks["sigma12"])
    assert np.all(np.linalg.eigvalsh(sigma) > 0)

    rho = latcon.spatial_concordance(truth, structure)
    expected = 2 * blocks["sigma12"].sum() / (blocks["sigma11"].sum() + blocks["sigma22"].sum())
    assert math.isclose(rho, expected, rel_tol=1e-10)

    x1, x2 = latcon.sample(truth, structure, seed=11)
    x = np.concatenate([x1, x2])
    _, logdet = np.linalg.slogdet(sigma)
    dense = -0.5 * (2 * n * math.log(2 * math.pi) + logdet + x @ np.linalg.solve(sigma, x))
    assert math.isclose(latcon.log_density(x1, x2, truth, structure), dense, rel_tol=1e-8)

    fit = latcon.fit(structure, x1, x2, order=1, mu_prior_mean=0.0,
                     iterations=4000, burn_in=2000, seed=3)
    lo, hi = latcon.hpd_interval(fit.rho_sc)
    print(f"true rho_sc {rho:.3f}; posterior mean {np.mean(fit.rho_sc):.3f}, "
          f"95% HPD ({lo:.3f}, {hi:.3f}); DIC {fit.dic:.2f}")

    lam, r_sae = latcon.sae_composite(0.21, 0.002, 0.18, 0.001)
    assert 0.18 <= r_sae <= 0.21 and 0 <= lam <= 1
    print("smoke test passed")


if __name__ == "__main__":
    main()

import math
import os
import subprocess
import sys
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocre import ebthresh
from oracles import grid_weight, oracle_cdf, oracle_marginal, oracle_median
from pocre.ebthresh import (
    ebayes_shrink,
    estimate_sigma,
    estimate_weight,
    posterior_median,
    threshold_of,
    universal_weight,
)

# --------------------------------------------------------------------------- #
# estimate_sigma
# --------------------------------------------------------------------------- #


def test_sigma_unit_quartile():
    q = NormalDist().inv_cdf(0.75)
    assert abs(estimate_sigma([0.6744898, -0.6744898, 0.6744898]) - 0.6744898 / q) < 1e-12
    assert estimate_sigma([0.6744898, -0.6744898, 0.6744898]) == pytest.approx(1.0, abs=1e-6)


def test_sigma_zero_vector():
    assert estimate_sigma(np.zeros(4)) == 0.0


def test_sigma_even_length_uses_middle_mean():
    z = np.array([1.0, -2.0, 3.0, -4.0])
    assert estimate_sigma(z) == 2.5 / NormalDist().inv_cdf(0.75)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40), st.floats(0.01, 100))
def test_sigma_formula_and_homogeneity(vals, c):
    z = np.array(vals)
    if np.abs(z).max() < np.finfo(float).eps:
        assert estimate_sigma(z) == 0.0
        return
    direct = float(np.median(np.abs(z))) / NormalDist().inv_cdf(0.75)
    assert estimate_sigma(z) == pytest.approx(direct, rel=1e-15, abs=0)
    assert estimate_sigma(c * z) == pytest.approx(c * estimate_sigma(z), rel=1e-12, abs=1e-300)


# --------------------------------------------------------------------------- #
# marginal density and weights
# --------------------------------------------------------------------------- #


@pytest.mark.parametrize("z", [0.0, 1e-4, 0.3, 1.0, 2.5, 6.0, -3.0])
def test_marginal_matches_quadrature(z):
    g = ebthresh.marginal_density(z, 1.0)
    assert g == pytest.approx(oracle_marginal(z), rel=1e-9)


def test_universal_weight_gives_universal_threshold():
    for p in (10, 100, 1000, 22690):
        assert threshold_of(universal_weight(p)) == pytest.approx(math.sqrt(2 * math.log(p)), abs=1e-8)
    assert universal_weight(1) == 1.0


def test_weight_small_inputs_hit_lower_bound(rng):
    z = rng.uniform(-0.2, 0.2, size=100)
    w_min = universal_weight(100)
    assert estimate_weight(z) == w_min
    assert grid_weight(z, w_min) == pytest.approx(w_min, abs=1e-12)


def test_weight_single_zero():
    assert estimate_weight(np.zeros(1)) == universal_weight(1)
    assert estimate_weight(np.zeros(1), w_min=0.05) == 0.05


def test_weight_mixture_matches_grid(rng):
    z = np.concatenate([rng.normal(0, 0.3, 90), rng.normal(6, 0.3, 10)])
    w_min = universal_weight(z.size)
    assert abs(estimate_weight(z) - grid_weight(z, w_min)) < 1e-3


def test_weight_twenty_random_inputs_match_grid():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = int(rng.integers(20, 60))
        frac = rng.uniform(0, 0.4)
        signal = rng.random(p) < frac
        z = rng.standard_normal(p) + signal * rng.normal(0, 5, p)
        w_min = universal_weight(p)
        assert abs(estimate_weight(z) - grid_weight(z, w_min)) < 1e-3


# --------------------------------------------------------------------------- #
# posterior median and threshold
# --------------------------------------------------------------------------- #


def test_median_at_zero():
    for w in (0.01, 0.5, 1.0):
        assert posterior_median(0.0, w) == 0.0


def test_median_full_weight_z5():
    m = posterior_median(5.0, 1.0)
    assert 4.0 < m < 5.0
    assert abs(m - oracle_median(5.0, 1.0)) < 1e-6
    assert ebthresh.posterior_cdf(m, 5.0, 1.0) == pytest.approx(0.5, abs=1e-9)


def test_median_half_weight_z1_is_zero():
    assert threshold_of(0.5) > 1.0
    assert posterior_median(1.0, 0.5) == 0.0
    assert oracle_median(1.0, 0.5) == 0.0


def test_posterior_cdf_matches_quadrature():
    for z, w, m in [(2.0, 0.3, 1.1), (-3.0, 0.7, -2.0), (4.0, 0.05, 0.0), (1.5, 1.0, -0.5)]:
        assert ebthresh.posterior_cdf(m, z, w) == pytest.approx(oracle_cdf(m, z, w), abs=1e-10)


def test_median_random_pairs_match_oracle():
    rng = np.random.default_rng(99)
    for _ in range(25):
        z = float(rng.uniform(-8, 8))
        w = float(rng.uniform(0.01, 1.0))
        assert abs(posterior_median(z, w) - oracle_median(z, w)) < 1e-6


def test_threshold_monotone_and_boundary():
    assert threshold_of(1.0) == 0.0
    assert threshold_of(1.0) < threshold_of(0.1)
    taus = [threshold_of(w) for w in np.linspace(0.01, 1.0, 50)]
    assert all(a >= b for a, b in zip(taus, taus[1:]))
    for w in (0.1, 0.5, 0.9):
        tau = threshold_of(w)
        assert posterior_median(tau - 1e-6, w) == 0.0
        assert posterior_median(tau + 1e-3, w) != 0.0


def test_invalid_weight_rejected():
    for w in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            posterior_median(1.0, w)
        with pytest.raises(ValueError):
            threshold_of(w)


@pytest.mark.parametrize("w", [0.02, 0.2, 0.6, 1.0])
def test_thresholding_laws(w):
    z = np.linspace(-10, 10, 1001)
    m = posterior_median(z, w)
    assert np.all(np.diff(m) >= 0)
    assert np.all(np.abs(m) <= np.abs(z))
    assert np.max(np.abs(posterior_median(-z, w) + m)) <= 1e-9
    tau = threshold_of(w)
    assert np.array_equal(m == 0, np.abs(z) <= tau)


@settings(max_examples=100, deadline=None)
@given(st.floats(-30, 30, allow_nan=False), st.floats(1e-3, 1.0))
def test_median_shrinks_and_is_odd(z, w):
    m = posterior_median(z, w)
    assert abs(m) <= abs(z)
    assert abs(posterior_median(-z, w) + m) <= 1e-9
    assert (m == 0) == (abs(z) <= threshold_of(w))


# --------------------------------------------------------------------------- #
# ebayes_shrink
# --------------------------------------------------------------------------- #


def test_shrink_zero_vector():
    r = ebayes_shrink(np.zeros(10), 0.9)
    assert r.all_zero and not np.any(r.mu_hat) and r.sigma_hat == 0.0


def test_shrink_one_spike(rng):
    z = rng.standard_normal(200) * 1e-3
    z[17] = 100 * estimate_sigma(z)
    r = ebayes_shrink(z, 0.9)
    assert list(r.support) == [17]
    assert not r.all_zero
    # the spike's threshold decision composes from the three pieces
    zs = z / (0.9 * r.sigma_hat)
    assert r.w_hat == estimate_weight(zs)
    assert np.all((r.mu_hat == 0) == (np.abs(zs) <= threshold_of(r.w_hat)))


def test_shrink_result_invariants(rng):
    z = np.concatenate([rng.standard_normal(300), rng.normal(0, 8, 20)])
    for lam in (0.6, 0.9, 1.0):
        r = ebayes_shrink(z, lam)
        scale = lam * r.sigma_hat
        assert np.all(np.abs(r.mu_hat) <= np.abs(z) + 1e-12)
        assert np.array_equal(r.mu_hat == 0, np.abs(z) <= r.tau * scale)
        assert universal_weight(z.size) <= r.w_hat <= 1.0


def test_shrink_rejects_bad_lambda():
    with pytest.raises(ValueError):
        ebayes_shrink(np.ones(3), 0.0)


def test_shrink_noise_free_keeps_nonzero_entries():
    z = np.zeros(20)
    z[3] = 2.5
    r = ebayes_shrink(z, 0.9)
    assert r.noise_free and r.sigma_hat == 0.0
    assert np.array_equal(r.mu_hat, z)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100.0))
def test_shrink_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(50) + (rng.random(50) < 0.2) * rng.normal(0, 6, 50)
    a = ebayes_shrink(z, 0.9).mu_hat
    b = ebayes_shrink(c * z, 0.9).mu_hat
    np.testing.assert_allclose(b, c * a, rtol=1e-7, atol=1e-9 * c * np.abs(z).max())


# --------------------------------------------------------------------------- #
# compiled and numpy kernels agree
# --------------------------------------------------------------------------- #

_BACKEND_SNIPPET = """
import numpy as np
from pocre import ebthresh, backend_name
rng = np.random.default_rng(3)
z = np.concatenate([rng.standard_normal(400), rng.normal(0, 7, 40)])
r = ebthresh.ebayes_shrink(z, 0.85)
grid = np.linspace(-10, 10, 501)
out = [backend_name(), r.w_hat, r.tau] + list(r.mu_hat) + list(ebthresh.posterior_median(grid, 0.3))
print(" ".join(repr(float(v)) if not isinstance(v, str) else v for v in out))
"""


def _run_backend(disable):
    env = dict(os.environ, POCRE_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", _BACKEND_SNIPPET], env=env, capture_output=True, text=True, check=True)
    name, *vals = out.stdout.split()
    return name, np.array([float(v) for v in vals])


def test_backends_agree():
    n1, a = _run_backend(False)
    n2, b = _run_backend(True)
    assert (n1, n2) == ("numba", "numpy")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-8)

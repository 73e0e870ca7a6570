"""Acceptance criteria 1-10, each printed as one pass/fail line at the end of the run."""

import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from oracles import oracle_median
from pocre import backend_name, core, ebthresh, simbench
from pocre.simbench import SimCaseSpec

pytestmark = pytest.mark.acceptance


def _top_eigvec(M):
    v = np.linalg.eigh(M)[1][:, -1]
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def _sign_dist(u, v):
    return min(np.linalg.norm(u - v), np.linalg.norm(u + v))


# 1 ------------------------------------------------------------------------- #


def test_c01_thresholding_laws(criterion_log):
    t0 = time.perf_counter()
    z = np.linspace(-10, 10, 2001)
    worst_odd, ok = 0.0, True
    for w in (0.05, 0.3, 0.7, 1.0):
        m = ebthresh.posterior_median(z, w)
        ok &= bool(np.all(np.diff(m) >= 0))                     # (i) monotone
        ok &= bool(np.all(np.abs(m) <= np.abs(z)))              # (ii) shrinkage
        worst_odd = max(worst_odd, float(np.max(np.abs(ebthresh.posterior_median(-z, w) + m))))
        ok &= bool(np.array_equal(m == 0, np.abs(z) <= ebthresh.threshold_of(w)))  # (iv) zone
    elapsed = time.perf_counter() - t0
    ok &= worst_odd <= 1e-9 and elapsed < 5.0
    criterion_log(1, ok, f"laws (i)-(iv) on 2001 points, max antisymmetry error {worst_odd:.1e}, {elapsed:.2f}s")
    assert ok


# 2 ------------------------------------------------------------------------- #


def test_c02_posterior_median_oracle(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    zs = rng.uniform(-8, 8, 100)
    ws = rng.uniform(0.01, 1.0, 100)
    errs = [abs(ebthresh.posterior_median(float(z), float(w)) - oracle_median(float(z), float(w)))
            for z, w in zip(zs, ws)]
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    ok = worst < 1e-6 and elapsed < 30.0
    criterion_log(2, ok, f"100 (z, w) pairs vs quadrature, max error {worst:.1e}, {elapsed:.1f}s")
    assert ok


# 3 ------------------------------------------------------------------------- #


def test_c03_baseline_leading_eigenvector(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        n, p, k = int(rng.integers(3, 21)), int(rng.integers(2, 16)), int(rng.integers(1, 4))
        X = rng.standard_normal((n, p))
        Y = rng.standard_normal((n, k))
        d = core.prepare(X, Y)
        m = core.fit(d, 1.0, max_components=1, baseline_pls=True)
        C = d.Y.T @ d.X
        worst = max(worst, _sign_dist(m.components[0].omega, _top_eigvec(C.T @ C)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    criterion_log(3, ok, f"50 instances vs dense eigensolver, max distance {worst:.1e}, {elapsed:.2f}s")
    assert ok


# 4 ------------------------------------------------------------------------- #


def _battery():
    rng = np.random.default_rng(4)
    for i in range(12):
        n, p, k = int(rng.integers(15, 60)), int(rng.integers(10, 120)), int(rng.integers(1, 4))
        X = rng.standard_normal((n, p))
        B = np.zeros((p, k))
        B[: max(1, p // 10)] = rng.normal(0, 2, (max(1, p // 10), k))
        yield X, X @ B + rng.standard_normal((n, k)), bool(i % 3 == 0)
    for cid in simbench.CASE_IDS:
        d = simbench.generate(SimCaseSpec(cid, 60, seed=cid))
        yield d.X, d.Y, False


def test_c04_orthogonality(criterion_log):
    worst_eta = worst_defl = worst_zeta = 0.0
    n_models = n_comp = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", core.ConvergenceWarning)
        for X, Y, baseline in _battery():
            d = core.prepare(X, Y)
            m = core.fit(d, 0.9 if not baseline else 1.0, max_components=8, baseline_pls=baseline)
            n_models += 1
            state = core.ExtractionState.start(d.X)
            etas = []
            for c in m.components:
                eta, _, state = core.deflate(state, c.omega)
                Xn = state.X_current
                worst_defl = max(worst_defl, np.linalg.norm(eta @ Xn) / (np.linalg.norm(eta) * np.linalg.norm(Xn)))
                zeta_err = np.linalg.norm(d.X @ state.zeta() - Xn) / np.linalg.norm(Xn)
                worst_zeta = max(worst_zeta, zeta_err)
                for e in etas:
                    worst_eta = max(worst_eta, abs(e @ eta) / (np.linalg.norm(e) * np.linalg.norm(eta)))
                etas.append(eta)
                n_comp += 1
    ok = worst_eta < 1e-8 and worst_defl < 1e-10 and worst_zeta < 1e-8
    criterion_log(4, ok, f"{n_models} models / {n_comp} components: score overlap {worst_eta:.1e}, "
                         f"deflation {worst_defl:.1e}, zeta {worst_zeta:.1e}")
    assert ok


# 5 ------------------------------------------------------------------------- #


def test_c05_scale_equivariance(criterion_log):
    rng = np.random.default_rng(5)
    worst, same = 0.0, True
    for _ in range(10):
        n, p, k = int(rng.integers(20, 60)), int(rng.integers(20, 150)), int(rng.integers(1, 4))
        X = rng.standard_normal((n, p))
        B = np.zeros((p, k))
        B[:5] = rng.normal(0, 3, (5, k))
        Y = X @ B + rng.standard_normal((n, k))
        a = core.fit_xy(X, Y, 0.9)
        b = core.fit_xy(X, 2.0 * Y, 0.9)
        same &= a.n_components == b.n_components
        for ca, cb in zip(a.components, b.components):
            same &= np.array_equal(ca.support, cb.support)
            worst = max(worst, np.linalg.norm(ca.omega - cb.omega))
        scale = max(np.abs(b.beta).max(), 1e-300)
        worst = max(worst, float(np.abs(b.beta - 2.0 * a.beta).max() / scale))
    ok = bool(same) and worst < 1e-10
    criterion_log(5, ok, f"10 instances, supports identical={bool(same)}, max relative deviation {worst:.1e}")
    assert ok


# 6 / 7 --------------------------------------------------------------------- #


@pytest.mark.slow
def test_c06_loss_direction(desk_benchmark, criterion_log):
    records, summ = desk_benchmark
    c1 = summ[(100, "pocre", 1)]["loss"][0]
    c3 = summ[(100, "pocre", 3)]["loss"][0]
    c3_pls = summ[(100, "pls_baseline", 3)]["loss"][0]
    failed = sum(r.failed for r in records)
    ok = c3 < 60 and c3 < c3_pls and 2 <= c1 <= 15 and failed == 0
    criterion_log(6, ok, f"case 3 loss {c3:.2f} vs PLS {c3_pls:.2f}; case 1 loss {c1:.2f} (20 replicates)")
    assert ok


@pytest.mark.slow
def test_c07_fdr(desk_benchmark, criterion_log):
    _, summ = desk_benchmark
    f2 = summ[(100, "pocre", 2)]["fdr"][0]
    f3 = summ[(100, "pocre", 3)]["fdr"][0]
    below = {c: summ[(100, "pocre", c)]["fdr"][0] < summ[(100, "pls_baseline", c)]["fdr"][0]
             for c in simbench.CASE_IDS}
    ok = f2 <= 0.30 and f3 <= 0.25 and all(below.values())
    per_case = " ".join(f"{c}:{summ[(100, 'pocre', c)]['fdr'][0]:.3f}" for c in simbench.CASE_IDS)
    criterion_log(7, ok, f"case 2 FDR {f2:.4f}, case 3 FDR {f3:.4f}; POCRE FDR by case {per_case}, all below PLS")
    assert ok


# 8 ------------------------------------------------------------------------- #


def test_c08_loss_oracle(criterion_log):
    rng = np.random.default_rng(8)
    worst = 0.0
    n_models = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", core.ConvergenceWarning)
        for cid in simbench.CASE_IDS:
            for r in range(5):
                spec = SimCaseSpec(cid, 100, seed=int(rng.integers(2**31)))
                d = simbench.generate(spec)
                lam = float(rng.choice([0.8, 0.9, 1.0]))
                m = core.fit_xy(d.X, d.Y, lam)
                exact = simbench.loss(m, d)
                mc = simbench.monte_carlo_loss(m, spec, n_rows=100_000, seed=r)
                worst = max(worst, abs(mc - exact) / exact)
                n_models += 1
    ok = worst < 0.02
    criterion_log(8, ok, f"{n_models} fitted models, max |MC - analytic| / analytic = {worst:.4f}")
    assert ok


# 9 ------------------------------------------------------------------------- #


def test_c09_simulate_byte_identical(tmp_path, criterion_log):
    outputs = []
    for i in range(2):
        out, summ = tmp_path / f"r{i}.csv", tmp_path / f"s{i}.csv"
        cmd = [sys.executable, "-m", "pocre", "simulate", "--case", "1", "4", "--n", "60", "--replicates", "2",
               "--folds", "5", "--grid", "0.8:0.1:1.0", "--seed", "99", "--out", str(out), "--summary-out", str(summ)]
        subprocess.run(cmd, check=True, capture_output=True)
        outputs.append((out.read_bytes(), summ.read_bytes()))
    ok = outputs[0] == outputs[1] and len(outputs[0][0]) > 0
    criterion_log(9, ok, "two simulate runs with the same seed: per-replicate and summary CSVs byte-identical")
    assert ok


# 10 ------------------------------------------------------------------------ #


def test_c10_large_fit_time(criterion_log):
    rng = np.random.default_rng(10)
    n, p, k = 50, 22_690, 3
    X = rng.standard_normal((n, p))
    active = rng.choice(p, 12, replace=False)
    B = np.zeros((p, k))
    B[active] = rng.choice([-1.0, 1.0], (12, k)) * rng.uniform(2, 4, (12, k))
    Y = X @ B + rng.standard_normal((n, k))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", core.ConvergenceWarning)
        m = core.fit_xy(X, Y, 0.8, max_components=4)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 120.0 and 1 <= m.n_components <= 4
    criterion_log(10, ok, f"n=50 p=22690 k=3: {m.n_components} components, "
                          f"{sum(m.n_iterations_per_component)} alternations in {elapsed:.1f}s ({backend_name()} kernels)")
    assert ok

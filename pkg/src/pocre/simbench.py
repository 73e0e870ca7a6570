"""Simulation designs, evaluation metrics and the replicated benchmark.

Five designs with p = 1000 by default:

1. ten independent AR(1) blocks of 100 predictors, rho = 0.9,
   ``Y = 2 * sum(X_1..X_10) + sum(X_101..X_110) + N(0, 1)``;
2. as 1 with rho = 0.5;
3. three clusters of ten near-copies of a latent factor,
   ``X_j = Z_c + N(0, 0.01)`` and ``Y = 1.5 * sum(X_1..X_30) + N(0, 15^2)``;
4. signed clusters with unit measurement error, ``Y = Z1 + 2 Z2 + Z3 + N(0, 1)``;
5. AR(1) blocks with rho = 0.3 and five responses driven by two sums of
   six predictors each.

All AR(1) coordinates have unit marginal variance.  Each design also carries
its population second moments so the excess prediction risk of a fitted
model can be computed in closed form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal

from . import core, tuning

CASE_IDS = (1, 2, 3, 4, 5)
BLOCK = 100
DEFAULT_P = 1000
METHODS = ("pocre", "pls_baseline")

CASE5_Z1 = (50, 150, 250, 350, 450, 550)
CASE5_Z2 = (51, 153, 256, 359, 467, 583)
CASE5_A = (2.0, 2.0, -2.0, 3.0, 3.0)
CASE5_B = (-2.0, 2.0, -2.0, 1.5, -1.5)

_MIN_P = {1: 110, 2: 110, 3: 30, 4: 30, 5: 600}
_RHO = {1: 0.9, 2: 0.5, 5: 0.3}


@dataclass(frozen=True)
class SimCaseSpec:
    case_id: int
    n: int
    p: int = DEFAULT_P
    seed: int = 0
    rho: float | None = None

    def __post_init__(self):
        if self.case_id not in CASE_IDS:
            raise ValueError(f"unknown case {self.case_id!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.p < _MIN_P[self.case_id]:
            raise ValueError(f"case {self.case_id} needs p >= {_MIN_P[self.case_id]}, got {self.p}")
        if self.rho is not None and not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")

    @property
    def ar_rho(self):
        if self.rho is not None:
            return self.rho
        return _RHO.get(self.case_id)

    @property
    def k(self):
        return 5 if self.case_id == 5 else 1


@dataclass(frozen=True)
class Population:
    """Closed-form second moments of a design.

    ``beta_star`` is the best linear predictor of Y from X (here equal to
    E[Y|X]); ``noise_floor`` is tr var(Y|X) and ``noise_var`` the trace of
    the additive noise covariance.
    """

    sigma_xx: np.ndarray
    sigma_xy: np.ndarray
    beta_star: np.ndarray
    noise_floor: float
    noise_var: float


@dataclass(frozen=True)
class SimDataset:
    X: np.ndarray
    Y: np.ndarray
    true_support: np.ndarray
    population: Population
    signal: np.ndarray
    spec: SimCaseSpec | None = None


# --------------------------------------------------------------------------- #
# generators
# --------------------------------------------------------------------------- #


def _ar1_blocks(rng, n, p, rho):
    e = rng.standard_normal((n, p))
    c = math.sqrt(1.0 - rho * rho)
    X = np.empty_like(e)
    for start in range(0, p, BLOCK):
        blk = e[:, start:start + BLOCK].copy()
        blk[:, 0] /= c  # stationary start: x_0 = e_0
        X[:, start:start + BLOCK] = signal.lfilter([c], [1.0, -rho], blk, axis=1)
    return X


def _ar1_cov(p, rho):
    idx = np.arange(p)
    lag = np.abs(idx[:, None] - idx[None, :])
    same = (idx[:, None] // BLOCK) == (idx[None, :] // BLOCK)
    return np.where(same, rho ** lag, 0.0)


def _case4_signs():
    j = np.arange(1, 31)
    s = np.ones(30)
    s[:10] = np.sign(5.5 - j[:10])
    s[10:20] = np.sign(15.5 - j[10:20])
    return s


def _cluster_of(j):
    return j // 10  # 0-based column index -> cluster 0, 1, 2


def _true_beta(spec):
    p = spec.p
    if spec.case_id in (1, 2):
        b = np.zeros((p, 1))
        b[:10, 0] = 2.0
        b[100:110, 0] = 1.0
        return b
    if spec.case_id == 3:
        b = np.zeros((p, 1))
        b[:30, 0] = 1.5
        return b
    if spec.case_id == 5:
        b = np.zeros((p, 5))
        for kk in range(5):
            b[[i - 1 for i in CASE5_Z1], kk] += CASE5_A[kk]
            b[[i - 1 for i in CASE5_Z2], kk] += CASE5_B[kk]
        return b
    raise ValueError("case 4 has no linear generating coefficients")


def true_support(spec: SimCaseSpec) -> np.ndarray:
    """0-based indices of the truly active predictors."""
    if spec.case_id in (1, 2):
        return np.r_[0:10, 100:110]
    if spec.case_id in (3, 4):
        return np.arange(30)
    return np.array(sorted(i - 1 for i in CASE5_Z1 + CASE5_Z2))


def population(spec: SimCaseSpec) -> Population:
    p, cid = spec.p, spec.case_id
    if cid in (1, 2, 5):
        sxx = _ar1_cov(p, spec.ar_rho)
        beta = _true_beta(spec)
        noise = float(spec.k)
        return Population(sxx, sxx @ beta, beta, noise, noise)
    if cid == 3:
        sxx = np.diag(np.full(p, 0.01))
        for c in range(3):
            sl = slice(10 * c, 10 * c + 10)
            sxx[sl, sl] += 1.0
        beta = _true_beta(spec)
        return Population(sxx, sxx @ beta, beta, 225.0, 225.0)
    # case 4: Y depends on the latent factors, X observes them with error
    s = _case4_signs()
    coef = np.array([1.0, 2.0, 1.0])
    sxx = np.eye(p)
    sxy = np.zeros((p, 1))
    for c in range(3):
        sl = slice(10 * c, 10 * c + 10)
        sxx[sl, sl] += np.outer(s[sl], s[sl])
        sxy[sl, 0] = coef[c] * s[sl]
    # (s s' + I)^{-1} s = s / (1 + |s|^2) within each cluster
    beta = sxy / 11.0
    var_y = float(coef @ coef) + 1.0
    floor = var_y - float(sxy[:, 0] @ beta[:, 0])
    return Population(sxx, sxy, beta, floor, 1.0)


def generate(spec: SimCaseSpec, rng=None) -> SimDataset:
    """Draw one dataset; reproducible from ``spec.seed`` unless ``rng`` given."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n, p, cid = spec.n, spec.p, spec.case_id
    if cid in (1, 2, 5):
        X = _ar1_blocks(rng, n, p, spec.ar_rho)
        mean = X @ _true_beta(spec)
        Y = mean + rng.standard_normal((n, spec.k))
    elif cid == 3:
        Z = rng.standard_normal((n, 3))
        X = 0.1 * rng.standard_normal((n, p))
        for c in range(3):
            X[:, 10 * c:10 * c + 10] += Z[:, [c]]
        mean = X @ _true_beta(spec)
        Y = mean + 15.0 * rng.standard_normal((n, 1))
    else:
        Z = rng.standard_normal((n, 3))
        s = _case4_signs()
        X = rng.standard_normal((n, p))
        for c in range(3):
            sl = slice(10 * c, 10 * c + 10)
            X[:, sl] += Z[:, [c]] * s[sl]
        mean = (Z @ np.array([1.0, 2.0, 1.0]))[:, None]
        Y = mean + rng.standard_normal((n, 1))
    return SimDataset(X, Y, true_support(spec), population(spec), mean, spec)


# --------------------------------------------------------------------------- #
# metrics
# --------------------------------------------------------------------------- #


def loss(model: core.PocreModel, data: SimDataset | Population) -> float:
    """Excess prediction risk ``E||Y - Yhat||^2 - tr var(Y|X)``, exactly.

    Equals ``tr(D' Sxx D) + ||b||^2`` with ``D = beta_hat - beta_star`` and
    ``b`` the fitted intercept (all population means are zero).
    """
    pop = data.population if isinstance(data, SimDataset) else data
    D = model.beta - pop.beta_star
    quad = float(np.sum(D * (pop.sigma_xx @ D)))
    return max(quad + float(model.intercept @ model.intercept), 0.0)


def monte_carlo_loss(model, spec: SimCaseSpec, n_rows=100_000, seed=12345, chunk=10_000):
    """Monte Carlo estimate of :func:`loss` from fresh draws.

    Uses the generator's noiseless mean, so the additive noise only enters
    through its known variance: ``mean ||mean - Yhat||^2 + tr(noise) - floor``.
    """
    ss = np.random.SeedSequence([seed, spec.case_id, spec.p])
    total = 0.0
    done = 0
    pop = population(spec)
    for child in ss.spawn(-(-n_rows // chunk)):
        m = min(chunk, n_rows - done)
        sub = SimCaseSpec(spec.case_id, m, spec.p, 0, spec.rho)
        d = generate(sub, np.random.default_rng(child))
        r = d.signal - core.predict(model, d.X)
        total += float(np.sum(r * r))
        done += m
    return total / n_rows + pop.noise_var - pop.noise_floor


def fdr(selected, true_support) -> float:
    """Fraction of selected indices outside the true support (0 if none)."""
    sel = set(int(i) for i in np.asarray(selected).ravel())
    if not sel:
        return 0.0
    truth = set(int(i) for i in np.asarray(true_support).ravel())
    return len(sel - truth) / len(sel)


# --------------------------------------------------------------------------- #
# benchmark
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class LambdaPolicy:
    """Either a fixed lambda or cross-validation over ``grid``.

    The PLS baseline has no lambda; its number of components is always
    chosen by ``folds``-fold cross-validation.
    """

    kind: str = "cv"
    lam: float = 0.9
    grid: tuple = field(default_factory=lambda: tuple(tuning.DEFAULT_GRID))
    folds: int = 10

    @classmethod
    def fixed(cls, lam, folds=10):
        return cls("fixed", float(lam), (float(lam),), folds)

    @classmethod
    def cv(cls, grid=None, folds=10):
        return cls("cv", float("nan"), tuple(tuning.DEFAULT_GRID if grid is None else grid), folds)


@dataclass
class BenchmarkRecord:
    case_id: int
    n: int
    replicate: int
    method: str
    loss: float = float("nan")
    fdr: float = float("nan")
    n_selected: int = 0
    n_components: int = 0
    lambda_used: float = float("nan")
    failed: bool = False
    error: str = ""


def replicate_seed(seed, case_id, n, replicate):
    """Independent per-replicate stream, stable under any execution order."""
    return int(np.random.SeedSequence([int(seed), int(case_id), int(n), int(replicate)]).generate_state(1)[0])


def _run_one(case_id, n, replicate, p, methods, policy, seed, y_scale=1.0):
    rs = replicate_seed(seed, case_id, n, replicate)
    spec = SimCaseSpec(case_id, n, p, rs)
    data = generate(spec)
    X, Y = data.X, data.Y * y_scale
    pop = data.population
    if y_scale != 1.0:
        pop = Population(pop.sigma_xx, pop.sigma_xy * y_scale, pop.beta_star * y_scale,
                         pop.noise_floor * y_scale ** 2, pop.noise_var * y_scale ** 2)
    out = []
    for method in methods:
        rec = BenchmarkRecord(case_id, n, replicate, method)
        try:
            if method == "pocre":
                if policy.kind == "fixed":
                    lam = policy.lam
                else:
                    lam = tuning.cross_validate(X, Y, policy.grid, policy.folds, rs).best_lambda
                model = core.fit_xy(X, Y, lam)
                rec.lambda_used = lam
            elif method == "pls_baseline":
                rep = tuning.cross_validate_components(X, Y, folds=policy.folds, seed=rs)
                model = core.fit_xy(X, Y, 1.0, baseline_pls=True, max_components=rep.best)
            else:
                raise ValueError(f"unknown method {method!r}")
            sel = model.selected()
            rec.loss = loss(model, pop)
            rec.fdr = fdr(sel, data.true_support)
            rec.n_selected = int(sel.size)
            rec.n_components = model.n_components
        except Exception as exc:  # recorded, never aborts the run
            rec.failed = True
            rec.error = f"{type(exc).__name__}: {exc}"
        out.append(rec)
    return out


def run_benchmark(
    case_ids=CASE_IDS,
    n_values=(100,),
    replicates=1,
    methods=METHODS,
    policy: LambdaPolicy | None = None,
    seed=0,
    *,
    p=DEFAULT_P,
    n_jobs=1,
    y_scale=1.0,
):
    """Run every (case, n, replicate) task and return the records sorted by key."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    policy = policy or LambdaPolicy.cv()
    tasks = [(c, n, r) for c in case_ids for n in n_values for r in range(replicates)]
    if n_jobs == 1:
        chunks = [_run_one(c, n, r, p, methods, policy, seed, y_scale) for c, n, r in tasks]
    else:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=n_jobs)(
            delayed(_run_one)(c, n, r, p, methods, policy, seed, y_scale) for c, n, r in tasks
        )
    order = {m: i for i, m in enumerate(methods)}
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.case_id, r.n, r.replicate, order[r.method]))
    return records


def summarize(records):
    """Mean and standard error of loss and FDR per (n, method, case)."""
    groups = {}
    for r in records:
        if not r.failed:
            groups.setdefault((r.n, r.method, r.case_id), []).append(r)
    out = {}
    for key, recs in groups.items():
        stats = {}
        for metric in ("loss", "fdr"):
            v = np.array([getattr(r, metric) for r in recs])
            se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
            stats[metric] = (float(v.mean()), se)
        stats["count"] = len(recs)
        out[key] = stats
    return out


RECORD_FIELDS = [f for f in BenchmarkRecord.__dataclass_fields__]


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[f]) for f in RECORD_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str):
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(BenchmarkRecord(
            int(row["case_id"]), int(row["n"]), int(row["replicate"]), row["method"],
            float(row["loss"]), float(row["fdr"]), int(row["n_selected"]), int(row["n_components"]),
            float(row["lambda_used"]), row["failed"] == "1", row["error"],
        ))
    return out


def summary_to_csv(records) -> str:
    """Wide summary: one row per (n, method, metric), mean/SE/count columns per case."""
    summ = summarize(records)
    cases = sorted({c for (_, _, c) in summ})
    keys = sorted({(n, m) for (n, m, _) in summ}, key=lambda t: (-t[0], t[1]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["n", "method", "metric"]
    for c in cases:
        header += [f"case{c}_mean", f"case{c}_se", f"case{c}_count"]
    w.writerow(header)
    for n, m in keys:
        for metric in ("loss", "fdr"):
            row = [n, m, metric]
            for c in cases:
                st = summ.get((n, m, c))
                if st is None:
                    row += ["nan", "nan", "0"]
                else:
                    mean, se = st[metric]
                    row += [repr(mean), repr(se), str(st["count"])]
            w.writerow(row)
    return buf.getvalue()


def summary_from_csv(text: str):
    """Parse :func:`summary_to_csv` output back to ``{(n, method, metric, case): (mean, se, count)}``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    cases = [int(h[4:-5]) for h in header[3::3]]
    out = {}
    for row in reader:
        n, m, metric = int(row[0]), row[1], row[2]
        for i, c in enumerate(cases):
            mean, se, cnt = row[3 + 3 * i: 6 + 3 * i]
            out[(n, m, metric, c)] = (float(mean), float(se), int(cnt))
    return out

"""K-fold cross-validation for the thresholding parameter lambda.

Centering and scaling are re-learned on every training fold.  The error is
the held-out squared prediction error summed over responses, averaged over
observations.  Ties (within a relative ``TIE_RTOL`` of the total response
variation) go to the largest lambda, i.e. the sparser model.
"""

from __future__ import annotations

import warnings
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import core

DEFAULT_GRID = tuple(round(0.80 + 0.01 * i, 2) for i in range(21))
TIE_RTOL = 1e-10


@dataclass(frozen=True)
class CvReport:
    grid: tuple
    cv_error: np.ndarray
    best_lambda: float
    folds: int
    fold_assignment_seed: int


@dataclass(frozen=True)
class ComponentCvReport:
    n_components: tuple
    cv_error: np.ndarray
    best: int
    folds: int
    fold_assignment_seed: int


def parse_grid(text: str):
    """``"0.8:0.01:1.0"`` (start:step:stop, inclusive) or ``"0.8,0.9,1"``."""
    if ":" in text:
        start, step, stop = (float(t) for t in text.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(t) for t in text.split(",") if t.strip())


def fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    """Shuffled assignment of ``n`` observations to near-equal folds."""
    if folds < 2:
        raise ValueError("need at least two folds")
    if folds > n:
        raise ValueError(f"{folds} folds but only {n} observations")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % folds
    return ids


@contextmanager
def _quiet():
    # fold fits only feed the error curve; their convergence notes are noise
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", core.ConvergenceWarning)
        yield


def _raw(X, Y):
    if isinstance(X, core.DataMatrixPair):
        return (*X.raw(), X.standardized)
    return core.as_matrix(X, "X"), core.as_matrix(Y, "Y"), None


def _argmin_largest(err, scale):
    best = float(np.min(err))
    tie = best + TIE_RTOL * max(scale, 1e-300)
    return int(np.flatnonzero(err <= tie)[-1])


def cross_validate(X, Y=None, grid=DEFAULT_GRID, folds=10, seed=0, *, standardize=True, max_components=None):
    """Select lambda by k-fold CV.

    ``X`` may be raw predictors (with ``Y``) or a prepared
    :class:`~pocre.core.DataMatrixPair`, whose raw values are reconstructed.
    """
    X, Y, std = _raw(X, Y)
    if std is not None:
        standardize = std
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ValueError("empty lambda grid")
    if any(not g > 0 for g in grid):
        raise ValueError("lambda values must be positive")
    order = np.argsort(grid, kind="stable")
    grid = tuple(grid[i] for i in order)
    n = X.shape[0]
    ids = fold_ids(n, folds, seed)
    sse = np.zeros(len(grid))
    for f in range(folds):
        test = ids == f
        data = core.prepare(X[~test], Y[~test], standardize)
        for i, lam in enumerate(grid):
            with _quiet():
                model = core.fit(data, lam, max_components)
            r = Y[test] - core.predict(model, X[test])
            sse[i] += float(np.sum(r * r))
    err = sse / n
    scale = float(np.sum((Y - Y.mean(axis=0)) ** 2)) / n
    best = grid[_argmin_largest(err, scale)]
    return CvReport(grid, err, best, folds, seed)


def cross_validate_components(X, Y=None, max_components=None, folds=10, seed=0, *, standardize=True, lam=1.0,
                              baseline_pls=True):
    """Choose the number of components by k-fold CV (PLS baseline by default).

    One fit per fold up to ``max_components``; every prefix model is scored.
    Ties go to the smaller number of components.
    """
    X, Y, std = _raw(X, Y)
    if std is not None:
        standardize = std
    n = X.shape[0]
    ids = fold_ids(n, folds, seed)
    if max_components is None:
        max_components = core.default_max_components(n - int(np.ceil(n / folds)))
    counts = np.arange(1, max_components + 1)
    sse = np.zeros(counts.size)
    for f in range(folds):
        test = ids == f
        with _quiet():
            model = core.fit(core.prepare(X[~test], Y[~test], standardize), lam, max_components, baseline_pls)
        for i, m in enumerate(counts):
            r = Y[test] - core.predict(model.truncated(m), X[test])
            sse[i] += float(np.sum(r * r))
    err = sse / n
    scale = float(np.sum((Y - Y.mean(axis=0)) ** 2)) / n
    best_val = float(np.min(err))
    best = int(counts[np.flatnonzero(err <= best_val + TIE_RTOL * max(scale, 1e-300))[0]])
    return ComponentCvReport(tuple(int(c) for c in counts), err, best, folds, seed)

"""Sequential extraction of sparse orthogonal components and the fitted model.

Each component is found by alternating between a unit direction ``alpha`` and
a thresholded loading ``gamma`` for the matrix ``A = X_j' Y Y' X_j``::

    alpha <- A gamma / ||A gamma||
    gamma <- ebayes_shrink(A alpha, lam)

started from the leading eigenvector of ``A`` (a NIPALS-style power
recursion).  The normalised loading ``omega`` defines the score
``eta = X_j omega``, which is then deflated out of the predictors.  With
thresholding disabled the procedure is ordinary NIPALS partial least squares.

``A`` is never formed: with ``B = X_j' Y`` (p x k) every product ``A v`` is
``B (B' v)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .ebthresh import ebayes_shrink

POWER_TOL = 1e-10
POWER_MAX_ITER = 500
ALTERNATION_TOL = 1e-6
ALTERNATION_MAX_ITER = 200
MAX_COMPONENTS_CAP = 30
# cross-covariance below this fraction of ||X|| ||Y|| counts as exhausted
ZERO_RTOL = 1e-10
SELECT_TOL = 1e-12

STOP_ALL_THRESHOLDED = "all_thresholded"
STOP_MAX_COMPONENTS = "max_components"
STOP_DEGENERATE_SIGMA = "degenerate_sigma"


class ConvergenceWarning(UserWarning):
    pass


class DegenerateComponent(ArithmeticError):
    """The cross-covariance (or a score vector) is identically zero."""


# --------------------------------------------------------------------------- #
# data preparation
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class DataMatrixPair:
    X: np.ndarray
    Y: np.ndarray
    x_center: np.ndarray
    y_center: np.ndarray
    x_scale: np.ndarray
    standardized: bool
    constant_columns: np.ndarray

    @property
    def shape(self):
        return self.X.shape[0], self.X.shape[1], self.Y.shape[1]

    def raw(self):
        """Reconstruct the raw matrices (up to rounding)."""
        return self.X * self.x_scale + self.x_center, self.Y + self.y_center


def as_matrix(a, name="array"):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {a.shape}")
    return a


def prepare(Xraw, Yraw, standardize: bool = True) -> DataMatrixPair:
    """Center X and Y column-wise and optionally scale X to unit variance.

    The standard deviation uses the n-1 divisor.  Constant columns are
    zeroed, given scale 1 and flagged in ``constant_columns``.
    """
    X = as_matrix(Xraw, "X")
    Y = as_matrix(Yraw, "Y")
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ValueError(f"row mismatch: X has {n} rows, Y has {Y.shape[0]}")
    if n < 2:
        raise ValueError("need at least two observations")
    if X.shape[1] < 1 or Y.shape[1] < 1:
        raise ValueError("X and Y need at least one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite entries in input")

    x_center = X.mean(axis=0)
    y_center = Y.mean(axis=0)
    Xc = X - x_center
    Yc = Y - y_center
    sd = Xc.std(axis=0, ddof=1)
    constant = sd <= 1e-12 * np.maximum(1.0, np.abs(x_center))
    Xc[:, constant] = 0.0
    if standardize:
        x_scale = np.where(constant, 1.0, sd)
        Xc = Xc / x_scale
    else:
        x_scale = np.ones(X.shape[1])
    return DataMatrixPair(Xc, Yc, x_center, y_center, x_scale, bool(standardize), constant)


# --------------------------------------------------------------------------- #
# extraction state and deflation
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ExtractionState:
    """Deflated predictors ``X_j`` and the factors of ``zeta_j``.

    ``zeta_j = (I - omega_1 P_1) ... (I - omega_{j-1} P_{j-1})`` satisfies
    ``X zeta_j = X_j``.  It is kept in factored form; :meth:`zeta`
    materialises it (p x p) for small problems.
    """

    X: np.ndarray
    X_current: np.ndarray
    factors: tuple = ()

    @classmethod
    def start(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(X, X.copy(), ())

    @property
    def step(self):
        return len(self.factors) + 1

    def apply_zeta(self, v):
        v = np.array(v, dtype=float)
        for omega, P in reversed(self.factors):
            v -= omega * (P @ v)
        return v

    def zeta(self):
        p = self.X.shape[1]
        Z = np.eye(p)
        for omega, P in self.factors:
            Z -= np.outer(Z @ omega, P)
        return Z


def deflate(state: ExtractionState, omega):
    """Remove the score ``eta = X_j omega`` from the predictors.

    Returns ``(eta, P, new_state)`` with ``P = eta' X_j / eta' eta`` and
    ``X_{j+1} = X_j - eta P``.
    """
    omega = np.asarray(omega, dtype=float)
    Xj = state.X_current
    eta = Xj @ omega
    ee = float(eta @ eta)
    if ee == 0.0:
        raise DegenerateComponent("score vector is zero")
    P = (eta @ Xj) / ee
    X_next = Xj - np.outer(eta, P)
    return eta, P, ExtractionState(state.X, X_next, state.factors + ((omega.copy(), P),))


# --------------------------------------------------------------------------- #
# direction finding
# --------------------------------------------------------------------------- #


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _direction_change(u, v):
    """Distance between unit directions, ignoring sign."""
    return min(np.linalg.norm(u - v), np.linalg.norm(u + v))


def _unit(v):
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 else v


def _leading_from_cross(B, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    # NIPALS recursion with B = X_j' Y cached:
    #   gamma = X'psi/||.||, eta = X gamma, phi = Y'eta/||Y'eta||, psi = Y phi
    start = B[:, 0]
    if not np.any(start):
        # first response has no cross-covariance left; start elsewhere
        start = B[:, int(np.argmax(np.linalg.norm(B, axis=0)))]
    gamma = _unit(start)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        phi = _unit(B.T @ gamma)
        new = _unit(B @ phi)
        change = _direction_change(new, gamma)
        gamma = new
        if change < tol:
            converged = True
            break
    return _fix_sign(gamma), it, converged


def power_leading_vector(Xj, Y, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Leading eigenvector of ``Xj' Y Y' Xj`` by the NIPALS power recursion.

    The sign is fixed so that the largest-magnitude entry is positive.
    Raises :class:`DegenerateComponent` if ``Xj' Y`` is zero.
    """
    Xj = as_matrix(Xj, "Xj")
    Y = as_matrix(Y, "Y")
    B = Xj.T @ Y
    if not np.any(B):
        raise DegenerateComponent("cross-covariance is zero")
    gamma, _, converged = _leading_from_cross(B, tol, max_iter)
    if not converged:
        warnings.warn("power recursion hit the iteration cap", ConvergenceWarning, stacklevel=2)
    return gamma


@dataclass(frozen=True)
class Stop:
    reason: str


@dataclass(frozen=True)
class Direction:
    """Output of one extraction: the unit loading plus diagnostics."""

    omega: np.ndarray
    n_iter: int
    converged: bool
    sigma_hat: float = float("nan")
    w_hat: float = float("nan")


def extract_component(
    state: ExtractionState,
    Y,
    lam: float,
    *,
    baseline: bool = False,
    tol: float = ALTERNATION_TOL,
    max_iter: int = ALTERNATION_MAX_ITER,
    zero_scale: float | None = None,
):
    """Find the next sparse loading, or a :class:`Stop`.

    ``zero_scale`` sets the magnitude below which the cross-covariance counts
    as exhausted (defaults to ``ZERO_RTOL * ||X|| * ||Y||``).  With
    ``baseline=True`` the shrinkage step is the identity.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    Y = as_matrix(Y, "Y")
    if zero_scale is None:
        zero_scale = ZERO_RTOL * np.linalg.norm(state.X) * np.linalg.norm(Y)
    B = state.X_current.T @ Y
    if not np.any(B) or np.linalg.norm(B) <= zero_scale:
        return Stop(STOP_DEGENERATE_SIGMA)

    gamma, _, _ = _leading_from_cross(B)
    sigma = w = float("nan")
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        alpha = _unit(B @ (B.T @ gamma))
        Z = B @ (B.T @ alpha)
        if baseline:
            new = Z
        else:
            res = ebayes_shrink(Z, lam)
            sigma, w = res.sigma_hat, res.w_hat
            if res.all_zero:
                return Stop(STOP_DEGENERATE_SIGMA if sigma == 0.0 else STOP_ALL_THRESHOLDED)
            new = res.mu_hat
        change = _direction_change(_unit(new), _unit(gamma))
        gamma = new
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"alternation did not converge in {max_iter} steps (component {state.step})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return Direction(_fix_sign(_unit(gamma)), it, converged, sigma, w)


# --------------------------------------------------------------------------- #
# model
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Component:
    index: int
    omega: np.ndarray
    eta: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    varpi: np.ndarray
    n_iter: int = 0
    converged: bool = True

    @property
    def support(self):
        return np.flatnonzero(self.omega)


@dataclass(frozen=True)
class PocreModel:
    components: tuple
    beta: np.ndarray
    intercept: np.ndarray
    lam: float
    stop_reason: str
    x_center: np.ndarray
    x_scale: np.ndarray
    y_center: np.ndarray
    standardized: bool = True
    baseline_pls: bool = False
    info: dict = field(default_factory=dict)

    @property
    def n_components(self):
        return len(self.components)

    @property
    def n_iterations_per_component(self):
        return [c.n_iter for c in self.components]

    @property
    def shape(self):
        return self.beta.shape

    def predict(self, Xnew):
        return predict(self, Xnew)

    def selected(self, tol=SELECT_TOL):
        """Indices of predictors with a nonzero coefficient for some response."""
        return np.flatnonzero(np.any(np.abs(self.beta) > tol, axis=1))

    def truncated(self, m: int) -> "PocreModel":
        """The model built from the first ``m`` components only."""
        m = max(0, min(int(m), self.n_components))
        comps = self.components[:m]
        beta, intercept = _assemble(comps, self.x_center, self.x_scale, self.y_center, self.beta.shape)
        reason = self.stop_reason if m == self.n_components else STOP_MAX_COMPONENTS
        return PocreModel(
            comps, beta, intercept, self.lam, reason, self.x_center, self.x_scale,
            self.y_center, self.standardized, self.baseline_pls, dict(self.info),
        )


def _assemble(components, x_center, x_scale, y_center, shape):
    beta_std = np.zeros(shape)
    for c in components:
        beta_std += np.outer(c.varpi, c.Q)
    beta = beta_std / x_scale[:, None]
    intercept = y_center - x_center @ beta
    return beta, intercept


def default_max_components(n: int) -> int:
    return max(1, min(n - 1, MAX_COMPONENTS_CAP))


def fit(
    data: DataMatrixPair,
    lam: float = 0.9,
    max_components: int | None = None,
    baseline_pls: bool = False,
    *,
    tol: float = ALTERNATION_TOL,
    max_iter: int = ALTERNATION_MAX_ITER,
) -> PocreModel:
    """Fit POCRE (or the PLS baseline) on prepared data."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    n, p, k = data.shape
    if max_components is None:
        max_components = default_max_components(n)
    if max_components < 1:
        raise ValueError("max_components must be positive")

    Y = data.Y
    state = ExtractionState.start(data.X)
    zero_scale = ZERO_RTOL * np.linalg.norm(data.X) * np.linalg.norm(Y)
    components = []
    stop_reason = STOP_MAX_COMPONENTS
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for j in range(1, max_components + 1):
            out = extract_component(
                state, Y, lam, baseline=baseline_pls, tol=tol, max_iter=max_iter, zero_scale=zero_scale
            )
            if isinstance(out, Stop):
                stop_reason = out.reason
                break
            varpi = state.apply_zeta(out.omega)
            try:
                eta, P, state = deflate(state, out.omega)
            except DegenerateComponent:
                stop_reason = STOP_DEGENERATE_SIGMA
                break
            Q = (eta @ Y) / (eta @ eta)
            components.append(Component(j, out.omega, eta, P, Q, varpi, out.n_iter, out.converged))
    n_unconverged = sum(not c.converged for c in components)
    if n_unconverged:
        warnings.warn(
            f"{n_unconverged} component(s) stopped at the alternation cap", ConvergenceWarning, stacklevel=2
        )

    beta, intercept = _assemble(components, data.x_center, data.x_scale, data.y_center, (p, k))
    return PocreModel(
        tuple(components), beta, intercept, float(lam), stop_reason,
        data.x_center, data.x_scale, data.y_center, data.standardized, bool(baseline_pls),
    )


def fit_xy(X, Y, lam=0.9, *, standardize=True, **kwargs) -> PocreModel:
    """Convenience wrapper: :func:`prepare` then :func:`fit`."""
    return fit(prepare(X, Y, standardize), lam, **kwargs)


def predict(model: PocreModel, Xnew) -> np.ndarray:
    Xnew = as_matrix(Xnew, "Xnew")
    if Xnew.shape[1] != model.beta.shape[0]:
        raise ValueError(f"expected {model.beta.shape[0]} columns, got {Xnew.shape[1]}")
    return Xnew @ model.beta + model.intercept

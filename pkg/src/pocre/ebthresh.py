"""Empirical Bayes thresholding under a point-mass + quasi-Cauchy prior.

The prior on each mean is ``(1 - w) * delta_0 + w * gamma`` where ``gamma`` is
the quasi-Cauchy density

    gamma(mu) = (2 pi)^(-1/2) * (1 - |mu| * Phi(-|mu|) / phi(mu)),

whose convolution with N(0, 1) has the closed form

    g(z) = (2 pi)^(-1/2) * z^(-2) * (1 - exp(-z^2 / 2)).

The posterior median is a thresholding rule: it is zero on ``[-tau, tau]``,
odd, monotone and shrinks towards zero.  It is found by bisection on the
closed-form posterior tail probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._kernels import impl

PROBIT_75 = float(special.ndtri(0.75))
MEDIAN_TOL = 1e-9
THRESHOLD_TOL = 1e-9
WEIGHT_TOL = 1e-8
WEIGHT_MAX_ITER = 200

__all__ = [
    "EbayesResult",
    "ebayes_shrink",
    "estimate_sigma",
    "estimate_weight",
    "marginal_density",
    "posterior_cdf",
    "posterior_median",
    "threshold_of",
    "universal_weight",
]


@dataclass(frozen=True)
class EbayesResult:
    """Outcome of one thresholding pass over a noisy vector.

    ``mu_hat`` is on the scale of the input.  ``noise_free`` marks the
    limiting case where the robust scale is exactly zero although some
    entries are not: every nonzero entry is then kept unchanged.
    """

    sigma_hat: float
    w_hat: float
    tau: float
    mu_hat: np.ndarray
    all_zero: bool
    noise_free: bool = False

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mu_hat)


def _check_weight(w):
    if not (0.0 < w <= 1.0):
        raise ValueError(f"mixture weight must lie in (0, 1], got {w!r}")


def estimate_sigma(z) -> float:
    """Robust noise scale ``median(|z|) / Phi^{-1}(0.75)``.

    Returns 0 when every entry is below machine epsilon; callers treat that
    as the signal to stop.
    """
    a = np.abs(np.asarray(z, dtype=float).ravel())
    if a.size == 0:
        raise ValueError("empty vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    if a.max() < np.finfo(float).eps:
        return 0.0
    return float(np.median(a)) / PROBIT_75


def marginal_density(z, w):
    """Marginal density of an observation under the mixture prior."""
    _check_weight(w)
    phi, g = impl.marginal_densities(np.atleast_1d(np.asarray(z, dtype=float)))
    out = (1.0 - w) * phi + w * g
    return out if np.ndim(z) else float(out[0])


def universal_weight(p: int) -> float:
    """Smallest admissible weight: the one whose threshold is sqrt(2 log p)."""
    if p < 1:
        raise ValueError("p must be positive")
    t = math.sqrt(2.0 * math.log(p))
    if t < 1e-3:
        return 1.0
    phi_t = math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    head = 0.5 * math.erf(t / math.sqrt(2.0)) - t * phi_t
    odds = 2.0 * head / (t * t * math.exp(-0.5 * t * t))
    return 1.0 / (1.0 + odds)


def estimate_weight(z_std, w_min: float | None = None) -> float:
    """Marginal maximum-likelihood mixture weight over ``[w_min, 1]``.

    ``z_std`` must already be on the unit-noise scale.  The log-likelihood is
    concave in ``w``; golden-section search locates the interior maximiser
    to 1e-8 and boundary maxima are returned exactly.
    """
    z = np.ascontiguousarray(np.asarray(z_std, dtype=float).ravel())
    if w_min is None:
        w_min = universal_weight(z.size)
    phi, g = impl.marginal_densities(z)
    return float(impl.max_marginal_weight(phi, g, float(w_min), WEIGHT_TOL, WEIGHT_MAX_ITER))


def threshold_of(w: float) -> float:
    """Largest ``|z|`` whose posterior median is zero (0 when ``w == 1``)."""
    _check_weight(w)
    return float(impl.threshold(float(w), THRESHOLD_TOL))


def posterior_median(z, w: float):
    """Posterior median of the mean given ``z`` (scalar or array)."""
    _check_weight(w)
    arr = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=float)))
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input")
    out = impl.posterior_median(arr.ravel(), float(w), MEDIAN_TOL).reshape(arr.shape)
    return out if np.ndim(z) else float(out[0])


def posterior_cdf(m: float, z: float, w: float) -> float:
    """``P(mu <= m | z)`` under the mixture prior, for ``z != 0``."""
    _check_weight(w)
    if z == 0:
        raise ValueError("closed form requires z != 0")
    total = float(impl.total_mass_scaled(z, w))
    if m >= 0:
        return 1.0 - float(impl.upper_tail_scaled(m, z)) / total
    return float(impl.upper_tail_scaled(-m, -z)) / total


def ebayes_shrink(z, lam: float) -> EbayesResult:
    """Threshold ``z`` after standardising by ``lam * sigma_hat``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    z = np.asarray(z, dtype=float).ravel()
    sigma = estimate_sigma(z)
    if sigma == 0.0:
        if not np.any(np.abs(z) >= np.finfo(float).eps):
            return EbayesResult(0.0, 1.0, 0.0, np.zeros_like(z), True)
        # more than half the entries are exactly zero: the sigma -> 0 limit
        # of the rule keeps every nonzero entry as is
        mu = np.where(z != 0.0, z, 0.0)
        return EbayesResult(0.0, 1.0, 0.0, mu, False, noise_free=True)
    scale = lam * sigma
    z_std = np.ascontiguousarray(z / scale)
    w = estimate_weight(z_std)
    mu = impl.posterior_median(z_std, w, MEDIAN_TOL) * scale
    tau = float(impl.threshold(w, THRESHOLD_TOL))
    return EbayesResult(sigma, w, tau, mu, not np.any(mu))

"""Compiled scalar-loop kernels for the quasi-Cauchy thresholding rule.

Every routine here has a vectorised twin in ``_kernels_numpy``; the two are
kept numerically interchangeable (agreement well inside the bisection
tolerance) and the test-suite checks that.
"""

import math

import numpy as np

from ._accel import njit

SQRT2 = math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
# beyond this the asymptotic Mills-ratio series is accurate to ~1e-17
MILLS_SWITCH = 35.0
SMALL_Z = 1e-2


@njit
def _norm_cdf(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit
def _norm_pdf(x):
    return INV_SQRT2PI * math.exp(-0.5 * x * x)


@njit
def _mills(x):
    # (1 - Phi(x)) / phi(x) for x >= 0
    if x < MILLS_SWITCH:
        return 0.5 * math.erfc(x / SQRT2) * math.exp(0.5 * x * x) / INV_SQRT2PI
    r = 1.0 / (x * x)
    return (1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (
        1.0 - 9.0 * r * (1.0 - 11.0 * r)))))) / x


@njit
def zero_margin(z, w):
    """Sign decides the zero zone: <= 0 means the posterior median is 0."""
    a = abs(z)
    if a < SMALL_Z:
        a2 = a * a
        head = INV_SQRT2PI * a * a2 * (1.0 / 3.0 - a2 / 10.0 + a2 * a2 / 56.0)
    else:
        head = 0.5 * math.erf(a / SQRT2) - a * _norm_pdf(a)
    return head - 0.5 * (1.0 / w - 1.0) * a * a * math.exp(-0.5 * a * a)


@njit
def upper_tail_scaled(x, z):
    # z^2/phi(0) * int_x^inf gamma(mu) phi(z - mu) dmu, valid for x >= 0
    h = z - x
    ph = _norm_pdf(h)
    return _norm_cdf(h) - z * ph + (z * x - 1.0) * ph * _mills(x)


@njit
def total_mass_scaled(z, w):
    e = math.exp(-0.5 * z * z)
    return -math.expm1(-0.5 * z * z) + (1.0 / w - 1.0) * z * z * e


@njit
def _median_positive(a, w, tol):
    target = 0.5 * total_mass_scaled(a, w)
    lo = 0.0
    hi = a
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if upper_tail_scaled(mid, a) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit
def posterior_median(z, w, tol):
    out = np.zeros(z.shape[0])
    for i in range(z.shape[0]):
        zi = z[i]
        a = abs(zi)
        # at w = 1 the zero zone is {0}; the margin itself underflows for tiny a
        if a == 0.0 or (w < 1.0 and zero_margin(a, w) <= 0.0):
            continue
        m = _median_positive(a, w, tol)
        out[i] = m if zi > 0 else -m
    return out


@njit
def threshold(w, tol):
    if w >= 1.0:
        return 0.0
    lo = 0.0
    hi = 1.0
    while zero_margin(hi, w) <= 0.0:
        lo = hi
        hi *= 2.0
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if zero_margin(mid, w) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


@njit
def _loglik(phi, g, w):
    s = 0.0
    for i in range(phi.shape[0]):
        s += math.log((1.0 - w) * phi[i] + w * g[i])
    return s


@njit
def _score(phi, g, w):
    s = 0.0
    for i in range(phi.shape[0]):
        s += (g[i] - phi[i]) / ((1.0 - w) * phi[i] + w * g[i])
    return s


@njit
def _curvature(phi, g, w):
    s = 0.0
    for i in range(phi.shape[0]):
        t = (g[i] - phi[i]) / ((1.0 - w) * phi[i] + w * g[i])
        s -= t * t
    return s


@njit
def _polish(phi, g, a, b, w_lo):
    # Newton on the score from the golden midpoint.  The log-likelihood is too
    # flat for golden comparisons to resolve below ~1e-8, so the step may
    # leave the final bracket but never the admissible range.
    w = 0.5 * (a + b)
    for _ in range(4):
        c = _curvature(phi, g, w)
        if c >= 0.0:
            break
        step = _score(phi, g, w) / c
        w_new = w - step
        if w_new <= w_lo or w_new >= 1.0 or abs(step) > 1e3 * (b - a):
            break
        w = w_new
        if abs(step) < 1e-15:
            break
    return w


@njit
def max_marginal_weight(phi, g, w_lo, tol, max_iter):
    # concave log-likelihood: boundary maximisers are detected from the score
    if w_lo >= 1.0 or _score(phi, g, 1.0) >= 0.0:
        return 1.0
    if _score(phi, g, w_lo) <= 0.0:
        return w_lo
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a = w_lo
    b = 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _loglik(phi, g, c)
    fd = _loglik(phi, g, d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b = d
            d = c
            fd = fc
            c = b - invphi * (b - a)
            fc = _loglik(phi, g, c)
        else:
            a = c
            c = d
            fc = fd
            d = a + invphi * (b - a)
            fd = _loglik(phi, g, d)
    return _polish(phi, g, a, b, w_lo)


@njit
def marginal_densities(z):
    """Null (standard normal) and quasi-Cauchy marginal densities of ``z``."""
    n = z.shape[0]
    phi = np.empty(n)
    g = np.empty(n)
    for i in range(n):
        x2 = z[i] * z[i]
        phi[i] = INV_SQRT2PI * math.exp(-0.5 * x2)
        if x2 == 0.0:
            g[i] = 0.5 * INV_SQRT2PI
        else:
            g[i] = -INV_SQRT2PI * math.expm1(-0.5 * x2) / x2
    return phi, g

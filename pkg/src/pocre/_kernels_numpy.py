"""Vectorised numpy/scipy versions of the thresholding kernels.

Used when numba is disabled (``POCRE_DISABLE_NUMBA=1``).  Signatures mirror
``_kernels_numba`` exactly.
"""

import math

import numpy as np
from scipy import special

INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)
SMALL_Z = 1e-2


def _mills(x):
    return math.sqrt(math.pi / 2.0) * special.erfcx(x / SQRT2)


def zero_margin(z, w):
    a = np.abs(np.asarray(z, dtype=float))
    a2 = a * a
    head = np.where(
        a < SMALL_Z,
        INV_SQRT2PI * a * a2 * (1.0 / 3.0 - a2 / 10.0 + a2 * a2 / 56.0),
        0.5 * special.erf(a / SQRT2) - a * INV_SQRT2PI * np.exp(-0.5 * a2),
    )
    out = head - 0.5 * (1.0 / w - 1.0) * a2 * np.exp(-0.5 * a2)
    return out if out.ndim else float(out)


def upper_tail_scaled(x, z):
    h = z - x
    ph = INV_SQRT2PI * np.exp(-0.5 * h * h)
    return special.ndtr(h) - z * ph + (z * x - 1.0) * ph * _mills(x)


def total_mass_scaled(z, w):
    z2 = z * z
    return -np.expm1(-0.5 * z2) + (1.0 / w - 1.0) * z2 * np.exp(-0.5 * z2)


def posterior_median(z, w, tol):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    a = np.abs(z)
    active = np.flatnonzero((a > 0) & ((w >= 1.0) | (zero_margin(a, w) > 0)))
    if active.size == 0:
        return out
    a = a[active]
    target = 0.5 * total_mass_scaled(a, w)
    lo = np.zeros_like(a)
    hi = a.copy()
    for _ in range(400):
        open_ = hi - lo > tol
        if not open_.any():
            break
        mid = 0.5 * (lo + hi)
        # stop refining entries whose bracket is below float resolution
        open_ &= (mid > lo) & (mid < hi)
        if not open_.any():
            break
        up = upper_tail_scaled(mid, a) > target
        lo = np.where(open_ & up, mid, lo)
        hi = np.where(open_ & ~up, mid, hi)
    out[active] = np.copysign(0.5 * (lo + hi), z[active])
    return out


def threshold(w, tol):
    if w >= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while zero_margin(hi, w) <= 0.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if zero_margin(mid, w) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def marginal_densities(z):
    z = np.asarray(z, dtype=float)
    x2 = z * z
    phi = INV_SQRT2PI * np.exp(-0.5 * x2)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(x2 == 0.0, 0.5 * INV_SQRT2PI, -INV_SQRT2PI * np.expm1(-0.5 * x2) / x2)
    return phi, g


def max_marginal_weight(phi, g, w_lo, tol, max_iter):
    def loglik(w):
        return float(np.sum(np.log((1.0 - w) * phi + w * g)))

    def score(w):
        return float(np.sum((g - phi) / ((1.0 - w) * phi + w * g)))

    if w_lo >= 1.0 or score(1.0) >= 0.0:
        return 1.0
    if score(w_lo) <= 0.0:
        return w_lo
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = w_lo, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = loglik(c), loglik(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = loglik(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = loglik(d)
    # Newton polish from the golden midpoint (see the numba twin)
    w = 0.5 * (a + b)
    for _ in range(4):
        t = (g - phi) / ((1.0 - w) * phi + w * g)
        curv = -float(np.sum(t * t))
        if curv >= 0.0:
            break
        step = float(np.sum(t)) / curv
        if not w_lo < w - step < 1.0 or abs(step) > 1e3 * (b - a):
            break
        w -= step
        if abs(step) < 1e-15:
            break
    return w

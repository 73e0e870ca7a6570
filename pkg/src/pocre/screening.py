"""Overall-correlation (OCC) feature screening for multi-response data.

A predictor's OCC is the smallest absolute Pearson correlation it has with
any of the responses, so a high OCC means it tracks every response.
"""

import numpy as np

from .core import as_matrix


def correlations(X, Y):
    """p x k Pearson correlations; constant columns correlate as 0."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    Xc = X - X.mean(axis=0)
    Xc[:, np.ptp(X, axis=0) == 0] = 0.0
    Yc = Y - Y.mean(axis=0)
    sx = np.sqrt(np.sum(Xc * Xc, axis=0))
    sy = np.sqrt(np.sum(Yc * Yc, axis=0))
    # elementwise reduction: identical columns give bit-identical results
    num = np.sum(Xc[:, :, None] * Yc[:, None, :], axis=0)
    den = np.outer(sx, sy)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / den, 0.0)
    return np.clip(r, -1.0, 1.0)


def occ(X, Y):
    return np.min(np.abs(correlations(X, Y)), axis=1)


def rank_by_occ(X, Y, top=None):
    """Column indices ordered by descending OCC (ties by index) and the OCC values."""
    values = occ(X, Y)
    order = np.lexsort((np.arange(values.size), -values))
    if top is not None:
        if not 0 < top <= values.size:
            raise ValueError(f"top must be in 1..{values.size}")
        order = order[:top]
    return order, values

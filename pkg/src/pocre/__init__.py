"""Penalized orthogonal-components regression (POCRE) for p >> n data."""

from ._accel import backend_name
from .core import (
    Component,
    DataMatrixPair,
    PocreModel,
    deflate,
    extract_component,
    fit,
    fit_xy,
    predict,
    power_leading_vector,
    prepare,
)
from .ebthresh import ebayes_shrink, estimate_sigma, estimate_weight, posterior_median, threshold_of
from .tuning import cross_validate, cross_validate_components

__version__ = "0.1.0"

__all__ = [
    "Component",
    "DataMatrixPair",
    "PocreModel",
    "backend_name",
    "cross_validate",
    "cross_validate_components",
    "deflate",
    "ebayes_shrink",
    "estimate_sigma",
    "estimate_weight",
    "extract_component",
    "fit",
    "fit_xy",
    "posterior_median",
    "power_leading_vector",
    "predict",
    "prepare",
    "threshold_of",
]

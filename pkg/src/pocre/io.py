"""CSV tables and the JSON model file.

Tables are comma-separated with one header row and no row names.  The model
file is a versioned JSON document; loadings and coefficients are stored
sparsely as index/value pairs.  JSON floats are written with ``repr`` so a
save/load round trip reproduces every coefficient bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile

import numpy as np

from .core import Component, PocreModel

SCHEMA_VERSION = 1
FORMAT_TAG = "pocre-model"


class TableError(ValueError):
    pass


def atomic_write_text(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_table(path):
    """Return ``(header, matrix)``; raises :class:`TableError` if malformed."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    rows = [r for r in rows if r]
    if not rows:
        raise TableError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    data = np.empty((len(rows) - 1, width))
    for i, row in enumerate(rows[1:]):
        if len(row) != width:
            raise TableError(f"{path}: row {i + 2} has {len(row)} fields, header has {width}")
        try:
            data[i] = [float(c) for c in row]
        except ValueError as exc:
            raise TableError(f"{path}: row {i + 2}: {exc}") from None
    if data.shape[0] == 0:
        raise TableError(f"{path}: no data rows")
    if not np.all(np.isfinite(data)):
        raise TableError(f"{path}: non-finite values")
    return header, data


def format_table(header, matrix) -> str:
    lines = [",".join(header)]
    for row in np.atleast_2d(matrix):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_table(path, header, matrix):
    atomic_write_text(path, format_table(header, matrix))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _floats(a):
    return [float(v) for v in np.asarray(a).ravel()]


def _sparse(v):
    v = np.asarray(v, dtype=float)
    idx = np.flatnonzero(v)
    return {"index": [int(i) for i in idx], "value": _floats(v[idx])}


def model_to_dict(model: PocreModel, feature_names=None, response_names=None, provenance=None) -> dict:
    p, k = model.beta.shape
    rows, cols = np.nonzero(model.beta)
    return {
        "format": FORMAT_TAG,
        "schema_version": SCHEMA_VERSION,
        "lambda": model.lam,
        "standardize": model.standardized,
        "baseline_pls": model.baseline_pls,
        "stop_reason": model.stop_reason,
        "n_features": p,
        "n_responses": k,
        "feature_names": list(feature_names) if feature_names is not None else [f"x{i + 1}" for i in range(p)],
        "response_names": list(response_names) if response_names is not None else [f"y{i + 1}" for i in range(k)],
        "x_center": _floats(model.x_center),
        "x_scale": _floats(model.x_scale),
        "y_center": _floats(model.y_center),
        "components": [
            {
                "index": c.index,
                "omega": _sparse(c.omega),
                "Q": _floats(c.Q),
                "n_iter": c.n_iter,
                "converged": c.converged,
            }
            for c in model.components
        ],
        "beta_hat": {
            "row": [int(i) for i in rows],
            "col": [int(j) for j in cols],
            "value": _floats(model.beta[rows, cols]),
        },
        "intercept": _floats(model.intercept),
        "provenance": provenance or {},
    }


def model_from_dict(doc: dict):
    """Rebuild a model for prediction.

    Loaded components carry ``omega`` and ``Q`` only; scores and deflation
    rows are training-set quantities and are not persisted.
    """
    if doc.get("format") != FORMAT_TAG:
        raise ValueError("not a pocre model file")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    p, k = int(doc["n_features"]), int(doc["n_responses"])
    beta = np.zeros((p, k))
    bh = doc["beta_hat"]
    beta[np.array(bh["row"], dtype=int), np.array(bh["col"], dtype=int)] = np.array(bh["value"], dtype=float)
    comps = []
    for c in doc["components"]:
        omega = np.zeros(p)
        omega[np.array(c["omega"]["index"], dtype=int)] = np.array(c["omega"]["value"], dtype=float)
        comps.append(Component(int(c["index"]), omega, None, None, np.array(c["Q"], dtype=float), None,
                               int(c.get("n_iter", 0)), bool(c.get("converged", True))))
    model = PocreModel(
        tuple(comps), beta, np.array(doc["intercept"], dtype=float), float(doc["lambda"]), doc["stop_reason"],
        np.array(doc["x_center"], dtype=float), np.array(doc["x_scale"], dtype=float),
        np.array(doc["y_center"], dtype=float), bool(doc["standardize"]), bool(doc["baseline_pls"]),
    )
    return model, doc["feature_names"], doc["response_names"]


def save_model(path, model, feature_names=None, response_names=None, provenance=None):
    doc = model_to_dict(model, feature_names, response_names, provenance)
    atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))

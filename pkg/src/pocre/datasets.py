"""Small bundled example data."""

from importlib import resources

from .io import read_table


def tiny():
    """20 x 50 predictors with the noiseless response ``y = 2 * x1``.

    Returns ``(x_header, X, y_header, Y)``.
    """
    base = resources.files("pocre") / "data"
    with resources.as_file(base / "tiny_x.csv") as px, resources.as_file(base / "tiny_y.csv") as py:
        xh, X = read_table(px)
        yh, Y = read_table(py)
    return xh, X, yh, Y


def tiny_paths():
    base = resources.files("pocre") / "data"
    return base / "tiny_x.csv", base / "tiny_y.csv"

"""Input validation helpers used by the estimators and the functional API."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def check_data(X, *, min_rows: int = 2, d: int | None = None) -> np.ndarray:
    """Validate an n x d sample matrix and return it as a float ndarray.

    Parameters
    ----------
    X : array-like
        Observations, one row per point.
    min_rows : int
        Minimum number of observations required.
    d : int, optional
        Required dimension; any dimension >= 1 is accepted when omitted.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"data must be 2-dimensional (n x d), got shape {X.shape}")
    n, dim = X.shape
    if n < min_rows:
        raise DimensionError(f"need at least {min_rows} observations, got {n}")
    if dim < 1:
        raise DimensionError("data must have at least one column")
    if d is not None and dim != d:
        raise DimensionError(f"data must have d={d} columns, got {dim}")
    if not np.all(np.isfinite(X)):
        raise DimensionError("data contains non-finite entries")
    return X


def check_points(x, d: int, *, name: str = "points") -> np.ndarray:
    """Validate query points as an m x d matrix; a single d-vector is promoted."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != d:
        raise DimensionError(f"{name} must have shape (m, {d}), got {np.shape(x)}")
    if not np.all(np.isfinite(x)):
        raise DimensionError(f"{name} contains non-finite entries")
    return x[0] if single else x

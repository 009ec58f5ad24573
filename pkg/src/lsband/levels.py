"""Probability content of super-level sets and the tau-level inversion.

The content functional is psi(f, y) = integral of f over {f >= y}, computed
by the midpoint rule on a rectangular grid of cell centers.  The tau-level
f_tau (the level whose super-level set holds probability 1 - tau) is found
by binary search on y, which for d = 2 is the fastest of the standard
approaches; a resampling estimate is provided as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kde
from .bandwidth import Bandwidth
from .errors import GridCoverageError
from .validation import check_data

_MIN_QUADRATURE_COUNTS = 64
_BOUNDARY_LEVEL_FACTOR = 1e-3
_DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class EvalGrid:
    """Rectangular evaluation grid of cell centers for midpoint quadrature.

    Nodes along axis k are ``x_min[k] + (i + 1/2) dx[k]`` so every node owns
    one cell of area ``cell_area``.  ``values`` optionally caches a field
    evaluated at the nodes, indexed ``values[ix, iy]``.
    """

    x_min: np.ndarray
    x_max: np.ndarray
    counts: tuple
    values: np.ndarray | None = dc_field(default=None, compare=False)

    def __post_init__(self):
        lo = np.asarray(self.x_min, dtype=float)
        hi = np.asarray(self.x_max, dtype=float)
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("x_min and x_max must be vectors of equal length")
        if len(counts) != lo.size:
            raise ValueError("counts must give one node count per axis")
        if np.any(hi <= lo):
            raise ValueError("x_max must exceed x_min on every axis")
        if any(c < 2 for c in counts):
            raise ValueError("counts must be >= 2 per axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "x_min", lo)
        object.__setattr__(self, "x_max", hi)
        object.__setattr__(self, "counts", counts)
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float).reshape(self.shape)
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return self.x_min.size

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def spacing(self) -> np.ndarray:
        return (self.x_max - self.x_min) / np.asarray(self.counts, dtype=float)

    @property
    def cell_area(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def axes(self) -> tuple:
        dx = self.spacing
        return tuple(
            self.x_min[k] + dx[k] * (np.arange(self.counts[k]) + 0.5)
            for k in range(self.d)
        )

    def points(self) -> np.ndarray:
        """All nodes as an (N, d) array in C order of the index tuple."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def evaluate(self, fn) -> np.ndarray:
        """Evaluate a callable field on the nodes, shaped like ``shape``."""
        return np.asarray(fn(self.points()), dtype=float).reshape(self.shape)

    def with_values(self, field) -> "EvalGrid":
        """New grid carrying cached node values (callable or array)."""
        vals = field if not callable(field) else self.evaluate(field)
        return EvalGrid(self.x_min, self.x_max, self.counts, values=vals)

    @classmethod
    def from_box(cls, x_min, x_max, counts=256) -> "EvalGrid":
        x_min = np.atleast_1d(np.asarray(x_min, dtype=float))
        counts = (counts,) * x_min.size if np.isscalar(counts) else tuple(counts)
        return cls(x_min, np.atleast_1d(np.asarray(x_max, dtype=float)), counts)

    @classmethod
    def for_data(cls, data, H: Bandwidth | None = None, counts=256, pad_sigmas: float = 4.0) -> "EvalGrid":
        """Data bounding box expanded by ``pad_sigmas`` kernel standard deviations.

        With the default padding the Gaussian kernel tails at the boundary are
        below 1e-4 of their peak.
        """
        data = check_data(data)
        pad = pad_sigmas * np.sqrt(H.max_eigenvalue) if H is not None else 0.0
        lo = data.min(axis=0) - pad
        hi = data.max(axis=0) + pad
        counts = (counts,) * data.shape[1] if np.isscalar(counts) else tuple(counts)
        return cls(lo, hi, counts)


def field_values(field, grid: EvalGrid) -> np.ndarray:
    """Resolve a field (callable, array, or None for the cache) to node values."""
    if field is None:
        if grid.values is None:
            raise ValueError("no field supplied and the grid carries no cached values")
        return grid.values
    if callable(field):
        return grid.evaluate(field)
    return np.asarray(field, dtype=float).reshape(grid.shape)


def _boundary_max(values: np.ndarray) -> float:
    return float(
        max(
            values[0, :].max(),
            values[-1, :].max(),
            values[:, 0].max(),
            values[:, -1].max(),
        )
    )


def _check_quadrature_grid(grid: EvalGrid):
    if any(c < _MIN_QUADRATURE_COUNTS for c in grid.counts):
        raise GridCoverageError(
            f"quadrature needs >= {_MIN_QUADRATURE_COUNTS} nodes per axis, got {grid.counts}"
        )


def probability_content(field, level: float, grid: EvalGrid, *, check_coverage: bool = True) -> float:
    """Midpoint-rule mass of the super-level set, sum of f over {f >= level}.

    Raises
    ------
    GridCoverageError
        If the grid is too coarse, or (for positive levels) the set
        {f >= level} appears to leak through the grid boundary.
    """
    if level < 0.0:
        raise ValueError(f"level must be >= 0, got {level}")
    _check_quadrature_grid(grid)
    values = field_values(field, grid)
    if check_coverage and level > 0.0 and _boundary_max(values) >= level * _BOUNDARY_LEVEL_FACTOR:
        raise GridCoverageError(
            "grid boundary values are not negligible relative to the level; enlarge the box"
        )
    mask = values >= level
    return float(values[mask].sum() * grid.cell_area)


def tau_level(field, tau: float, grid: EvalGrid, tol: float = _DEFAULT_TOL) -> float:
    """Invert the content functional: the level whose super-level set has mass 1 - tau.

    Binary search over (0, max field value]; terminates when the bracket is
    narrower than ``tol`` times the maximum value.  The result is the upper
    end of the bracket, the smallest level verified to satisfy
    psi(f, y) <= 1 - tau.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    _check_quadrature_grid(grid)
    values = field_values(field, grid)
    fmax = float(values.max())
    if fmax <= 0.0:
        raise ValueError("field is nonpositive everywhere; no level exists")

    def content(y):
        return probability_content(values, y, grid, check_coverage=False)

    target = 1.0 - tau
    lo, hi = 0.0, fmax
    if content(fmax) > target:
        hi = lo = fmax
    while hi - lo > tol * fmax:
        mid = 0.5 * (lo + hi)
        if content(mid) <= target:
            hi = mid
        else:
            lo = mid
    if _boundary_max(values) >= hi * _BOUNDARY_LEVEL_FACTOR:
        raise GridCoverageError(
            "tau-level is not negligibly above the grid boundary values; enlarge the box"
        )
    return hi


def tau_level_resample(data, H: Bandwidth, tau: float, M: int, seed) -> float:
    """Resampling estimate of the KDE tau-level.

    Draws M points from the KDE itself and returns the empirical tau-quantile
    of the KDE values at those points.  Requires M >= 1000; accuracy improves
    with M.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if M < 1000:
        raise ValueError(f"M must be >= 1000, got {M}")
    data = check_data(data, min_rows=1)
    draws = kde.kde_sample(data, H, M, seed)
    vals = kde.kde_density(data, H, draws)
    return float(np.quantile(vals, tau))

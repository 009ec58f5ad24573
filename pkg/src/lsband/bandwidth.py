"""Bandwidth matrices and Gaussian kernel constants.

A bandwidth is a symmetric positive definite d x d matrix H together with a
class tag recording the structure it was chosen from: ``scalar`` (h^2 I),
``diagonal``, or ``full``.  The spectral quantities needed by the kernel
density estimator (H^{-1}, H^{-1/2}, |H|^{1/2}) are computed once at
construction because they are reused across thousands of query points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBandwidth

SCALAR = "scalar"
DIAGONAL = "diagonal"
FULL = "full"

_CLASSES = (SCALAR, DIAGONAL, FULL)

_SYM_RTOL = 1e-12
_CLASS_RTOL = 1e-9


@dataclass(frozen=True)
class Bandwidth:
    """Symmetric positive definite bandwidth matrix with a structure tag."""

    matrix: np.ndarray
    klass: str = FULL
    inv: np.ndarray = field(init=False, repr=False, compare=False)
    inv_sqrt: np.ndarray = field(init=False, repr=False, compare=False)
    det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        H = np.array(self.matrix, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise InvalidBandwidth(f"bandwidth matrix must be square, got {H.shape}")
        scale = np.max(np.abs(H))
        if not np.isfinite(scale) or scale == 0.0:
            raise InvalidBandwidth("bandwidth matrix must be finite and nonzero")
        if np.max(np.abs(H - H.T)) > _SYM_RTOL * scale:
            raise InvalidBandwidth("bandwidth matrix is not symmetric")
        H = 0.5 * (H + H.T)
        evals, evecs = np.linalg.eigh(H)
        if np.min(evals) <= 0.0:
            raise InvalidBandwidth(f"bandwidth matrix is not positive definite: eigenvalues {evals}")
        if self.klass not in _CLASSES:
            raise InvalidBandwidth(f"unknown bandwidth class {self.klass!r}")
        off = H - np.diag(np.diag(H))
        if self.klass in (SCALAR, DIAGONAL) and np.max(np.abs(off)) > _CLASS_RTOL * scale:
            raise InvalidBandwidth(f"class {self.klass!r} requires a diagonal matrix")
        if self.klass == SCALAR and np.ptp(np.diag(H)) > _CLASS_RTOL * scale:
            raise InvalidBandwidth("class 'scalar' requires equal diagonal entries")
        H.setflags(write=False)
        object.__setattr__(self, "matrix", H)
        inv = evecs @ np.diag(1.0 / evals) @ evecs.T
        inv_sqrt = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
        for a in (inv, inv_sqrt):
            a.setflags(write=False)
        object.__setattr__(self, "inv", inv)
        object.__setattr__(self, "inv_sqrt", inv_sqrt)
        object.__setattr__(self, "det", float(np.prod(evals)))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def det_sqrt(self) -> float:
        """|H|^{1/2}."""
        return float(np.sqrt(self.det))

    @property
    def max_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[-1])

    @property
    def is_axis_aligned(self) -> bool:
        """True when off-diagonal entries are exactly zero (fast grid path)."""
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.all(off == 0.0))

    @classmethod
    def scalar(cls, h: float, d: int = 2) -> "Bandwidth":
        """Bandwidth h^2 I for a positive smoothing scale h."""
        h = float(h)
        if h <= 0.0:
            raise InvalidBandwidth(f"scalar bandwidth h must be positive, got {h}")
        return cls(h * h * np.eye(d), SCALAR)

    @classmethod
    def diagonal(cls, h) -> "Bandwidth":
        """Bandwidth diag(h_1^2, ..., h_d^2) from per-axis smoothing scales."""
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0.0):
            raise InvalidBandwidth("diagonal bandwidth scales must be positive")
        return cls(np.diag(h * h), DIAGONAL)

    @classmethod
    def full(cls, matrix) -> "Bandwidth":
        return cls(np.asarray(matrix, dtype=float), FULL)

    def scaled(self, factor: float) -> "Bandwidth":
        """Same class, matrix multiplied by a positive factor."""
        if factor <= 0.0:
            raise InvalidBandwidth("scale factor must be positive")
        return Bandwidth(self.matrix * factor, self.klass)


def as_bandwidth(value, d: int = 2) -> Bandwidth:
    """Coerce a float, per-axis vector, matrix, or Bandwidth into a Bandwidth.

    Floats are read as the smoothing scale h of the scalar class h^2 I and
    d-vectors as per-axis scales of the diagonal class; square matrices are
    taken verbatim with the full tag.
    """
    if isinstance(value, Bandwidth):
        return value
    if np.isscalar(value):
        return Bandwidth.scalar(float(value), d)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        return Bandwidth.diagonal(arr)
    return Bandwidth.full(arr)


@dataclass(frozen=True)
class KernelConstants:
    """Roughness and second moment of the kernel in dimension d."""

    r_k: float
    mu2_k: float
    d: int


def kernel_constants(d: int) -> KernelConstants:
    """Constants of the standard d-variate Gaussian kernel.

    The roughness is R(K) = (4 pi)^{-d/2} and the second moment mu2(K) = 1.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return KernelConstants(r_k=float((4.0 * np.pi) ** (-d / 2.0)), mu2_k=1.0, d=d)

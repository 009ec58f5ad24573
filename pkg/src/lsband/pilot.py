"""Pilot bandwidth matrices for the density, gradient, and Hessian estimates.

Each pilot has the covariance-scaled form H_r = h_r^2 S with S the sample
covariance, which pins the orientation and leaves a single scale h_r chosen
by a two-stage direct plug-in rule on whitened data:

  stage 1  estimate the integrated squared derivative functional
           psi_r = (-1)^r E[laplacian^{r+2} f(X)] with a kernel functional
           estimator whose own bandwidth g_r comes from a normal-reference
           bias-balancing rule;
  stage 2  plug psi_r into the asymptotic-MISE-optimal scale for
           estimating r-th derivatives,
           h_r^{d+2r+4} = (d+2r) V_r / (mu2^2 psi_r n).

The resulting rates h_r^2 ~ n^{-2/(d+2r+4)} are what the selector theory
requires of the pilots; the constants are normal-reference quality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bandwidth import Bandwidth
from .errors import DegenerateSample
from .validation import check_data

_PAIR_BLOCK = 512
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PilotBandwidths:
    """Pilot bandwidths for estimating f, grad f, and the Hessian of f."""

    h0: Bandwidth
    h1: Bandwidth
    h2: Bandwidth

    def as_tuple(self):
        return (self.h0, self.h1, self.h2)

    @property
    def max_eigenvalue(self) -> float:
        return max(b.max_eigenvalue for b in self.as_tuple())


def _pochhammer_half_d(d: int, k: int) -> float:
    """(d/2)(d/2 + 1) ... (d/2 + k - 1)."""
    out = 1.0
    for i in range(k):
        out *= d / 2.0 + i
    return out


def _laplacian_poly(m: int, d: int) -> np.ndarray:
    """Coefficients (low order first) of p_m with laplacian^m phi = g^{-2m} p_m(|u/g|^2) phi.

    Recurrence from the product rule:
    p_{m+1}(t) = 4 t p_m'' + (2d - 4t) p_m' + (t - d) p_m.
    """
    p = np.polynomial.Polynomial([1.0])
    t = np.polynomial.Polynomial([0.0, 1.0])
    for _ in range(m):
        p = 4.0 * t * p.deriv(2) + (2.0 * d - 4.0 * t) * p.deriv(1) + (t - d) * p
    return p.coef


def stage_one_bandwidth(n: int, d: int, r: int) -> float:
    """Normal-reference pilot scale for the stage-1 functional of order r.

    Balances the estimator's diagonal term against its leading smoothing
    bias under a standard-normal reference.
    """
    m = r + 2
    return float((2.0 ** (m + 1 + d / 2.0) / ((d / 2.0 + m) * n)) ** (1.0 / (d + 2 * m + 2)))


# oversmoothing factor for the default stage-1 estimate; the normal-reference
# calibration below removes the bias it would otherwise introduce
_STAGE_ONE_SCALE = 2.0


def _reference_functional(d: int, m: int) -> float:
    """psi value of the standard d-variate normal, (4 pi)^{-d/2} (d/2)_m."""
    return (4.0 * np.pi) ** (-d / 2.0) * _pochhammer_half_d(d, m) / 1.0


def _reference_expectation(n: int, d: int, m: int, g: float) -> float:
    """Exact expectation of the raw estimator under a standard-normal sample.

    The diagonal contributes the data-free term n^{-1} laplacian^m phi_g(0)
    and an off-diagonal pair has the closed-form Gaussian-convolution value.
    """
    orders = 2.0**m * _pochhammer_half_d(d, m)
    diag = (_TWO_PI) ** (-d / 2.0) * g ** (-d - 2 * m) * orders / n
    smooth = (_TWO_PI) ** (-d / 2.0) * (2.0 + g * g) ** (-d / 2.0 - m) * orders
    return diag + (1.0 - 1.0 / n) * smooth


def _pair_rho2(left: np.ndarray, right: np.ndarray, g: float) -> np.ndarray:
    sq = (
        np.sum(left * left, axis=1)[:, None]
        + np.sum(right * right, axis=1)[None, :]
        - 2.0 * (left @ right.T)
    )
    np.maximum(sq, 0.0, out=sq)
    sq /= g * g
    return sq


def _raw_functional(X: np.ndarray, r: int, g: float) -> float:
    """Double sum over all ordered pairs, computed from the strict upper triangle."""
    n, d = X.shape
    m = r + 2
    coef = _laplacian_poly(m, d)

    def kernel_sum(rho2):
        return float(np.sum(np.polynomial.polynomial.polyval(rho2, coef) * np.exp(-0.5 * rho2)))

    upper = 0.0
    for a in range(0, n, _PAIR_BLOCK):
        b = min(a + _PAIR_BLOCK, n)
        block = X[a:b]
        iu = np.triu_indices(b - a, k=1)
        upper += kernel_sum(_pair_rho2(block, block, g)[iu])
        if b < n:
            upper += kernel_sum(_pair_rho2(block, X[b:], g))
    diagonal = n * coef[0]  # p_m(0) at zero distance
    norm = (_TWO_PI) ** (-d / 2.0) * g ** (-d - 2 * m)
    return float((-1.0) ** r * norm * (2.0 * upper + diagonal) / (n * n))


def normal_scale_functional(data, r: int, g: float | None = None) -> float:
    """Kernel estimate of psi_r = (-1)^r E[laplacian^{r+2} f(X)].

    The core is the full double sum (diagonal included)

        (-1)^r n^{-2} sum_{i,j} laplacian^{r+2} phi_g(X_i - X_j),

    which is positive by construction and, for a fixed g, exactly invariant
    under duplicating the data set.  An explicit ``g`` returns that raw sum.
    When ``g`` is omitted, the bandwidth is the normal-reference rule
    oversmoothed by a fixed factor and the raw sum is rescaled so that a
    standard-normal sample is estimated without bias; the rescaling tends
    to 1 as n grows, so consistency and the plug-in rates are unaffected.
    """
    X = check_data(data)
    n, d = X.shape
    if r not in (0, 1, 2):
        raise ValueError(f"r must be 0, 1, or 2, got {r}")
    if g is not None:
        return _raw_functional(X, r, g)
    m = r + 2
    g = stage_one_bandwidth(n, d, r) * _STAGE_ONE_SCALE
    raw = _raw_functional(X, r, g)
    return raw * _reference_functional(d, m) / _reference_expectation(n, d, m, g)


def _whitening(S: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(S)
    if evals[0] <= 1e-12 * evals[-1]:
        raise DegenerateSample(f"sample covariance is rank deficient: eigenvalues {evals}")
    return evecs @ np.diag(evals ** -0.5) @ evecs.T


def pilot_bandwidths(data) -> PilotBandwidths:
    """Two-stage plug-in pilots H_0, H_1, H_2 of the form h_r^2 S.

    Requires n >= 10 and d = 2 (the selection pipeline is 2-D).  The rules
    are exactly translation invariant and equivariant under nonsingular
    linear maps because all scale information enters through S.
    """
    X = check_data(data, min_rows=10, d=2)
    n, d = X.shape
    S = np.cov(X, rowvar=False, ddof=1)
    Y = (X - X.mean(axis=0)) @ _whitening(S)
    mu2 = 1.0  # second moment of the Gaussian kernel
    roughness = (4.0 * np.pi) ** (-d / 2.0)
    scales = []
    for r in range(3):
        psi_hat = normal_scale_functional(Y, r)
        v_r = roughness * _pochhammer_half_d(d, r)
        h = ((d + 2 * r) * v_r / (mu2 * mu2 * psi_hat * n)) ** (1.0 / (d + 2 * r + 4))
        scales.append(h)
    h0, h1, h2 = (Bandwidth(h * h * S) for h in scales)
    return PilotBandwidths(h0, h1, h2)

"""Asymptotic risk approximations for level-set and HDR estimation.

Both risks integrate the same kernel of normal-tail mass along the iso-curve:

    risk = (level / sqrt(n |H|^{1/2})) * sum_i psi(t_i) / (-A_i) * len_i,

where psi(b) = 2 phi(b) + 2 Phi(b) b - b, A_i = -|grad f(x_i)| / sqrt(R_K c),
and t_i is B_i (fixed level) or C_i = B_i + level-estimation bias (HDR).
The HDR correction D2 = w0 (V1 + V2) accounts for the level itself being
estimated.  All curve integrals share one contour partition so that LS and
HDR values are discretization-consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .bandwidth import Bandwidth, KernelConstants, kernel_constants
from .contour import Contour, attach_normals, extract_contour
from .levels import EvalGrid, field_values, probability_content, tau_level

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def psi_term(b):
    """Normal-tail kernel 2 phi(b) + 2 Phi(b) b - b; even and strictly positive.

    Equals -a times the integral of |Phi(a x + b) - 1{x < 0}| over the line
    for any a < 0, which is how segment contributions arise.
    """
    b = np.asarray(b, dtype=float)
    phi = np.exp(-0.5 * b * b) / _SQRT_2PI
    out = 2.0 * phi + 2.0 * ndtr(b) * b - b
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RiskInputs:
    """Everything the risk formulas need besides the candidate bandwidth.

    Per-segment gradient norms and Hessians are tabulated at the contour
    midpoints; the region Hessian matrix is the integral of the Hessian
    field over the super-level set (HDR only).  Bandwidth-dependent traces
    are recomputed inside the risk evaluations.
    """

    n: int
    level: float
    contour: Contour
    grad_norms: np.ndarray          # (m,)
    hessians: np.ndarray            # (m, d, d)
    constants: KernelConstants
    region_hessian: np.ndarray | None = None  # (d, d), integral over the region

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.level <= 0.0:
            raise ValueError("level must be positive")
        grad = np.asarray(self.grad_norms, dtype=float)
        if grad.shape != (self.contour.n_segments,):
            raise ValueError("grad_norms must have one entry per contour segment")
        if np.any(grad <= 0.0):
            raise ValueError("gradient norms must be positive on the contour")
        hess = np.asarray(self.hessians, dtype=float)
        if hess.shape[0] != self.contour.n_segments:
            raise ValueError("hessians must have one matrix per contour segment")
        for arr in (grad, hess):
            arr.setflags(write=False)
        object.__setattr__(self, "grad_norms", grad)
        object.__setattr__(self, "hessians", hess)
        if self.region_hessian is not None:
            rh = np.asarray(self.region_hessian, dtype=float)
            rh.setflags(write=False)
            object.__setattr__(self, "region_hessian", rh)


@dataclass(frozen=True)
class RiskReport:
    """Risk value with its exact per-segment decomposition."""

    risk: float
    a_x: np.ndarray
    b_or_c: np.ndarray
    contributions: np.ndarray
    aux: dict

    def to_dict(self) -> dict:
        return {
            "risk": self.risk,
            "per_segment": [
                {"a_x": float(a), "b_or_c": float(b), "contribution": float(c)}
                for a, b, c in zip(self.a_x, self.b_or_c, self.contributions)
            ],
            "aux": {k: float(v) for k, v in self.aux.items()},
        }


def _d1_all(H: Bandwidth, inputs: RiskInputs) -> np.ndarray:
    """(1/2) mu2(K) tr(H hess_i) for every segment."""
    traces = np.einsum("ij,mij->m", H.matrix, inputs.hessians)
    return 0.5 * inputs.constants.mu2_k * traces


def d1(index: int, H: Bandwidth, inputs: RiskInputs) -> float:
    """Smoothing-bias term (1/2) mu2(K) tr(H hess) at one contour midpoint."""
    return float(_d1_all(H, inputs)[index])


def _scale(H: Bandwidth, inputs: RiskInputs) -> float:
    """sqrt(n |H|^{1/2})."""
    return float(np.sqrt(inputs.n * H.det_sqrt))


def _assemble(H: Bandwidth, inputs: RiskInputs, shift: float, aux: dict) -> RiskReport:
    s = _scale(H, inputs)
    level = inputs.level
    root = np.sqrt(inputs.constants.r_k * level)
    a_x = -inputs.grad_norms / root
    b = -s * _d1_all(H, inputs) / root
    t = b + shift
    contributions = (level / s) * psi_term(t) / (-a_x) * inputs.contour.lengths
    return RiskReport(
        risk=float(contributions.sum()),
        a_x=a_x,
        b_or_c=t,
        contributions=contributions,
        aux=aux,
    )


def ls_risk(H: Bandwidth, inputs: RiskInputs) -> RiskReport:
    """Asymptotic symmetric-difference risk for estimating a fixed-level set."""
    return _assemble(H, inputs, 0.0, aux={})


def hdr_risk(H: Bandwidth, inputs: RiskInputs) -> RiskReport:
    """Asymptotic risk for HDR estimation, including the level-estimation bias.

    Requires ``inputs.region_hessian``.  The bias enters through
    C_i = B_i + sqrt(n |H|^{1/2} / (R_K f_tau)) D2(H) with
    D2 = w0 (V1 + V2).
    """
    if inputs.region_hessian is None:
        raise ValueError("hdr_risk requires the region Hessian integral")
    lens = inputs.contour.lengths
    grad = inputs.grad_norms
    d1_vals = _d1_all(H, inputs)
    w0 = 1.0 / float(np.dot(lens, 1.0 / grad))
    v1 = float(np.dot(lens, d1_vals / grad))
    v2 = (
        0.5
        * inputs.constants.mu2_k
        * float(np.einsum("ij,ij->", H.matrix, inputs.region_hessian))
        / inputs.level
    )
    d2 = w0 * (v1 + v2)
    shift = _scale(H, inputs) / np.sqrt(inputs.constants.r_k * inputs.level) * d2
    return _assemble(H, inputs, shift, aux={"w0": w0, "v1": v1, "v2": v2, "d2": d2})


def region_hessian_matrix(field, hessian, level: float, grid: EvalGrid) -> np.ndarray:
    """Integral of the Hessian field over {f >= level}, a d x d matrix.

    ``field`` supplies the membership values on the grid; ``hessian`` maps
    (m, d) points to (m, d, d) matrices and is only evaluated inside the
    region.  Midpoint rule throughout.
    """
    values = field_values(field, grid)
    # reuse the boundary-coverage guard from the content functional
    probability_content(values, level, grid)
    mask = (values >= level).ravel()
    if not mask.any():
        return np.zeros((grid.d, grid.d))
    pts = grid.points()[mask]
    hess = np.asarray(hessian(pts), dtype=float)
    return hess.sum(axis=0) * grid.cell_area


def region_hess_integral(field, hessian, level: float, H: Bandwidth, grid: EvalGrid) -> float:
    """Midpoint quadrature of tr(H grad^2 f) over the super-level set."""
    return float(np.einsum("ij,ij->", H.matrix, region_hessian_matrix(field, hessian, level, grid)))


def build_risk_inputs(
    n: int,
    grid: EvalGrid,
    *,
    gradient,
    hessian,
    level_field=None,
    contour_field=None,
    level: float | None = None,
    tau: float | None = None,
    include_region: bool = True,
    level_tol: float = 1e-6,
    constants: KernelConstants | None = None,
) -> RiskInputs:
    """Tabulate risk inputs from density, gradient, and Hessian fields.

    The same assembly serves the plug-in pipeline (pilot KDE fields) and
    oracle evaluation (exact mixture fields): the level and the region
    membership come from ``level_field``, the contour is extracted from
    ``contour_field`` (defaulting to ``level_field``) at that level, and
    gradient norms and Hessians are evaluated at the segment midpoints.

    Exactly one of ``level`` and ``tau`` must be given; with ``tau`` the
    level is computed by binary search on ``level_field``.
    """
    if (level is None) == (tau is None):
        raise ValueError("supply exactly one of level and tau")
    if constants is None:
        constants = kernel_constants(grid.d)
    if level_field is None and contour_field is None:
        raise ValueError("a level or contour field is required")
    lvl_values = field_values(level_field, grid) if level_field is not None else None
    if tau is not None:
        if lvl_values is None:
            raise ValueError("tau mode requires level_field")
        level = tau_level(lvl_values, tau, grid, tol=level_tol)
    cont_values = lvl_values if contour_field is None else field_values(contour_field, grid)
    cont = extract_contour(cont_values, level, grid)
    cont = attach_normals(cont, gradient)
    g = np.asarray(gradient(cont.midpoints), dtype=float)
    grad_norms = np.hypot(g[:, 0], g[:, 1])
    hess = np.asarray(hessian(cont.midpoints), dtype=float)
    region = None
    if include_region:
        if lvl_values is None:
            raise ValueError("the region integral requires level_field")
        region = region_hessian_matrix(lvl_values, hessian, level, grid)
    return RiskInputs(
        n=n,
        level=float(level),
        contour=cont,
        grad_norms=grad_norms,
        hessians=hess,
        constants=constants,
        region_hessian=region,
    )

"""Plug-in bandwidth selection, the LSCV baseline, and HDR estimation.

The plug-in selector estimates the asymptotic risk by replacing the unknown
density, gradient, and Hessian with three pilot KDEs, extracts the pilot
iso-curve once, and then minimizes the resulting (cheap) function of the
candidate bandwidth over an unconstrained parametrization of the chosen
matrix class.  Positive definiteness holds by construction: scalar and
diagonal classes are parametrized by log scales and the full class by a
log-Cholesky factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import minimize

from . import kde
from .bandwidth import Bandwidth, DIAGONAL, FULL, SCALAR, as_bandwidth
from .errors import NoConvergence
from .levels import EvalGrid, tau_level
from .contour import Contour, attach_normals, extract_contour
from .pilot import PilotBandwidths, pilot_bandwidths
from .risk import RiskInputs, RiskReport, build_risk_inputs, hdr_risk, ls_risk
from .validation import check_data, check_points

_FD_STEP = 1e-4
_DEFAULT_STARTS_SCALES = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class SelectorConfig:
    """Target, bandwidth class, grid, and optimizer settings for selection."""

    target: str = "hdr"               # "hdr" or "ls"
    tau: float | None = None
    level: float | None = None
    klass: str = SCALAR
    grid: EvalGrid | None = None
    grid_counts: int = 256
    optimizer: str = "newton"         # "newton" (with fallback) or "nelder_mead"
    starts: tuple = ()                # explicit start bandwidths; empty = pilot rule
    max_iter: int = 100
    tol: float = 1e-8
    level_tol: float = 1e-6

    def __post_init__(self):
        if self.target not in ("hdr", "ls"):
            raise ValueError(f"target must be 'hdr' or 'ls', got {self.target!r}")
        if self.target == "hdr":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError("hdr target requires tau in (0, 1)")
        else:
            if self.level is None or self.level <= 0.0:
                raise ValueError("ls target requires a positive level")
        if self.klass not in (SCALAR, DIAGONAL, FULL):
            raise ValueError(f"unknown bandwidth class {self.klass!r}")
        if self.optimizer not in ("newton", "nelder_mead"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SelectionResult:
    """Selected bandwidth with its optimization trail and diagnostics."""

    h_opt: Bandwidth
    risk: float
    trace: tuple                      # ((d x d matrix, risk), ...)
    converged: bool
    restarts_used: int
    pilots: PilotBandwidths | None = None
    f_tau_hat: float | None = None

    def to_dict(self) -> dict:
        return {
            "H": self.h_opt.matrix.tolist(),
            "risk": self.risk,
            "converged": self.converged,
            "trace": [
                {"H": np.asarray(H).tolist(), "risk": float(r)} for H, r in self.trace
            ],
            "f_tau_hat": self.f_tau_hat,
        }


# --- bandwidth-class parametrizations (SPD by construction) ---------------

def _theta_to_bandwidth(theta: np.ndarray, klass: str) -> Bandwidth:
    if klass == SCALAR:
        return Bandwidth.scalar(float(np.exp(theta[0])))
    if klass == DIAGONAL:
        return Bandwidth.diagonal(np.exp(theta))
    L = np.array([[np.exp(theta[0]), 0.0], [theta[2], np.exp(theta[1])]])
    return Bandwidth(L @ L.T, FULL)


def _bandwidth_to_theta(H: Bandwidth, klass: str) -> np.ndarray:
    M = H.matrix
    if klass == SCALAR:
        # preserve |H| when projecting to h^2 I
        return np.array([0.25 * np.log(H.det)])
    if klass == DIAGONAL:
        return 0.5 * np.log(np.diag(M))
    L = np.linalg.cholesky(M)
    return np.array([np.log(L[0, 0]), np.log(L[1, 1]), L[1, 0]])


# --- Newton with finite differences and Nelder-Mead fallback --------------

def _fd_gradient(fn, theta, h=_FD_STEP):
    p = theta.size
    g = np.empty(p)
    for i in range(p):
        e = np.zeros(p)
        e[i] = h
        g[i] = (fn(theta + e) - fn(theta - e)) / (2.0 * h)
    return g

def _fd_hessian(fn, theta, h=_FD_STEP):
    p = theta.size
    H = np.empty((p, p))
    f0 = fn(theta)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        H[i, i] = (fn(theta + ei) - 2.0 * f0 + fn(theta - ei)) / (h * h)
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = h
            H[i, j] = H[j, i] = (
                fn(theta + ei + ej) - fn(theta + ei - ej) - fn(theta - ei + ej) + fn(theta - ei - ej)
            ) / (4.0 * h * h)
    return H

def _newton(fn, theta0, max_iter, tol, record):
    theta = np.asarray(theta0, dtype=float).copy()
    f = fn(theta)
    record(theta, f)
    for _ in range(max_iter):
        g = _fd_gradient(fn, theta)
        if not np.all(np.isfinite(g)):
            return theta, f, False
        H = _fd_hessian(fn, theta)
        step = None
        if np.all(np.isfinite(H)):
            try:
                cand = np.linalg.solve(H, -g)
                if np.dot(cand, g) < 0.0:  # descent direction only
                    step = cand
            except np.linalg.LinAlgError:
                step = None
        if step is None:
            scale = max(1.0, float(np.linalg.norm(g)))
            step = -g / scale
        alpha, f_new, theta_new = 1.0, None, None
        for _ in range(30):
            trial = theta + alpha * step
            f_trial = fn(trial)
            if np.isfinite(f_trial) and f_trial < f:
                f_new, theta_new = f_trial, trial
                break
            alpha *= 0.5
        if theta_new is None:
            # no decrease along the Newton or gradient direction: stationary
            return theta, f, bool(np.linalg.norm(g) <= 1e-5 * max(1.0, abs(f)))
        moved = np.linalg.norm(theta_new - theta)
        improved = f - f_new
        theta, f = theta_new, f_new
        record(theta, f)
        if improved <= tol * max(1.0, abs(f)) and moved <= 1e-6:
            return theta, f, True
    return theta, f, False

def _nelder_mead(fn, theta0, max_iter, tol, record):
    res = minimize(
        fn,
        theta0,
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": tol, "maxiter": max(200, 50 * max_iter)},
    )
    record(res.x, float(res.fun))
    return res.x, float(res.fun), bool(res.success)


def _optimize(fn, starts, klass, optimizer, max_iter, tol):
    """Multi-start minimization; returns best-seen point plus the full trace."""
    trace = []

    def record(theta, f):
        trace.append((_theta_to_bandwidth(theta, klass).matrix, float(f)))

    best = None
    restarts = 0
    any_converged = False
    for H0 in starts:
        restarts += 1
        theta0 = _bandwidth_to_theta(H0, klass)
        if optimizer == "newton":
            theta, f, ok = _newton(fn, theta0, max_iter, tol, record)
            if not ok:
                theta, f, ok = _nelder_mead(fn, theta, max_iter, tol, record)
        else:
            theta, f, ok = _nelder_mead(fn, theta0, max_iter, tol, record)
        any_converged = any_converged or ok
        key = (f, tuple(np.round(theta, 12)))
        if np.isfinite(f) and (best is None or key < best[0]):
            best = (key, theta, ok)
    if best is None or not any_converged:
        raise NoConvergence("no optimizer start converged", trace=trace)
    # the reported optimum is the best risk seen anywhere in the trace
    best_idx = int(np.argmin([r for _, r in trace]))
    H_best, risk_best = trace[best_idx]
    return Bandwidth(np.asarray(H_best), klass), float(risk_best), tuple(trace), True, restarts


# --- pilot field assembly ---------------------------------------------------

def build_pilot_inputs(data, config: SelectorConfig, pilots: PilotBandwidths) -> RiskInputs:
    """Risk inputs from the three pilot KDE fields (the plug-in step).

    The level (HDR) and region membership come from the H0 field, the
    iso-curve from the H1 field at that level, gradients from the H1 KDE,
    and Hessians from the H2 KDE.
    """
    data = check_data(data, min_rows=10, d=2)
    grid = config.grid
    if grid is None:
        pad_h = Bandwidth(pilots.max_eigenvalue * np.eye(2))
        grid = EvalGrid.for_data(data, pad_h, counts=config.grid_counts)
    f0_vals = kde.kde_field(data, pilots.h0, grid)
    f1_vals = kde.kde_field(data, pilots.h1, grid)
    gradient = lambda pts: kde.kde_gradient(data, pilots.h1, pts)
    hessian = lambda pts: kde.kde_hessian(data, pilots.h2, pts)
    if config.target == "hdr":
        return build_risk_inputs(
            data.shape[0],
            grid,
            gradient=gradient,
            hessian=hessian,
            level_field=f0_vals,
            contour_field=f1_vals,
            tau=config.tau,
            include_region=True,
            level_tol=config.level_tol,
        )
    return build_risk_inputs(
        data.shape[0],
        grid,
        gradient=gradient,
        hessian=hessian,
        contour_field=f1_vals,
        level=config.level,
        include_region=False,
        level_tol=config.level_tol,
    )


def estimated_risk(
    H: Bandwidth,
    data,
    config: SelectorConfig,
    pilots: PilotBandwidths | None = None,
    inputs: RiskInputs | None = None,
) -> RiskReport:
    """Plug-in estimate of the asymptotic risk at one candidate bandwidth.

    ``inputs`` short-circuits the pilot stage with prebuilt fields, which is
    both the caching hook for the optimizer and the oracle injection point
    for tests.
    """
    if inputs is None:
        if pilots is None:
            pilots = pilot_bandwidths(data)
        inputs = build_pilot_inputs(data, config, pilots)
    if config.target == "hdr":
        return hdr_risk(H, inputs)
    return ls_risk(H, inputs)


def _default_starts(H_ref: Bandwidth, klass: str):
    return tuple(
        _theta_to_bandwidth(_bandwidth_to_theta(H_ref.scaled(s), klass), klass)
        for s in _DEFAULT_STARTS_SCALES
    )


def select_bandwidth(data, config: SelectorConfig) -> SelectionResult:
    """Minimize the estimated risk over the configured bandwidth class.

    Multi-start Newton (finite-difference derivatives on the unconstrained
    parametrization) with a Nelder-Mead fallback; the default starts are the
    pilot H0 scaled by 0.5, 1, and 2.

    Raises
    ------
    NoConvergence
        If every start fails; the optimization trace is attached.
    """
    data = check_data(data, min_rows=10, d=2)
    pilots = pilot_bandwidths(data)
    inputs = build_pilot_inputs(data, config, pilots)
    risk_fn = hdr_risk if config.target == "hdr" else ls_risk

    def objective(theta):
        try:
            return risk_fn(_theta_to_bandwidth(theta, config.klass), inputs).risk
        except FloatingPointError:
            return np.inf

    starts = config.starts or _default_starts(pilots.h0, config.klass)
    h_opt, risk_val, trace, converged, restarts = _optimize(
        objective, starts, config.klass, config.optimizer, config.max_iter, config.tol
    )
    return SelectionResult(
        h_opt=h_opt,
        risk=risk_val,
        trace=trace,
        converged=converged,
        restarts_used=restarts,
        pilots=pilots,
        f_tau_hat=inputs.level if config.target == "hdr" else None,
    )


# --- LSCV baseline ----------------------------------------------------------

class _PairwiseProducts:
    """Cached pairwise coordinate products for the closed-form LSCV sums.

    Only the strict upper triangle is stored (the sums are symmetric and the
    diagonal pairs contribute the constant peak value), which halves both
    memory and the per-evaluation work.
    """

    _CACHE_LIMIT = 2500

    def __init__(self, data):
        self.data = data
        self.n = data.shape[0]
        self.cached = self.n <= self._CACHE_LIMIT
        if self.cached:
            iu, ju = np.triu_indices(self.n, k=1)
            dx = data[iu, 0] - data[ju, 0]
            dy = data[iu, 1] - data[ju, 1]
            self.prods = (dx * dx, dx * dy, dy * dy)
            self._scratch = np.empty_like(dx)

    def gaussian_sum(self, H: Bandwidth) -> float:
        """Sum over all ordered pairs (diagonal included) of N(0, H) at X_i - X_j."""
        M = H.inv
        norm = (2.0 * np.pi) ** (-1.0) / H.det_sqrt
        if self.cached:
            pxx, pxy, pyy = self.prods
            q = self._scratch
            np.multiply(pxx, -0.5 * M[0, 0], out=q)
            q -= M[0, 1] * pxy
            q -= 0.5 * M[1, 1] * pyy
            np.exp(q, out=q)
            return float(norm * (2.0 * q.sum() + self.n))
        total = 0.0
        X = self.data
        step = max(1, 4_000_000 // self.n)
        for a in range(0, self.n, step):
            dx = X[a : a + step, 0][:, None] - X[None, :, 0]
            dy = X[a : a + step, 1][:, None] - X[None, :, 1]
            q = M[0, 0] * dx * dx + 2.0 * M[0, 1] * dx * dy + M[1, 1] * dy * dy
            total += float(np.exp(-0.5 * q).sum())
        return norm * total


def lscv_criterion(pairs: _PairwiseProducts, H: Bandwidth) -> float:
    """Closed-form Gaussian LSCV score.

    (1/n^2) sum_{ij} N(0, 2H)(X_i - X_j)
      - 2 / (n (n-1)) sum_{i != j} N(0, H)(X_i - X_j).
    """
    n = pairs.n
    s2h = pairs.gaussian_sum(Bandwidth(2.0 * H.matrix, H.klass))
    sh_all = pairs.gaussian_sum(H)
    phi0 = (2.0 * np.pi) ** (-1.0) / H.det_sqrt
    sh_off = sh_all - n * phi0
    return s2h / (n * n) - 2.0 * sh_off / (n * (n - 1))


def lscv_bandwidth(data, klass: str = SCALAR, config: SelectorConfig | None = None) -> SelectionResult:
    """Least-squares cross-validation baseline over the same matrix classes.

    The ``risk`` field of the result holds the LSCV criterion value (an
    ISE estimate shifted by a bandwidth-free constant), not the level-set
    risk.
    """
    data = check_data(data, min_rows=10, d=2)
    n, d = data.shape
    pairs = _PairwiseProducts(data)

    def objective(theta):
        return lscv_criterion(pairs, _theta_to_bandwidth(theta, klass))

    # normal-scale reference start for the density (r = 0) rule
    S = np.cov(data, rowvar=False, ddof=1)
    H_ns = Bandwidth((4.0 / (d + 2)) ** (2.0 / (d + 4)) * n ** (-2.0 / (d + 4)) * S)
    optimizer = config.optimizer if config is not None else "newton"
    max_iter = config.max_iter if config is not None else 100
    tol = config.tol if config is not None else 1e-10
    starts = (config.starts if config is not None else ()) or _default_starts(H_ns, klass)
    h_opt, value, trace, converged, restarts = _optimize(
        objective, starts, klass, optimizer, max_iter, tol
    )
    return SelectionResult(
        h_opt=h_opt,
        risk=value,
        trace=trace,
        converged=converged,
        restarts_used=restarts,
    )


# --- HDR estimation and novelty detection -----------------------------------

@dataclass(frozen=True)
class HdrEstimate:
    """Estimated highest-density region for one data set and bandwidth."""

    contour: Contour
    f_tau_hat: float
    bandwidth: Bandwidth
    data: np.ndarray = dc_field(repr=False)

    def membership(self, points) -> np.ndarray:
        """True where the KDE meets or exceeds the estimated tau-level."""
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            return np.zeros(0, dtype=bool)
        vals = kde.kde_density(self.data, self.bandwidth, pts)
        return np.atleast_1d(vals) >= self.f_tau_hat


def hdr_estimate(data, H, tau: float, grid: EvalGrid | None = None, grid_counts: int = 256) -> HdrEstimate:
    """Plug-in HDR at probability content 1 - tau: level, boundary, membership."""
    data = check_data(data, d=2)
    H = as_bandwidth(H, 2)
    if grid is None:
        grid = EvalGrid.for_data(data, H, counts=grid_counts)
    field = kde.kde_field(data, H, grid)
    f_tau = tau_level(field, tau, grid)
    cont = extract_contour(field, f_tau, grid)
    cont = attach_normals(cont, lambda pts: kde.kde_gradient(data, H, pts))
    return HdrEstimate(contour=cont, f_tau_hat=f_tau, bandwidth=H, data=data)


@dataclass(frozen=True)
class NoveltyResult:
    accept: np.ndarray
    f_tau_hat: float
    bandwidth: Bandwidth
    fpr: float | None = None
    tpr: float | None = None


def novelty_classify(
    train,
    tau: float,
    test,
    H="auto",
    labels=None,
    klass: str = DIAGONAL,
    grid_counts: int = 256,
) -> NoveltyResult:
    """Accept points inside the estimated HDR of the training data.

    With ``H='auto'`` the bandwidth is chosen by the HDR plug-in selector
    over ``klass``.  Rejection is the novelty call; the asymptotic false
    positive rate on held-out normal data is tau.  When 0/1 labels are
    supplied (1 = anomaly), the summary reports the observed FPR (normals
    rejected) and TPR (anomalies rejected).
    """
    train = check_data(train, min_rows=10, d=2)
    test = np.asarray(test, dtype=float).reshape(-1, 2)
    if test.size:
        check_points(test, 2, name="test")
    if isinstance(H, str) and H == "auto":
        H = select_bandwidth(train, SelectorConfig(target="hdr", tau=tau, klass=klass, grid_counts=grid_counts)).h_opt
    else:
        H = as_bandwidth(H, 2)
    est = hdr_estimate(train, H, tau, grid_counts=grid_counts)
    accept = est.membership(test)
    fpr = tpr = None
    if labels is not None and len(labels) == test.shape[0] and test.shape[0] > 0:
        labels = np.asarray(labels)
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 (normal) or 1 (anomaly)")
        reject = ~accept
        if (labels == 0).any():
            fpr = float(reject[labels == 0].mean())
        if (labels == 1).any():
            tpr = float(reject[labels == 1].mean())
    return NoveltyResult(accept=accept, f_tau_hat=est.f_tau_hat, bandwidth=H, fpr=fpr, tpr=tpr)

"""Monte Carlo estimation of the true symmetric-difference risk.

The true risk is approximated by averaging the f0-mass of the symmetric
difference between the true super-level set and the plug-in estimate over
independent replications.  Risk curves place that simulated truth next to
the asymptotic approximation evaluated with exact density fields, and the
method comparison pairs the plug-in HDR selector against LSCV on shared
samples, summarized by a one-sided Wilcoxon signed-rank test.

Replications are independent; replication i uses seed ``seed + i`` and
results are reduced in replication order, so outputs are deterministic for
a fixed configuration regardless of worker count (``LSBAND_THREADS``).
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import kde
from .bandwidth import Bandwidth, as_bandwidth
from .density import MixtureDensity
from .levels import EvalGrid, probability_content, tau_level
from .risk import build_risk_inputs, hdr_risk, ls_risk
from .selector import SelectorConfig, lscv_bandwidth, select_bandwidth

_MODEL_PAD_SIGMAS = 7.0


def worker_count() -> int:
    """Workers allowed for replication-level parallelism (LSBAND_THREADS)."""
    raw = os.environ.get("LSBAND_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def model_grid(model: MixtureDensity, counts: int = 256, extra_pad: float = 0.0) -> EvalGrid:
    """Quadrature grid covering every mixture component out to 7 sigma.

    ``extra_pad`` widens the box further, e.g. by kernel spread when the
    grid will hold KDE fields built from wide bandwidths.
    """
    los, his = [], []
    for c in model.components:
        spread = _MODEL_PAD_SIGMAS * np.sqrt(np.linalg.eigvalsh(c.cov)[-1]) + extra_pad
        los.append(c.mean - spread)
        his.append(c.mean + spread)
    return EvalGrid.from_box(np.min(los, axis=0), np.max(his, axis=0), counts)


@dataclass(frozen=True)
class SimConfig:
    """One simulation setting: model, sample size, target, bandwidths, seeding."""

    model: MixtureDensity
    n: int
    tau: float | None = None
    level: float | None = None
    bandwidths: tuple = ()
    reps: int = 50
    seed: int = 0
    grid: EvalGrid | None = None
    grid_counts: int = 256
    selector_class: str = "diagonal"

    def __post_init__(self):
        if (self.tau is None) == (self.level is None):
            raise ValueError("supply exactly one of tau and level")
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.level is not None and self.level <= 0.0:
            raise ValueError("level must be positive")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def resolve_grid(self, H: Bandwidth | None = None) -> EvalGrid:
        """Config grid if set, else the model box padded for the bandwidth."""
        if self.grid is not None:
            return self.grid
        pad = 4.0 * np.sqrt(H.max_eigenvalue) if H is not None else 0.0
        return model_grid(self.model, self.grid_counts, extra_pad=pad)

    def true_level(self, grid: EvalGrid, f0_values: np.ndarray) -> float:
        if self.level is not None:
            return float(self.level)
        return tau_level(f0_values, self.tau, grid)


def symdiff_mass(model: MixtureDensity, true_level: float, est_membership, grid: EvalGrid, f0_values=None) -> float:
    """f0-mass of the symmetric difference between truth and an estimate.

    ``est_membership`` is a callable on (m, 2) points returning booleans, or
    a boolean array on the grid nodes.  Midpoint rule on ``grid``.
    """
    f0 = grid.evaluate(model.pdf) if f0_values is None else np.asarray(f0_values, float).reshape(grid.shape)
    # coverage semantics match the content functional
    probability_content(f0, true_level, grid)
    true_mask = f0 >= true_level
    est = est_membership(grid.points()).reshape(grid.shape) if callable(est_membership) else np.asarray(est_membership, bool).reshape(grid.shape)
    return float(f0[true_mask != est].sum() * grid.cell_area)


def _replication_error(model, n, tau, level, H, grid, f0_values, true_level, seed) -> float:
    X = model.sample(n, seed)
    field = kde.kde_field(X, H, grid)
    est_level = tau_level(field, tau, grid) if tau is not None else level
    return symdiff_mass(model, true_level, field >= est_level, grid, f0_values=f0_values)


def simulated_risk(config: SimConfig, H) -> tuple:
    """Mean and standard error of the symmetric-difference loss over replications."""
    H = as_bandwidth(H, 2)
    grid = config.resolve_grid(H)
    f0 = grid.evaluate(config.model.pdf)
    true_level = config.true_level(grid, f0)
    args = [
        (config.model, config.n, config.tau, config.level, H, grid, f0, true_level, config.seed + i)
        for i in range(config.reps)
    ]
    workers = worker_count()
    if workers > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_replication_error_star, args))
    else:
        errors = [_replication_error(*a) for a in args]
    errors = np.asarray(errors)
    se = float(errors.std(ddof=1) / np.sqrt(config.reps)) if config.reps > 1 else 0.0
    return float(errors.mean()), se


def _replication_error_star(args):
    return _replication_error(*args)


@dataclass(frozen=True)
class RiskCurve:
    """Rows of (h, simulated risk, its standard error, asymptotic approximation)."""

    h: np.ndarray
    sim_risk: np.ndarray
    sim_se: np.ndarray
    approx_risk: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["h", "sim_risk", "sim_se", "approx_risk"])
            for row in zip(self.h, self.sim_risk, self.sim_se, self.approx_risk):
                w.writerow([repr(float(v)) for v in row])


def risk_curve(config: SimConfig) -> RiskCurve:
    """Simulated true risk next to the oracle-field asymptotic approximation.

    ``config.bandwidths`` must hold scalar smoothing scales h (class h^2 I);
    rows come back sorted by h.
    """
    if not config.bandwidths:
        raise ValueError("config.bandwidths must supply an h-grid")
    hs = np.sort(np.asarray(config.bandwidths, dtype=float))
    grid = config.resolve_grid()
    f0 = grid.evaluate(config.model.pdf)
    true_level = config.true_level(grid, f0)
    inputs = build_risk_inputs(
        config.n,
        grid,
        gradient=config.model.gradient,
        hessian=config.model.hessian,
        level_field=f0,
        level=true_level,
        include_region=config.tau is not None,
    )
    risk_fn = hdr_risk if config.tau is not None else ls_risk
    sims, ses, approx = [], [], []
    for h in hs:
        m, s = simulated_risk(config, Bandwidth.scalar(float(h)))
        sims.append(m)
        ses.append(s)
        approx.append(risk_fn(Bandwidth.scalar(float(h)), inputs).risk)
    return RiskCurve(
        h=hs, sim_risk=np.asarray(sims), sim_se=np.asarray(ses), approx_risk=np.asarray(approx)
    )


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n_nonzero: int
    method: str


def wilcoxon_signed_rank(diffs, alternative: str = "greater") -> WilcoxonResult:
    """One-sample Wilcoxon signed-rank test on paired differences.

    ``alternative='greater'`` tests whether the differences tend to be
    positive.  Zeros are dropped; an all-zero input degenerates to p = 1
    with the method marked accordingly.  The null distribution is exact for
    up to 25 untied nonzero differences, otherwise a tie-corrected normal
    approximation with continuity correction is used.
    """
    if alternative not in ("greater", "less"):
        raise ValueError("alternative must be 'greater' or 'less'")
    d = np.asarray(diffs, dtype=float)
    if alternative == "less":
        d = -d
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n_nonzero=0, method="degenerate")
    order = np.abs(d)
    ranks = _midranks(order)
    w_plus = float(ranks[d > 0.0].sum())
    has_ties = np.unique(order).size < n
    if n <= 25 and not has_ties:
        counts = _rank_sum_distribution(n)
        p = float(counts[int(round(w_plus)) :].sum() / counts.sum())
        return WilcoxonResult(statistic=w_plus, p_value=p, n_nonzero=n, method="exact")
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(order, return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    if var <= 0.0:
        return WilcoxonResult(statistic=w_plus, p_value=1.0, n_nonzero=n, method="degenerate")
    z = (w_plus - mean - 0.5) / np.sqrt(var)
    return WilcoxonResult(statistic=w_plus, p_value=float(1.0 - ndtr(z)), n_nonzero=n, method="normal")


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _rank_sum_distribution(n: int) -> np.ndarray:
    """Counts of subsets of {1..n} by rank sum (null law of W+ up to 2^-n)."""
    total = n * (n + 1) // 2
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in range(1, n + 1):
        counts[r:] += counts[: total + 1 - r].copy()
    return counts


@dataclass(frozen=True)
class CompareResult:
    """Paired symmetric-difference errors of the HDR selector and LSCV."""

    rows: tuple                      # ({"rep", "hdr_error", "lscv_error"}, ...)
    wilcoxon: WilcoxonResult
    hdr_bandwidths: tuple
    lscv_bandwidths: tuple

    @property
    def hdr_errors(self) -> np.ndarray:
        return np.array([r["hdr_error"] for r in self.rows])

    @property
    def lscv_errors(self) -> np.ndarray:
        return np.array([r["lscv_error"] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "hdr_error", "lscv_error"])
            for r in self.rows:
                w.writerow([r["rep"], repr(r["hdr_error"]), repr(r["lscv_error"])])


def _compare_one(model, n, tau, grid, f0, true_level, klass, grid_counts, seed):
    X = model.sample(n, seed)
    sel = select_bandwidth(X, SelectorConfig(target="hdr", tau=tau, klass=klass, grid_counts=grid_counts))
    cv = lscv_bandwidth(X, klass)
    errs = []
    for H in (sel.h_opt, cv.h_opt):
        field = kde.kde_field(X, H, grid)
        est_level = tau_level(field, tau, grid)
        errs.append(symdiff_mass(model, true_level, field >= est_level, grid, f0_values=f0))
    return errs[0], errs[1], sel.h_opt.matrix, cv.h_opt.matrix


def _compare_one_star(args):
    return _compare_one(*args)


def compare_methods(config: SimConfig, reps: int | None = None) -> CompareResult:
    """Paired HDR-selector vs LSCV errors over shared replications.

    The one-sided Wilcoxon test asks whether the LSCV errors are larger;
    small p favors the HDR-tailored selector.
    """
    if config.tau is None:
        raise ValueError("method comparison targets HDR estimation; set tau")
    reps = config.reps if reps is None else int(reps)
    grid = config.resolve_grid()
    f0 = grid.evaluate(config.model.pdf)
    true_level = config.true_level(grid, f0)
    args = [
        (
            config.model,
            config.n,
            config.tau,
            grid,
            f0,
            true_level,
            config.selector_class,
            config.grid_counts,
            config.seed + i,
        )
        for i in range(reps)
    ]
    workers = worker_count()
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compare_one_star, args))
    else:
        results = [_compare_one(*a) for a in args]
    rows = tuple(
        {"rep": i, "hdr_error": float(h), "lscv_error": float(l)}
        for i, (h, l, _, _) in enumerate(results)
    )
    wil = wilcoxon_signed_rank(
        np.array([r["lscv_error"] - r["hdr_error"] for r in rows]), alternative="greater"
    )
    return CompareResult(
        rows=rows,
        wilcoxon=wil,
        hdr_bandwidths=tuple(res[2] for res in results),
        lscv_bandwidths=tuple(res[3] for res in results),
    )

"""Exact Gaussian-mixture ground-truth densities.

Mixtures provide the analytic pdf, gradient, Hessian, and a seeded sampler
used when simulating true risk.  The registry ships the standard bivariate
normal and a two-component sharp-mode mixture (a broad component plus the
same shape shrunk by a factor 50 in covariance); arbitrary mixtures load
from JSON with schema::

    {"components": [{"weight": w, "mean": [...], "cov": [[...], ...]}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidModel, NotSpherical
from .validation import check_points

_WEIGHT_TOL = 1e-12
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Component:
    weight: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise InvalidModel("component mean must be a vector")
        d = mean.size
        if cov.shape != (d, d):
            raise InvalidModel(f"component cov must be {d}x{d}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(np.abs(cov).max(), 1.0)):
            raise InvalidModel("component cov must be symmetric")
        if self.weight <= 0.0:
            raise InvalidModel(f"component weight must be positive, got {self.weight}")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidModel("component cov is not positive definite") from exc
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_inv", np.linalg.inv(cov))
        object.__setattr__(self, "_norm", (_TWO_PI) ** (-d / 2.0) / np.prod(np.diag(chol)))


@dataclass(frozen=True)
class MixtureDensity:
    """Finite Gaussian mixture with exact derivatives and a seeded sampler."""

    components: tuple

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, Component) else Component(**c) for c in self.components
        )
        if not comps:
            raise InvalidModel("mixture needs at least one component")
        d = comps[0].mean.size
        if any(c.mean.size != d for c in comps):
            raise InvalidModel("all components must share the same dimension")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > _WEIGHT_TOL * max(1.0, total):
            raise InvalidModel(f"weights must sum to 1, got {total}")
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return self.components[0].mean.size

    def _component_pdfs(self, x: np.ndarray) -> np.ndarray:
        """Weighted component densities, shape (m, n_components)."""
        out = np.empty((x.shape[0], len(self.components)))
        for k, c in enumerate(self.components):
            u = x - c.mean
            q = np.einsum("mi,ij,mj->m", u, c._inv, u)
            out[:, k] = c.weight * c._norm * np.exp(-0.5 * q)
        return out

    def pdf(self, x) -> np.ndarray:
        x = check_points(x, self.d)
        single = x.ndim == 1
        vals = self._component_pdfs(np.atleast_2d(x)).sum(axis=1)
        return float(vals[0]) if single else vals

    def gradient(self, x) -> np.ndarray:
        x = check_points(x, self.d)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        grad = np.zeros_like(pts)
        for c in self.components:
            u = pts - c.mean
            q = np.einsum("mi,ij,mj->m", u, c._inv, u)
            w = c.weight * c._norm * np.exp(-0.5 * q)
            grad -= w[:, None] * (u @ c._inv)
        return grad[0] if single else grad

    def hessian(self, x) -> np.ndarray:
        x = check_points(x, self.d)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        out = np.zeros((pts.shape[0], self.d, self.d))
        for c in self.components:
            u = pts - c.mean
            v = u @ c._inv
            q = np.einsum("mi,mi->m", u, v)
            w = c.weight * c._norm * np.exp(-0.5 * q)
            outer = v[:, :, None] * v[:, None, :]
            out += w[:, None, None] * (outer - c._inv[None, :, :])
        return out[0] if single else out

    def sample(self, n: int, seed) -> np.ndarray:
        """n i.i.d. draws; bitwise deterministic for a fixed seed."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        weights = np.array([c.weight for c in self.components])
        idx = rng.choice(len(self.components), size=n, p=weights / weights.sum())
        z = rng.standard_normal((n, self.d))
        out = np.empty((n, self.d))
        for k, c in enumerate(self.components):
            rows = idx == k
            out[rows] = c.mean + z[rows] @ c._chol.T
        return out

    def covariance(self) -> np.ndarray:
        """Exact mixture covariance (moment formula)."""
        mean = sum(c.weight * c.mean for c in self.components)
        cov = np.zeros((self.d, self.d))
        for c in self.components:
            dm = c.mean - mean
            cov += c.weight * (c.cov + np.outer(dm, dm))
        return cov


def spherical_tau_level(model: MixtureDensity, tau: float) -> float:
    """Exact tau-level of a single zero-mean isotropic Gaussian in d = 2.

    For covariance sigma^2 I the squared radius is exponential, so the level
    with probability content 1 - tau is tau / (2 pi sigma^2).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if len(model.components) != 1 or model.d != 2:
        raise NotSpherical("model must be a single bivariate Gaussian component")
    c = model.components[0]
    sigma2 = c.cov[0, 0]
    if np.any(c.mean != 0.0) or not np.allclose(
        c.cov, sigma2 * np.eye(2), rtol=0.0, atol=1e-12 * sigma2
    ):
        raise NotSpherical("model must be zero-mean with covariance sigma^2 I")
    return float(tau / (_TWO_PI * sigma2))


def from_dict(spec: dict) -> MixtureDensity:
    """Build a mixture from the JSON schema dictionary."""
    try:
        comps = spec["components"]
    except (TypeError, KeyError) as exc:
        raise InvalidModel("mixture spec must contain a 'components' list") from exc
    return MixtureDensity(
        tuple(
            Component(weight=c["weight"], mean=np.asarray(c["mean"], float), cov=np.asarray(c["cov"], float))
            for c in comps
        )
    )


def from_json(path) -> MixtureDensity:
    with open(path, "r", encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def standard_normal(d: int = 2) -> MixtureDensity:
    return MixtureDensity((Component(1.0, np.zeros(d), np.eye(d)),))


def sharp_mode() -> MixtureDensity:
    """Bivariate sharp-mode mixture: 2/3 broad component, 1/3 shrunk by 1/50."""
    base = np.diag([0.25, 1.0])
    return MixtureDensity(
        (
            Component(2.0 / 3.0, np.zeros(2), base),
            Component(1.0 / 3.0, np.zeros(2), base / 50.0),
        )
    )


_REGISTRY = {
    "standard_normal": standard_normal,
    "sharp_mode": sharp_mode,
}


def get_model(name: str) -> MixtureDensity:
    """Look up a built-in mixture by name."""
    try:
        return _REGISTRY[name]()
    except KeyError as exc:
        raise InvalidModel(
            f"unknown model {name!r}; built-ins: {sorted(_REGISTRY)}"
        ) from exc

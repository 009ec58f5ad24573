import math

import numpy as np
import pytest

from lsband import normal_scale_functional, pilot_bandwidths
from lsband.errors import DegenerateSample
from lsband.pilot import stage_one_bandwidth


def test_functional_matches_normal_values(normal_model):
    # analytic value for the standard bivariate normal: (4 pi)^{-1} (r + 2)!
    X = normal_model.sample(5000, 7)
    for r in range(3):
        analytic = (4.0 * np.pi) ** -1 * math.factorial(r + 2)
        est = normal_scale_functional(X, r)
        assert est == pytest.approx(analytic, rel=0.15)


def test_functional_translation_invariant(normal_model):
    X = normal_model.sample(800, 11)
    for r in range(3):
        a = normal_scale_functional(X, r)
        b = normal_scale_functional(X + np.array([13.0, -4.0]), r)
        assert b == pytest.approx(a, rel=1e-12)


def test_functional_duplication_invariant(normal_model):
    # the double sum at fixed g is exactly unchanged by duplicating the data
    X = normal_model.sample(400, 5)
    for r in range(3):
        g = stage_one_bandwidth(X.shape[0], 2, r)
        a = normal_scale_functional(X, r, g=g)
        b = normal_scale_functional(np.vstack([X, X]), r, g=g)
        assert b == pytest.approx(a, rel=1e-12)


def test_functional_positive(sharp_model):
    X = sharp_model.sample(600, 3)
    for r in range(3):
        assert normal_scale_functional(X, r) > 0.0


def test_pilots_isotropic_on_whitened_data(normal_model):
    X = normal_model.sample(2000, 21)
    S = np.cov(X, rowvar=False, ddof=1)
    evals, evecs = np.linalg.eigh(S)
    white = (X - X.mean(axis=0)) @ evecs @ np.diag(evals**-0.5) @ evecs.T
    pilots = pilot_bandwidths(white)
    for b in pilots.as_tuple():
        eigs = np.linalg.eigvalsh(b.matrix)
        assert eigs[1] - eigs[0] < 1e-9 * eigs[1]


def test_pilot_shrinks_at_root_rate(normal_model):
    t_small = np.trace(pilot_bandwidths(normal_model.sample(2000, 5)).h0.matrix)
    t_big = np.trace(pilot_bandwidths(normal_model.sample(8000, 6)).h0.matrix)
    assert t_big / t_small == pytest.approx(4.0 ** (-1.0 / 3.0), rel=0.10)


def test_pilot_ordering(normal_model):
    for n in (500, 2000):
        pilots = pilot_bandwidths(normal_model.sample(n, 42))
        traces = [np.trace(b.matrix) for b in pilots.as_tuple()]
        assert traces[0] <= traces[1] <= traces[2]


def test_pilot_rates(normal_model):
    ns = np.array([500, 2000, 8000])
    pilots = [pilot_bandwidths(normal_model.sample(n, 42)) for n in ns]
    for r in range(3):
        traces = [np.trace(p.as_tuple()[r].matrix) for p in pilots]
        slope = np.polyfit(np.log(ns), np.log(traces), 1)[0]
        assert slope == pytest.approx(-2.0 / (2 + 2 * r + 4), abs=0.08)


def test_pilot_translation_invariance(normal_model):
    X = normal_model.sample(1000, 11)
    a = pilot_bandwidths(X)
    b = pilot_bandwidths(X + np.array([5.0, -3.0]))
    for ba, bb in zip(a.as_tuple(), b.as_tuple()):
        np.testing.assert_allclose(ba.matrix, bb.matrix, atol=1e-12)


def test_pilot_linear_equivariance(normal_model):
    X = normal_model.sample(1000, 11)
    A = np.array([[2.0, 0.7], [-0.3, 1.4]])
    direct = pilot_bandwidths(X @ A.T)
    mapped = pilot_bandwidths(X)
    for bd, bm in zip(direct.as_tuple(), mapped.as_tuple()):
        np.testing.assert_allclose(bd.matrix, A @ bm.matrix @ A.T, atol=1e-9)


def test_degenerate_sample_rejected(rng):
    line = np.column_stack([np.linspace(0, 1, 50), 2.0 * np.linspace(0, 1, 50)])
    with pytest.raises(DegenerateSample):
        pilot_bandwidths(line)


def test_pilots_positive_definite(sharp_model):
    pilots = pilot_bandwidths(sharp_model.sample(1500, 2))
    for b in pilots.as_tuple():
        assert np.all(np.linalg.eigvalsh(b.matrix) > 0.0)

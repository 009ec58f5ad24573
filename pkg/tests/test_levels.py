import numpy as np
import pytest

from lsband import Bandwidth, EvalGrid, kde_field, probability_content, tau_level, tau_level_resample
from lsband.errors import GridCoverageError

TWO_PI = 2.0 * np.pi


def test_total_integral(normal_values_512, normal_grid_512):
    assert probability_content(normal_values_512, 0.0, normal_grid_512) == pytest.approx(1.0, abs=1e-3)


def test_half_mass_level(normal_values_512, normal_grid_512):
    content = probability_content(normal_values_512, 0.5 / TWO_PI, normal_grid_512)
    assert content == pytest.approx(0.5, abs=5e-3)


def test_level_above_max_gives_zero(normal_values_512, normal_grid_512):
    level = normal_values_512.max() * 1.5
    assert probability_content(normal_values_512, level, normal_grid_512) == 0.0


def test_content_nonincreasing_in_level(normal_values_512, normal_grid_512):
    levels_grid = np.linspace(0.0, normal_values_512.max(), 25)
    contents = [
        probability_content(normal_values_512, lv, normal_grid_512) for lv in levels_grid
    ]
    assert np.all(np.diff(contents) <= 1e-12)


def test_coverage_error_on_small_box(normal_model):
    grid = EvalGrid.from_box([-1.0, -1.0], [1.0, 1.0], 128)
    with pytest.raises(GridCoverageError):
        probability_content(normal_model.pdf, 0.05 / TWO_PI, grid)


def test_coarse_grid_rejected(normal_model):
    grid = EvalGrid.from_box([-6.0, -6.0], [6.0, 6.0], 32)
    with pytest.raises(GridCoverageError):
        probability_content(normal_model.pdf, 0.0, grid)


def test_tau_level_radial_identity(normal_values_512, normal_grid_512):
    for tau in (0.2, 0.5, 0.8):
        got = tau_level(normal_values_512, tau, normal_grid_512)
        assert got == pytest.approx(tau / TWO_PI, rel=0.01)


def test_tau_level_monotone_in_tau(normal_values_512, normal_grid_512):
    taus = np.linspace(0.1, 0.9, 9)
    vals = [tau_level(normal_values_512, t, normal_grid_512) for t in taus]
    assert np.all(np.diff(vals) > 0.0)


def test_tau_level_consistency(normal_values_512, normal_grid_512):
    tau = 0.35
    level = tau_level(normal_values_512, tau, normal_grid_512)
    content = probability_content(normal_values_512, level, normal_grid_512)
    assert content == pytest.approx(1.0 - tau, abs=2e-3)


def test_tau_level_grid_refinement_cauchy(normal_model):
    results = []
    for counts in (128, 256, 512):
        grid = EvalGrid.from_box([-6.0, -6.0], [6.0, 6.0], counts)
        results.append(tau_level(normal_model.pdf, 0.4, grid))
    assert abs(results[2] - results[1]) < abs(results[1] - results[0]) + 1e-12


def test_tau_level_on_kde(normal_sample_2000):
    H = Bandwidth.scalar(0.15)
    grid = EvalGrid.for_data(normal_sample_2000, H, counts=512)
    field = kde_field(normal_sample_2000, H, grid)
    got = tau_level(field, 0.5, grid)
    assert got == pytest.approx(0.5 / TWO_PI, rel=0.10)


def test_resample_agrees_with_quadrature(normal_sample_2000):
    H = Bandwidth.scalar(0.2)
    grid = EvalGrid.for_data(normal_sample_2000, H, counts=512)
    field = kde_field(normal_sample_2000, H, grid)
    quad_level = tau_level(field, 0.5, grid)
    res_level = tau_level_resample(normal_sample_2000, H, 0.5, 50_000, seed=9)
    assert res_level == pytest.approx(quad_level, rel=0.02)


def test_resample_deterministic(normal_sample_2000):
    H = Bandwidth.scalar(0.2)
    a = tau_level_resample(normal_sample_2000, H, 0.5, 2000, seed=3)
    b = tau_level_resample(normal_sample_2000, H, 0.5, 2000, seed=3)
    assert a == b


def test_resample_monotone_in_tau():
    data = np.array([[0.0, 0.0], [0.05, -0.02]])
    H = Bandwidth.scalar(0.7)
    vals = [tau_level_resample(data, H, t, 4000, seed=5) for t in (0.2, 0.5, 0.8)]
    assert vals[0] < vals[1] < vals[2]


def test_resample_requires_large_m(normal_sample_2000):
    with pytest.raises(ValueError):
        tau_level_resample(normal_sample_2000, Bandwidth.scalar(0.2), 0.5, 500, seed=1)


def test_grid_value_cache(normal_model, normal_grid_512, normal_values_512):
    cached = normal_grid_512.with_values(normal_model.pdf)
    np.testing.assert_array_equal(cached.values, normal_values_512)
    # passing field=None falls back to the cached values
    direct = probability_content(None, 0.5 / TWO_PI, cached)
    explicit = probability_content(normal_values_512, 0.5 / TWO_PI, normal_grid_512)
    assert direct == explicit
    assert tau_level(None, 0.4, cached) == tau_level(normal_values_512, 0.4, normal_grid_512)

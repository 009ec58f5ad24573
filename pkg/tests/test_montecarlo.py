import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wilcoxon as scipy_wilcoxon

from lsband import (
    Bandwidth,
    SimConfig,
    risk_curve,
    simulated_risk,
    symdiff_mass,
    wilcoxon_signed_rank,
)
from lsband.montecarlo import model_grid

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def normal_mc():
    from lsband import standard_normal

    return standard_normal()


@pytest.fixture(scope="module")
def mc_grid(normal_mc):
    return model_grid(normal_mc, 400)


@pytest.fixture(scope="module")
def mc_f0(normal_mc, mc_grid):
    return mc_grid.evaluate(normal_mc.pdf)


def _disk(radius):
    return lambda pts: np.hypot(pts[:, 0], pts[:, 1]) <= radius


def test_symdiff_zero_on_truth(normal_mc, mc_grid, mc_f0):
    level = np.exp(-0.5) / TWO_PI  # radius-1 super-level set
    mass = symdiff_mass(normal_mc, level, _disk(1.0), mc_grid, f0_values=mc_f0)
    assert mass == pytest.approx(0.0, abs=1e-3)


def test_symdiff_annulus_formula(normal_mc, mc_grid, mc_f0):
    level = np.exp(-0.5) / TWO_PI
    mass = symdiff_mass(normal_mc, level, _disk(1.3), mc_grid, f0_values=mc_f0)
    expected = np.exp(-0.5) - np.exp(-0.845)
    assert expected == pytest.approx(0.17697, abs=1e-5)
    assert mass == pytest.approx(expected, abs=1e-3)


def test_symdiff_complement_mass(normal_mc, mc_grid, mc_f0):
    tau = 0.4
    level = tau / TWO_PI
    everything = np.ones(mc_grid.shape, dtype=bool)
    mass = symdiff_mass(normal_mc, level, everything, mc_grid, f0_values=mc_f0)
    assert mass == pytest.approx(tau, abs=6e-3)


def test_symdiff_symmetry_in_sets(normal_mc, mc_grid, mc_f0):
    # swapping the roles of the two indicator sets leaves the mass unchanged
    level_a = np.exp(-0.5) / TWO_PI
    r_b = 1.4
    level_b = np.exp(-r_b**2 / 2.0) / TWO_PI
    m_ab = symdiff_mass(normal_mc, level_a, _disk(r_b), mc_grid, f0_values=mc_f0)
    m_ba = symdiff_mass(normal_mc, level_b, _disk(1.0), mc_grid, f0_values=mc_f0)
    assert m_ab == pytest.approx(m_ba, abs=1e-12)


@settings(deadline=None, max_examples=20)
@given(
    r1=st.floats(0.3, 2.4),
    r2=st.floats(0.3, 2.4),
    r3=st.floats(0.3, 2.4),
)
def test_symdiff_triangle_inequality(normal_mc, mc_grid, mc_f0, r1, r2, r3):
    def mass(ra, rb):
        level = np.exp(-ra * ra / 2.0) / TWO_PI
        return symdiff_mass(normal_mc, level, _disk(rb), mc_grid, f0_values=mc_f0)

    assert mass(r1, r3) <= mass(r1, r2) + mass(r2, r3) + 2e-3


def test_simulated_risk_deterministic(normal_mc):
    cfg = SimConfig(model=normal_mc, n=500, tau=0.5, reps=2, seed=11, grid_counts=128)
    assert simulated_risk(cfg, 0.2) == simulated_risk(cfg, 0.2)


def test_simulated_risk_single_rep(normal_mc):
    cfg = SimConfig(model=normal_mc, n=500, tau=0.5, reps=1, seed=11, grid_counts=128)
    mean, se = simulated_risk(cfg, 0.2)
    assert mean > 0.0 and se == 0.0


def test_simulated_risk_u_shape(normal_mc):
    cfg = SimConfig(model=normal_mc, n=2000, tau=0.5, reps=10, seed=3, grid_counts=256)
    hs = [0.02, 0.06, 0.15, 0.4, 1.0, 1.5]
    means = [simulated_risk(cfg, h)[0] for h in hs]
    k = int(np.argmin(means))
    assert 0 < k < len(hs) - 1


def test_se_shrinks_with_reps(normal_mc):
    base = dict(model=normal_mc, n=500, tau=0.5, seed=17, grid_counts=128)
    _, se_small = simulated_risk(SimConfig(reps=25, **base), 0.25)
    _, se_big = simulated_risk(SimConfig(reps=100, **base), 0.25)
    assert se_big == pytest.approx(se_small / 2.0, rel=0.2)


def test_seed_assignment_permutation_invariant(normal_mc):
    # same seed multiset, different assignment to replication slots
    cfg_a = SimConfig(model=normal_mc, n=400, tau=0.5, reps=4, seed=30, grid_counts=128)
    errors = []
    for offset in range(4):
        cfg_i = SimConfig(model=normal_mc, n=400, tau=0.5, reps=1, seed=30 + offset, grid_counts=128)
        errors.append(simulated_risk(cfg_i, 0.25)[0])
    mean_a, _ = simulated_risk(cfg_a, 0.25)
    assert mean_a == pytest.approx(np.mean(errors), rel=1e-12)


def test_risk_curve_schema_and_shape(normal_mc, tmp_path):
    cfg = SimConfig(
        model=normal_mc,
        n=2000,
        tau=0.5,
        bandwidths=(0.4, 0.1, 0.2),
        reps=5,
        seed=2,
        grid_counts=256,
    )
    curve = risk_curve(cfg)
    assert np.all(np.diff(curve.h) > 0)  # sorted
    assert np.all(curve.sim_risk > 0) and np.all(curve.approx_risk > 0)
    assert np.all(curve.sim_se >= 0)
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "h,sim_risk,sim_se,approx_risk"
    assert len(lines) == 4


def test_wilcoxon_matches_scipy_exact(rng):
    d = rng.standard_normal(18) + 0.4
    ours = wilcoxon_signed_rank(d, "greater")
    ref = scipy_wilcoxon(d, alternative="greater", method="exact")
    assert ours.method == "exact"
    assert ours.statistic == ref.statistic
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-12)


def test_wilcoxon_matches_scipy_normal(rng):
    d = rng.standard_normal(60) + 0.2
    ours = wilcoxon_signed_rank(d, "greater")
    ref = scipy_wilcoxon(d, alternative="greater", method="approx", correction=True)
    assert ours.method == "normal"
    assert ours.statistic == ref.statistic
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6)


def test_wilcoxon_less_alternative(rng):
    d = rng.standard_normal(18) - 0.6
    ours = wilcoxon_signed_rank(d, "less")
    ref = scipy_wilcoxon(d, alternative="less", method="exact")
    # our "less" flips signs, so compare p-values only
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-12)


def test_wilcoxon_degenerate_all_zero():
    res = wilcoxon_signed_rank(np.zeros(8))
    assert res.method == "degenerate"
    assert res.p_value == 1.0 and res.n_nonzero == 0


def test_worker_pool_matches_serial(normal_mc, monkeypatch):
    cfg = SimConfig(model=normal_mc, n=300, tau=0.5, reps=3, seed=6, grid_counts=128)
    monkeypatch.delenv("LSBAND_THREADS", raising=False)
    serial = simulated_risk(cfg, 0.3)
    monkeypatch.setenv("LSBAND_THREADS", "2")
    parallel = simulated_risk(cfg, 0.3)
    assert serial == parallel

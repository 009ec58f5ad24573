import numpy as np
import pytest

from lsband import (
    Bandwidth,
    EvalGrid,
    SelectorConfig,
    build_risk_inputs,
    estimated_risk,
    hdr_estimate,
    hdr_risk,
    kde_field,
    lscv_bandwidth,
    novelty_classify,
    select_bandwidth,
    standard_normal,
)
from lsband.pilot import pilot_bandwidths
from lsband.selector import _PairwiseProducts, build_pilot_inputs, lscv_criterion

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def sample(normal_model_sel):
    return normal_model_sel.sample(2000, 123)


@pytest.fixture(scope="module")
def normal_model_sel():
    return standard_normal()


@pytest.fixture(scope="module")
def scalar_result(sample):
    return select_bandwidth(sample, SelectorConfig(target="hdr", tau=0.5, klass="scalar"))


def test_oracle_injection_is_exact(normal_model_sel):
    """With oracle fields injected, estimated_risk is hdr_risk verbatim."""
    grid = EvalGrid.from_box([-6, -6], [6, 6], 256)
    vals = grid.evaluate(normal_model_sel.pdf)
    inputs = build_risk_inputs(
        2000,
        grid,
        gradient=normal_model_sel.gradient,
        hessian=normal_model_sel.hessian,
        level_field=vals,
        tau=0.5,
    )
    H = Bandwidth.scalar(0.2)
    cfg = SelectorConfig(target="hdr", tau=0.5)
    got = estimated_risk(H, None, cfg, inputs=inputs)
    want = hdr_risk(H, inputs)
    assert got.risk == want.risk
    np.testing.assert_array_equal(got.contributions, want.contributions)


def test_estimated_risk_u_shape(sample):
    cfg = SelectorConfig(target="hdr", tau=0.5, klass="scalar")
    pilots = pilot_bandwidths(sample)
    inputs = build_pilot_inputs(sample, cfg, pilots)
    hs = np.exp(np.linspace(np.log(0.05), np.log(1.0), 24))
    risks = [estimated_risk(Bandwidth.scalar(h), sample, cfg, inputs=inputs).risk for h in hs]
    k = int(np.argmin(risks))
    assert 0 < k < len(hs) - 1


def test_estimated_risk_permutation_invariant(sample):
    cfg = SelectorConfig(target="hdr", tau=0.5, klass="scalar")
    H = Bandwidth.scalar(0.25)
    r1 = estimated_risk(H, sample, cfg).risk
    rng = np.random.default_rng(0)
    r2 = estimated_risk(H, sample[rng.permutation(sample.shape[0])], cfg).risk
    assert r1 == pytest.approx(r2, rel=1e-12)


def test_select_scalar_in_plausible_range(scalar_result):
    h = np.sqrt(scalar_result.h_opt.matrix[0, 0])
    assert 0.1 <= h <= 0.6
    assert scalar_result.converged
    assert scalar_result.f_tau_hat == pytest.approx(0.5 / TWO_PI, rel=0.10)


def test_select_matches_grid_scan(sample, scalar_result):
    cfg = SelectorConfig(target="hdr", tau=0.5, klass="scalar")
    pilots = pilot_bandwidths(sample)
    inputs = build_pilot_inputs(sample, cfg, pilots)
    hs = np.exp(np.linspace(np.log(0.03), np.log(1.2), 200))
    risks = [hdr_risk(Bandwidth.scalar(h), inputs).risk for h in hs]
    h_grid = hs[int(np.argmin(risks))]
    h_newton = np.sqrt(scalar_result.h_opt.matrix[0, 0])
    step = np.log(hs[1] / hs[0])
    assert abs(np.log(h_newton) - np.log(h_grid)) <= step * 1.0001


def test_select_trace_invariants(scalar_result):
    risks = [r for _, r in scalar_result.trace]
    assert scalar_result.risk <= min(risks) + 1e-15
    assert np.all(np.linalg.eigvalsh(scalar_result.h_opt.matrix) > 0.0)


def test_select_deterministic(sample, scalar_result):
    again = select_bandwidth(sample, SelectorConfig(target="hdr", tau=0.5, klass="scalar"))
    assert np.array_equal(again.h_opt.matrix, scalar_result.h_opt.matrix)
    assert again.risk == scalar_result.risk


def test_select_scaling_equivariance(sample, scalar_result):
    scaled = select_bandwidth(3.0 * sample, SelectorConfig(target="hdr", tau=0.5, klass="scalar"))
    ratio = np.sqrt(scaled.h_opt.matrix[0, 0] / scalar_result.h_opt.matrix[0, 0])
    assert ratio == pytest.approx(3.0, rel=0.02)


@pytest.mark.parametrize("klass", ["diagonal", "full"])
def test_select_matrix_classes_spd(sample, klass):
    res = select_bandwidth(sample, SelectorConfig(target="hdr", tau=0.5, klass=klass))
    assert res.converged
    assert np.all(np.linalg.eigvalsh(res.h_opt.matrix) > 0.0)
    # isotropic truth: diagonal entries should be similar
    diag = np.diag(res.h_opt.matrix)
    assert diag.max() / diag.min() < 1.5


def test_select_ls_target(sample):
    res = select_bandwidth(
        sample, SelectorConfig(target="ls", level=0.5 / TWO_PI, klass="scalar")
    )
    assert res.converged
    assert res.f_tau_hat is None
    assert 0.1 <= np.sqrt(res.h_opt.matrix[0, 0]) <= 0.8


def test_select_bandwidth_shrinks_with_n(normal_model_sel):
    """Median selected scale over fresh samples decreases as n grows."""
    medians = []
    for n in (500, 2000, 8000):
        hs = []
        for rep in range(10):
            X = normal_model_sel.sample(n, 9000 + rep)
            res = select_bandwidth(
                X, SelectorConfig(target="hdr", tau=0.5, klass="scalar", grid_counts=192)
            )
            hs.append(np.sqrt(res.h_opt.matrix[0, 0]))
        medians.append(np.median(hs))
    assert medians[0] > medians[1] > medians[2]


def test_selection_result_json_schema(scalar_result):
    doc = scalar_result.to_dict()
    assert set(doc) == {"H", "risk", "converged", "trace", "f_tau_hat"}
    assert np.asarray(doc["H"]).shape == (2, 2)
    assert all(set(t) == {"H", "risk"} for t in doc["trace"])


# --- LSCV -------------------------------------------------------------------

def _lscv_quadrature(data, H):
    """Naive LSCV: grid quadrature of the squared KDE minus the LOO term."""
    from lsband import kde_density

    n = data.shape[0]
    grid = EvalGrid.for_data(data, H, counts=512, pad_sigmas=6.0)
    field = kde_field(data, H, grid)
    int_f2 = float((field**2).sum() * grid.cell_area)
    loo = 0.0
    for i in range(n):
        others = np.delete(data, i, axis=0)
        loo += float(kde_density(others, H, data[i]))
    return int_f2 - 2.0 * loo / n


def test_lscv_closed_form_matches_quadrature(normal_model_sel, rng):
    data = normal_model_sel.sample(10, 77)
    pairs = _PairwiseProducts(data)
    for _ in range(3):
        a = np.exp(rng.uniform(np.log(0.3), np.log(0.8)))
        b = np.exp(rng.uniform(np.log(0.3), np.log(0.8)))
        rho = rng.uniform(-0.3, 0.3) * a * b
        H = Bandwidth.full([[a * a, rho], [rho, b * b]])
        closed = lscv_criterion(pairs, H)
        assert closed == pytest.approx(_lscv_quadrature(data, H), abs=1e-4)


def test_lscv_finite_with_duplicates(normal_model_sel):
    data = normal_model_sel.sample(40, 3)
    data[1] = data[0]  # exact duplicate pair
    res = lscv_bandwidth(data, "scalar")
    assert np.isfinite(res.risk)
    assert np.all(np.linalg.eigvalsh(res.h_opt.matrix) > 0.0)


def test_lscv_scalar_reasonable(sample):
    res = lscv_bandwidth(sample, "scalar")
    assert res.converged
    h = np.sqrt(res.h_opt.matrix[0, 0])
    assert 0.05 <= h <= 0.6


# --- HDR estimation and novelty ----------------------------------------------

def test_hdr_estimate_coverage(sample):
    est = hdr_estimate(sample, Bandwidth.scalar(0.25), tau=0.2)
    inside = est.membership(sample)
    assert inside.mean() == pytest.approx(0.8, abs=0.05)


def test_hdr_regions_nested(sample, rng):
    H = Bandwidth.scalar(0.25)
    est_1 = hdr_estimate(sample, H, tau=0.2)
    est_2 = hdr_estimate(sample, H, tau=0.6)
    queries = rng.uniform(-4, 4, size=(400, 2))
    in_1 = est_1.membership(queries)
    in_2 = est_2.membership(queries)
    assert np.all(~in_2 | in_1)  # higher tau region is contained in lower


def test_hdr_far_point_outside(sample):
    est = hdr_estimate(sample, Bandwidth.scalar(0.25), tau=0.2)
    assert not est.membership(np.array([[25.0, 25.0]]))[0]


def test_novelty_train_equals_test(sample):
    res = novelty_classify(sample, 0.2, sample, H=Bandwidth.scalar(0.25))
    assert res.accept.mean() == pytest.approx(0.8, abs=0.05)


def test_novelty_separated_anomalies(normal_model_sel):
    train = normal_model_sel.sample(1000, 5)
    normals = normal_model_sel.sample(200, 6)
    anomalies = normal_model_sel.sample(200, 7) + np.array([6.0, 6.0])
    test = np.vstack([normals, anomalies])
    labels = np.array([0] * 200 + [1] * 200)
    res = novelty_classify(train, 0.1, test, H="auto", labels=labels, klass="scalar")
    assert res.tpr > 0.95
    assert res.fpr < 0.2


def test_novelty_empty_test(sample):
    res = novelty_classify(sample, 0.1, np.empty((0, 2)), H=Bandwidth.scalar(0.3))
    assert res.accept.shape == (0,)
    assert res.fpr is None and res.tpr is None

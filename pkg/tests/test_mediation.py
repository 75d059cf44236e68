import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import weibull_data
from survr2d2.engine import SamplerConfig, outcome_config
from survr2d2.errors import AlignmentError, DimensionMismatch
from survr2d2.mediation import (delta_days, indirect_effects, pca_project, rotate_to_original,
                                run_mediation, select_mediators, simulate_mediation_data)


def test_pca_independent_columns_needs_all_components():
    X = np.random.default_rng(1).standard_normal((5000, 7))
    pr = pca_project(X, 1.0)
    assert pr.p_x == 7
    np.testing.assert_allclose(pr.rotation.T @ pr.rotation, np.eye(7), atol=1e-12)
    assert pr.explained_fraction == pytest.approx(1.0)


def test_pca_dominant_factor():
    r = np.random.default_rng(2)
    f = r.standard_normal((2000, 1))
    X = f @ np.ones((1, 6)) + 0.1 * r.standard_normal((2000, 6))
    pr = pca_project(X, 0.70)
    assert pr.p_x == 1
    # the common factor loads equally and the sign puts the largest entry positive
    np.testing.assert_allclose(pr.rotation[:, 0], 1 / math.sqrt(6), atol=0.01)
    np.testing.assert_allclose(pr.X_star.std(axis=0, ddof=1), 1.0)
    np.testing.assert_allclose(pr.X_star.mean(axis=0), 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 8), st.floats(0.3, 0.99))
def test_pca_properties(seed, p, target):
    r = np.random.default_rng(seed)
    X = r.standard_normal((200, p)) @ r.standard_normal((p, p))
    pr = pca_project(X, target)
    k = pr.p_x
    np.testing.assert_allclose(pr.rotation.T @ pr.rotation, np.eye(k), atol=1e-10)
    assert pr.explained_fraction >= target - 1e-12
    frac = np.cumsum(pr.eigenvalues) / pr.eigenvalues.sum()
    assert k == 1 or frac[k - 2] < target
    big = np.argmax(np.abs(pr.rotation), axis=0)
    assert np.all(pr.rotation[big, np.arange(k)] > 0)


def test_pca_rejects_constant_column():
    X = np.column_stack([np.arange(10.0), np.ones(10)])
    with pytest.raises(DimensionMismatch):
        pca_project(X)


def test_indirect_effect_hand_values():
    Xs = np.zeros((10, 1))
    assert indirect_effects([[0.0]], [2.0], [0.0], [1.0], Xs)[0] == 0.0
    assert indirect_effects([[0.5]], [2.0], [0.0], [1.0], Xs)[0] == 1.0
    # binary mediator at xi = 0 and X* = 0: logistic density 1/4
    assert indirect_effects([[0.1]], [1.0], [0.0], [0.0], Xs)[0] == pytest.approx(0.025)


def test_indirect_effect_binary_weight_matches_direct_sum():
    r = np.random.default_rng(3)
    Xs = r.standard_normal((50, 2))
    alpha = r.normal(size=(2, 3))
    beta, xi = r.normal(size=3), r.normal(size=3)
    c = np.array([1.0, 0.0, 0.0])
    got = indirect_effects(alpha, beta, xi, c, Xs)
    ref = np.zeros(2)
    for k in range(2):
        for j in range(3):
            if c[j]:
                ref[k] += alpha[k, j] * beta[j]
            else:
                z = xi[j] + alpha[k, j] * Xs[:, k]
                dens = np.mean(np.exp(z) / (1 + np.exp(z)) ** 2)
                ref[k] += alpha[k, j] * beta[j] * dens
    np.testing.assert_allclose(got, ref, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5))
def test_indirect_linear_in_outcome_coefficients(seed, s):
    r = np.random.default_rng(seed)
    Xs = r.standard_normal((30, 2))
    alpha = r.normal(size=(2, 2))
    beta, xi = r.normal(size=2), r.normal(size=2)
    c = np.array([1.0, 0.0])
    base = indirect_effects(alpha, beta, xi, c, Xs)
    np.testing.assert_allclose(indirect_effects(alpha, s * beta, xi, c, Xs), s * base,
                               atol=1e-12)


def test_indirect_dimension_errors():
    with pytest.raises(DimensionMismatch):
        indirect_effects(np.ones((2, 2)), [1.0], [0.0, 0.0], [1, 1], np.zeros((5, 2)))


def test_rotate_hand_case():
    rot = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]])
    np.testing.assert_allclose(rotate_to_original([3.0, 2.0], rot), [3.0, 2.0, 5.0, 4.0])
    draws = np.array([[3.0, 2.0], [1.0, 0.0]])
    out = rotate_to_original(draws, rot)
    np.testing.assert_allclose(out[1], rot[:, 0])
    np.testing.assert_allclose(rotate_to_original(draws[0] + draws[1], rot), out.sum(axis=0))
    with pytest.raises(DimensionMismatch):
        rotate_to_original([1.0, 2.0, 3.0], rot)


def test_delta_days():
    assert delta_days(math.log(2), 70) == pytest.approx(25550.0)
    assert delta_days(0.0, 70) == 0.0
    assert delta_days(-0.1, 70) < 0


def test_select_mediators_recovers_planted():
    beta = np.zeros(20)
    beta[[2, 9, 15]] = [0.8, -0.7, 0.6]
    data = weibull_data(np.random.default_rng(5), 1000, beta, censor_frac=0.2)
    idx, draws = select_mediators(data, SamplerConfig(iterations=6000, burn_in=2000, thin=2,
                                                      seed=1))
    assert list(idx) == [2, 9, 15]
    assert draws.n_draws == 2000


SHORT_OUT = outcome_config(iterations=3000, burn_in=1000, thin=1)
SHORT_MED = SamplerConfig(iterations=3000, burn_in=1000, thin=1)


def test_mediation_recovers_planted_indirect_effect():
    data, M, X, pca = simulate_mediation_data(np.random.default_rng(6))
    res = run_mediation(data, M, ["continuous"], X, outcome_cfg=SHORT_OUT,
                        mediator_cfg=SHORT_MED, seed=3, mean_age_years=70)
    lo, hi = np.quantile(res.draws["tau_I"][:, 0], [0.025, 0.975])
    assert lo <= -0.2 <= hi and hi < 0
    # total is the draw-wise sum of direct and indirect
    assert np.array_equal(res.draws["total"], res.draws["direct"] + res.draws["indirect"])
    np.testing.assert_allclose(res.draws["indirect"], res.draws["tau_I"] @ pca.rotation.T)
    tab = res.table()
    assert len(tab) == X.shape[1] and "indirect_days" in tab[0]
    d = res.to_dict()
    assert d["p_x"] == pca.p_x and d["n_draws"] == 2000


def test_mediation_reproducible_and_thread_independent():
    data, M, X, _ = simulate_mediation_data(np.random.default_rng(7), n=300)
    Mb = np.column_stack([M[:, 0], (M[:, 0] > 0).astype(float)])
    kw = dict(outcome_cfg=outcome_config(iterations=600, burn_in=200, thin=1),
              mediator_cfg=SamplerConfig(iterations=600, burn_in=200, thin=1), seed=9)
    a = run_mediation(data, Mb, ["continuous", "binary"], X, **kw)
    b = run_mediation(data, Mb, ["continuous", "binary"], X, threads=3, **kw)
    for k in a.draws:
        assert np.array_equal(a.draws[k], b.draws[k])


def test_alignment_strict_and_truncating():
    data, M, X, _ = simulate_mediation_data(np.random.default_rng(8), n=200)
    out_cfg = outcome_config(iterations=600, burn_in=200, thin=1)
    med_cfg = SamplerConfig(iterations=500, burn_in=200, thin=1)
    with pytest.raises(AlignmentError):
        run_mediation(data, M, ["continuous"], X, outcome_cfg=out_cfg, mediator_cfg=med_cfg,
                      seed=1, strict_alignment=True)
    res = run_mediation(data, M, ["continuous"], X, outcome_cfg=out_cfg, mediator_cfg=med_cfg,
                        seed=1)
    assert res.n_draws == 300


def test_mediation_input_validation():
    data, M, X, _ = simulate_mediation_data(np.random.default_rng(9), n=100)
    with pytest.raises(ValueError):
        run_mediation(data, M, ["ordinal"], X, seed=1)
    with pytest.raises(DimensionMismatch):
        run_mediation(data, M[:50], ["continuous"], X, seed=1)
    with pytest.raises(ValueError):
        run_mediation(data, M, ["continuous"], X)

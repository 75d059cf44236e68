import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from survr2d2.errors import LengthMismatch, NoComparablePairs, OneClassOnly
from survr2d2.metrics import (c_index, coverage, selection_auc, significance_and_scores,
                              sse_decomposition)


def brute_c_index(risk, times, events):
    num = den = 0.0
    for i in range(len(times)):
        for j in range(len(times)):
            if events[i] and times[i] < times[j]:
                den += 1
                num += 1.0 if risk[i] > risk[j] else 0.5 if risk[i] == risk[j] else 0.0
    return num / den


def brute_auc(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def test_sse_hand_case():
    total, nz, z = sse_decomposition([1.5, 0.0, 0.5, 0.0], [1.0, 0.0, 0.0, 1.0])
    assert (total, nz, z) == (1.5, 1.25, 0.25)
    assert sse_decomposition([1.0], [0.0]) == (1.0, 0.0, 1.0)


def test_auc_extremes():
    assert selection_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert selection_auc([0.1, 0.2, 0.9, 0.8], [1, 1, 0, 0]) == 0.0
    assert selection_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5


def test_coverage_hand_case():
    r = np.random.default_rng(0)
    draws = r.normal([0.0, 5.0, 0.0], 1.0, size=(4000, 3))
    assert coverage(draws, [0.0, 0.0, 0.5]) == pytest.approx(2 / 3)


def test_c_index_perfect_and_reversed():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.ones(4)
    assert c_index(-t, t, e) == 1.0
    assert c_index(t, t, e) == 0.0
    assert c_index(np.zeros(4), t, e) == 0.5


def test_c_index_censored_pairs_not_comparable():
    # only (0, 2) and (0, 1) are comparable; row 1 is censored
    t = np.array([1.0, 2.0, 3.0])
    e = np.array([1, 0, 0])
    assert c_index([3.0, 1.0, 4.0], t, e) == 0.5


def test_score_and_flag_thresholds():
    n = 10000
    d = np.ones((n, 2))
    d[: int(0.03 * n), 0] = -1.0  # 97% positive
    d[: int(0.02 * n), 1] = -1.0  # 98% positive
    s = significance_and_scores(d)
    np.testing.assert_allclose(s.scores, [0.94, 0.96])
    assert list(s.flags) == [0, 1]


def test_errors():
    with pytest.raises(LengthMismatch):
        sse_decomposition([1.0], [1.0, 2.0])
    with pytest.raises(OneClassOnly):
        selection_auc([0.1, 0.2], [1, 1])
    with pytest.raises(LengthMismatch):
        selection_auc([0.1, 0.2], [1, 0, 1])
    with pytest.raises(NoComparablePairs):
        c_index([1.0, 2.0], [1.0, 2.0], [0, 0])
    with pytest.raises(LengthMismatch):
        coverage(np.zeros((10, 2)), [0.0])


# quarter-grid values keep ties possible while exp stays strictly monotone in floats
scores_st = arrays(int, st.integers(2, 30), elements=st.integers(-20, 20)).map(lambda a: a / 4)


@settings(max_examples=100, deadline=None)
@given(scores_st, st.integers(0, 2**31))
def test_auc_matches_brute_force_and_monotone_invariance(s, seed):
    truth = np.random.default_rng(seed).integers(0, 2, s.size)
    if truth.min() == truth.max():
        truth[0] = 1 - truth[0]
    a = selection_auc(s, truth)
    assert a == pytest.approx(brute_auc(s, truth), abs=1e-12)
    assert selection_auc(np.exp(s) * 3 + 1, truth) == pytest.approx(a, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**31))
def test_c_index_brute_force_and_antisymmetry(n, seed):
    r = np.random.default_rng(seed)
    t = r.integers(1, 6, n).astype(float)  # ties in time
    e = r.integers(0, 2, n)
    e[0] = 1
    t[0] = 0.5
    risk = r.integers(0, 4, n).astype(float)  # ties in risk
    c = c_index(risk, t, e)
    assert c == pytest.approx(brute_c_index(risk, t, e), abs=1e-12)
    assert c + c_index(-risk, t, e) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, 8, elements=st.floats(-3, 3)), st.integers(0, 2**31))
def test_sse_additive(b_hat, seed):
    truth = np.random.default_rng(seed).normal(size=8) * (np.arange(8) % 2)
    total, nz, z = sse_decomposition(b_hat, truth)
    assert total == pytest.approx(nz + z)
    assert total == pytest.approx(np.sum((b_hat - truth) ** 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_flags_invariant_to_draw_order(seed):
    r = np.random.default_rng(seed)
    d = r.normal(r.normal(size=4), 1.0, size=(500, 4))
    a = significance_and_scores(d)
    b = significance_and_scores(d[r.permutation(500)])
    assert np.array_equal(a.flags, b.flags)
    np.testing.assert_allclose(a.scores, b.scores)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import cumulative_trapezoid
from scipy.special import kv

from survr2d2 import kernels
from survr2d2.dists import (GIGSpec, gig_mean, gig_second_moment, sample_gig,
                            sample_truncated_exponential, sample_truncated_normal)
from survr2d2.errors import EmptyRegion, InvalidParams
from survr2d2.kernels import get_backend

N = 10**6


def bessel_moment(chi, psi, lam, r):
    om = math.sqrt(chi * psi)
    return (chi / psi) ** (r / 2) * kv(lam + r, om) / kv(lam, om)


def raw_moments(chi, psi, lam):
    if chi == 0:  # Gamma(lam, rate psi/2)
        return [math.gamma(lam + r) / math.gamma(lam) * (2 / psi) ** r for r in range(1, 5)]
    return [bessel_moment(chi, psi, lam, r) for r in range(1, 5)]


def assert_mean_var(x, m1, m2, m3, m4, k=3.0):
    n = x.size
    var = m2 - m1 * m1
    assert abs(x.mean() - m1) < k * math.sqrt(var / n), (x.mean(), m1)
    mu4 = m4 - 4 * m3 * m1 + 6 * m2 * m1**2 - 3 * m1**4
    se_var = math.sqrt((mu4 - var * var) / n)
    assert abs(x.var() - var) < k * se_var, (x.var(), var)


GIG_CASES = [
    (0.0, 4.0, 2.0),      # Gamma(2, rate 2)
    (1.0, 1.0, -0.5),     # inverse Gaussian
    (2.0, 3.0, 0.7),
    (0.3, 0.5, 0.2),      # small omega, lambda < 1
    (5.0, 0.01, 1.5),
    (50.0, 80.0, 3.0),
    (1e-6, 2.0, -0.45),   # the regime of near-zero coefficients
    (0.2, 3.0, -2.5),
]


@pytest.mark.parametrize("chi,psi,lam", GIG_CASES)
def test_gig_moments(chi, psi, lam):
    x = sample_gig(GIGSpec(chi, psi, lam), np.random.default_rng(101), size=N)
    assert np.all(x > 0) and np.all(np.isfinite(x))
    assert_mean_var(x, *raw_moments(chi, psi, lam))


def test_gig_reductions():
    r = np.random.default_rng(1)
    assert sample_gig(GIGSpec(0, 4, 2), r, N).mean() == pytest.approx(1.0, abs=0.003)
    assert sample_gig(GIGSpec(1, 1, -0.5), r, N).mean() == pytest.approx(1.0, abs=0.004)


def test_gig_mean_oracle_value():
    ref = math.sqrt(2 / 3) * kv(1.7, math.sqrt(6)) / kv(0.7, math.sqrt(6))
    assert gig_mean(GIGSpec(2, 3, 0.7)) == pytest.approx(ref, rel=1e-12)
    assert gig_second_moment(GIGSpec(2, 3, 0.7)) == pytest.approx(
        bessel_moment(2, 3, 0.7, 2), rel=1e-12)


def gig_cdf(chi, psi, lam):
    """Tabulated CDF from the unnormalised density on a fine log grid."""
    m = bessel_moment(chi, psi, lam, 1)
    lx = np.linspace(math.log(m) - 25, math.log(m) + 12, 400001)
    x = np.exp(lx)
    logf = (lam - 1) * lx - 0.5 * (chi / x + psi * x)
    f = np.exp(logf - logf.max()) * x
    c = cumulative_trapezoid(f, lx, initial=0.0)
    c /= c[-1]
    return lambda t: np.interp(np.log(t), lx, c)


@pytest.mark.parametrize("chi,psi,lam", [(2.0, 3.0, 0.7), (0.5, 4.0, -1.3), (0.3, 0.5, 0.2)])
def test_gig_reciprocal_identity(chi, psi, lam):
    r = np.random.default_rng(202)
    x = sample_gig(GIGSpec(chi, psi, lam), r, N)
    y = 1.0 / sample_gig(GIGSpec(psi, chi, -lam), r, N)
    cdf = gig_cdf(chi, psi, lam)
    assert stats.kstest(x, cdf).statistic < 0.002
    assert stats.kstest(y, cdf).statistic < 0.002


@pytest.mark.parametrize("bad", [(-1, 1, 1), (0, 1, -1), (1, 0, 1), (0, 0, 1),
                                 (float("nan"), 1, 1)])
def test_gig_invalid(bad):
    with pytest.raises(InvalidParams):
        GIGSpec(*bad)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4), st.floats(1e-8, 1e4), st.floats(-20, 20), st.integers(0, 2**32))
def test_gig_kernel_always_positive(chi, psi, lam, seed):
    if chi == 0 and lam <= 0:
        lam = abs(lam) + 0.1
    x = kernels.gig(chi, psi, lam, np.random.default_rng(seed))
    assert x > 0 and math.isfinite(x)


TN_CASES = [
    (0.0, 1.0, -np.inf, np.inf),
    (0.0, 1.0, 0.0, np.inf),
    (1.0, 2.0, -1.0, 0.5),
    (0.0, 1.0, 5.0, 6.0),
    (-3.0, 0.5, 2.0, np.inf),
    (2.0, 1.0, -np.inf, -4.0),
]


@pytest.mark.parametrize("mean,sd,lo,hi", TN_CASES)
def test_truncnorm_ks(mean, sd, lo, hi):
    x = sample_truncated_normal(mean, sd, lo, hi, np.random.default_rng(303), size=N)
    assert np.all((x >= lo) & (x <= hi))
    a, b = (lo - mean) / sd, (hi - mean) / sd
    ref = stats.truncnorm(a, b, loc=mean, scale=sd)
    assert stats.kstest(x, ref.cdf).statistic < 0.002
    m, v = ref.stats("mv")
    assert abs(x.mean() - m) < 3 * math.sqrt(v / N)


def test_half_normal_mean():
    x = sample_truncated_normal(0, 1, 0, np.inf, np.random.default_rng(4), size=N)
    assert x.mean() == pytest.approx(math.sqrt(2 / math.pi), abs=3 * 0.6028 / 1000)


def test_truncnorm_far_tail():
    r = np.random.default_rng(5)
    x = sample_truncated_normal(0, 1, 40.0, np.inf, r, size=10000)
    assert np.all(x >= 40.0)
    # Mills ratio: E[X | X > a] ~ a + 1/a for large a
    assert x.mean() == pytest.approx(40 + 1 / 40, abs=0.002)
    y = sample_truncated_normal(0, 1, 1e9, 1e9 + 1, r, size=100)
    assert np.all((y >= 1e9) & (y <= 1e9 + 1))


def test_truncnorm_errors():
    r = np.random.default_rng(0)
    with pytest.raises(EmptyRegion):
        sample_truncated_normal(0, 1, 1.0, 1.0, r)
    with pytest.raises(InvalidParams):
        sample_truncated_normal(0, 0, 0, 1, r)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3), st.floats(-1e4, 1e4), st.floats(1e-6, 1e4),
       st.integers(0, 2**32))
def test_truncnorm_containment(mean, sd, lo, width, seed):
    hi = lo + width
    x = sample_truncated_normal(mean, sd, lo, hi, np.random.default_rng(seed))
    assert lo <= x <= hi


def test_truncated_exponential():
    r = np.random.default_rng(6)
    x = sample_truncated_exponential(0.0, r, size=N)
    assert abs(x.mean() - 1) < 3e-3
    b = 2.5
    x = sample_truncated_exponential(b, r, size=N)
    assert abs(x.mean() - (b + 1)) < 3e-3 and abs(x.var() - 1) < 3 * math.sqrt(8 / N)
    assert np.all(sample_truncated_exponential(7.3, r, size=1000) > 7.3)
    with pytest.raises(InvalidParams):
        sample_truncated_exponential(-1.0, r)


def test_same_seed_same_stream():
    a = sample_gig(GIGSpec(1, 2, 0.3), np.random.default_rng(9), size=100)
    b = sample_gig(GIGSpec(1, 2, 0.3), np.random.default_rng(9), size=100)
    assert np.array_equal(a, b)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")
class TestBackendsAgree:
    def _both(self, fn):
        out = []
        for name in ("python", "cython"):
            out.append(fn(get_backend(name), np.random.default_rng(77)))
        return out

    def test_scalar_draws(self):
        def draw(K, r):
            return [K.uniform(r), K.std_normal(r), K.exponential(r), K.gamma(0.3, 2.0, r),
                    K.gamma(4.0, 0.5, r), K.gig(1.0, 2.0, 0.5, r), K.gig(0.01, 0.02, -3.0, r),
                    K.gig(1e-9, 2.0, -0.49, r), K.truncnorm(0.0, 1.0, 3.0, np.inf, r),
                    K.truncnorm(1.0, 2.0, -np.inf, -30.0, r)]
        a, b = self._both(draw)
        assert a == b

    def test_fill_draws(self):
        chi = np.geomspace(1e-12, 10, 500)

        def draw(K, r):
            g = np.empty(500)
            K.gig_fill(chi, 2.0, -0.4, r, g)
            h = np.empty(500)
            K.gamma_fill(0.7, chi + 0.1, r, h)
            z = np.empty(500)
            K.normal_fill(r, z)
            t = np.empty(500)
            K.truncnorm_fill(0.0, 1.0, -1.0, 2.0, r, t)
            return np.concatenate([g, h, z, t])
        a, b = self._both(draw)
        assert np.array_equal(a, b)

    def test_chain_kernels(self):
        r0 = np.random.default_rng(1)
        n, p = 40, 5
        X = r0.standard_normal((n, p))
        log_y = r0.standard_normal(n)
        ev = (r0.random(n) < 0.7).astype(np.int64)
        XT = np.ascontiguousarray(X.T)

        def run(K, r):
            beta = np.zeros(p)
            xb = X @ beta
            gap = np.empty(n)
            out = []
            for _ in range(50):
                K.refresh_gaps(log_y, xb, 0.2, 1.3, r, gap)
                j = K.beta_sweep(XT, beta, xb, gap, 1.3, np.full(p, 2.0), XT @ ev, r)
                assert j == -1
                out.append(K.weibull_loglik(log_y, ev, xb, 0.2, 1.3))
                out.extend(beta)
            return np.array(out)
        a, b = self._both(run)
        assert np.array_equal(a, b)

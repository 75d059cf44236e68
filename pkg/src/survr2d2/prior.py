"""R2-induced prior on the global variance ``W`` and its GBP approximation.

For a Weibull model with shape ``theta`` and ``eta ~ N(beta0, W)`` the
Bayesian R2 is ``(e^W - 1) / ((c/d) e^W - 1)`` with ``c = Gamma(1 + 2/theta)``
and ``d = Gamma(1 + 1/theta)**2``. A Beta(a, b) law on the rescaled
``R2 / r2_max`` induces the density of ``W`` implemented here.

All densities are evaluated through ``q = r2_max`` in a form that stays
finite for large ``w``:
``R2 / q = (1 - e^-w) / (1 - q e^-w)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import betainc, betaln, gammaln

from .errors import IllConditionedPriorWarning, InvalidParams, NoConvergence, OutOfSupport

log = logging.getLogger(__name__)

__all__ = [
    "R2D2Hyper",
    "GBPParams",
    "GBPFit",
    "MixtureSpec",
    "weibull_moment_constants",
    "r2_max",
    "r2_from_w",
    "w_from_r2",
    "prior_w_density",
    "log_prior_w_density",
    "sample_prior_w",
    "gbp_density",
    "gbp_logpdf",
    "gbp_median",
    "chi2_divergence",
    "fit_gbp_approx",
    "mixture_hkl",
    "mixture_r2_from_w",
    "mixture_prior_w_density",
]


@dataclass(frozen=True)
class R2D2Hyper:
    a: float = 0.5
    b: float = 0.5

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidParams("Beta prior shapes a, b must be positive")


@dataclass(frozen=True)
class GBPParams:
    a_star: float
    b_star: float
    d_star: float
    c_star: float = 1.0

    def __post_init__(self):
        if not (self.a_star > 0 and self.b_star > 0 and self.d_star > 0):
            raise InvalidParams("GBP parameters must be positive")
        if self.c_star != 1.0:
            raise InvalidParams("only c* = 1 is supported (compound-gamma form)")


@dataclass(frozen=True)
class GBPFit:
    params: GBPParams
    divergence: float
    n_evals: int
    theta: float
    hyper: R2D2Hyper


@dataclass(frozen=True)
class MixtureSpec:
    """Finite Weibull mixture over intercepts ``beta0s`` (one per component)."""

    m: int
    beta0s: tuple
    sigma2_gamma: float = 1.0

    def __post_init__(self):
        if int(self.m) < 1:
            raise InvalidParams("mixture needs m >= 1")
        b = tuple(float(x) for x in np.atleast_1d(self.beta0s))
        if len(b) != int(self.m):
            raise InvalidParams("beta0s must have m entries")
        if not self.sigma2_gamma > 0:
            raise InvalidParams("sigma2_gamma must be positive")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "beta0s", b)


def weibull_moment_constants(theta):
    """Return ``(c, d, c - d)`` with ``c - d`` computed without cancellation.

    Works elementwise on an array of shapes.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta > 0):
        raise InvalidParams("theta must be positive")
    lc = gammaln(1.0 + 2.0 / theta)
    ld = 2.0 * gammaln(1.0 + 1.0 / theta)
    c, d = np.exp(lc), np.exp(ld)
    cd = d * np.expm1(lc - ld)
    if theta.ndim == 0:
        return float(c), float(d), float(cd)
    return c, d, cd


def r2_max(theta):
    c, d, _ = weibull_moment_constants(theta)
    return d / c


def _r2_from_w_q(w, q):
    w = np.asarray(w, dtype=float)
    e = np.exp(-w)
    return q * (-np.expm1(-w)) / (1.0 - q * e)


def r2_from_w(w, theta):
    """Bayesian R2 implied by global variance ``w`` at shape ``theta``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise OutOfSupport("w must be non-negative")
    out = _r2_from_w_q(w, r2_max(theta))
    return float(out) if out.ndim == 0 else out


def w_from_r2(r2, theta):
    q = r2_max(theta)
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0) or np.any(r2 >= q):
        raise OutOfSupport(f"R2 must lie in [0, r2_max) with r2_max = {np.min(q):.6g}")
    # r2 = q(1 - e^-w)/(1 - q e^-w)  =>  e^-w = (q - r2)/(q (1 - r2))
    out = np.log1p(-r2) - np.log1p(-r2 / q)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _log_density_q(w, q, a, b):
    w = np.asarray(w, dtype=float)
    l1 = np.log1p(-q * np.exp(-w))
    log_rt = np.log(-np.expm1(-w)) - l1
    log_1mrt = np.log1p(-q) - w - l1
    log_jac = np.log1p(-q) - w - 2.0 * l1
    return (a - 1.0) * log_rt + (b - 1.0) * log_1mrt - betaln(a, b) + log_jac


def log_prior_w_density(w, theta, hyper: R2D2Hyper):
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w > 0, _log_density_q(np.where(w > 0, w, 1.0), r2_max(theta),
                                             hyper.a, hyper.b), -np.inf)
    return float(out) if out.ndim == 0 else out


def prior_w_density(w, theta, hyper: R2D2Hyper):
    """Exact induced prior density of ``W``; underflow returns 0."""
    out = np.exp(log_prior_w_density(w, theta, hyper))
    return float(out) if np.ndim(out) == 0 else out


def sample_prior_w(theta, hyper: R2D2Hyper, size, rng):
    """Exact draws of ``W`` by transforming Beta draws of the rescaled R2."""
    q = r2_max(theta)
    rt = rng.beta(hyper.a, hyper.b, size=size)
    rt = np.minimum(rt, np.nextafter(1.0, 0.0))
    return np.log1p(-rt * q) - np.log1p(-rt)


def gbp_logpdf(x, p: GBPParams):
    x = np.asarray(x, dtype=float)
    c = p.c_star
    z = x / p.d_star
    with np.errstate(divide="ignore"):
        return (np.log(c) + (p.a_star * c - 1.0) * np.log(z) - (p.a_star + p.b_star) * np.log1p(z ** c)
                - np.log(p.d_star) - betaln(p.a_star, p.b_star))


def gbp_density(x, p: GBPParams):
    """Generalized Beta Prime density ``c (x/d)^(ac-1) (1+(x/d)^c)^-(a+b) / (d B(a,b))``."""
    out = np.exp(gbp_logpdf(x, p))
    return float(out) if np.ndim(out) == 0 else out


def gbp_median(p: GBPParams):
    """Median of GBP(a*, b*, 1, d*): ``x/(x+d)`` is Beta(a*, b*)."""
    from scipy.stats import beta as beta_dist

    m = beta_dist.median(p.a_star, p.b_star)
    return float(p.d_star * m / (1.0 - m))


def _upper_limit(q, a, b, floor=1e-12):
    w = 1.0
    while _log_density_q(w, q, a, b) > np.log(floor) and w < 1e4:
        w *= 2.0
    return w


class _DivergenceGrid:
    """Composite Gauss-Legendre rule in ``log w`` for the Pearson divergence.

    Covers ``[w_lo, w_hi]``; the piece below ``w_lo`` is closed with a
    power-law extrapolation and the piece above ``w_hi`` (where the exact
    density is below 1e-12) with the GBP survival function.
    """

    def __init__(self, theta, hyper, n_panels=160, order=8, w_lo=1e-12):
        self.q = r2_max(theta)
        self.w_hi = _upper_limit(self.q, hyper.a, hyper.b)
        u = np.linspace(np.log(w_lo), np.log(self.w_hi), n_panels + 1)
        x, wt = np.polynomial.legendre.leggauss(order)
        mid, half = 0.5 * (u[1:] + u[:-1]), 0.5 * (u[1:] - u[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        self.w = np.exp(nodes)
        self.weights = (half[:, None] * wt[None, :]).ravel() * self.w
        self.pi = np.exp(_log_density_q(self.w, self.q, hyper.a, hyper.b))

    def __call__(self, a_star, b_star, d_star):
        z = self.w / d_star
        g = np.exp((a_star - 1.0) * np.log(z) - (a_star + b_star) * np.log1p(z)
                   - np.log(d_star) - betaln(a_star, b_star))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            f = (self.pi - g) ** 2 / g
        if not np.all(np.isfinite(f)):
            return np.inf
        body = float(np.dot(self.weights, f))
        # below w_lo: integrand*w ~ w^s, s from the two smallest nodes
        fw0, fw1 = f[0] * self.w[0], f[1] * self.w[1]
        if fw0 > 0 and fw1 > 0:
            s = np.log(fw1 / fw0) / np.log(self.w[1] / self.w[0])
            if s <= 0:
                return np.inf
            body += fw0 / s
        tail = 1.0 - betainc(a_star, b_star, self.w_hi / (self.w_hi + d_star))
        return body + tail


def chi2_divergence(theta, hyper: R2D2Hyper, p: GBPParams, n_panels=160, order=8):
    """Pearson chi-square divergence ``int (pi - g)^2 / g`` between exact prior and GBP."""
    return _DivergenceGrid(theta, hyper, n_panels, order)(p.a_star, p.b_star, p.d_star)


def fit_gbp_approx(theta, hyper: R2D2Hyper, max_evals=2000, n_panels=160, order=8) -> GBPFit:
    """Fit GBP(a*, b*, 1, d*) to the exact prior of ``W`` by minimising the divergence.

    Nelder-Mead on log-parameters from ``(a, b, 1)``; a polishing restart is
    run from the first solution within the same evaluation budget.
    """
    extreme = hyper.a < 0.2 or hyper.b < 0.2
    if extreme:
        warnings.warn(f"Beta({hyper.a}, {hyper.b}) prior is extreme; the GBP fit may be "
                      "ill-conditioned", IllConditionedPriorWarning, stacklevel=2)
    grid = _DivergenceGrid(theta, hyper, n_panels, order)

    def objective(par):
        if np.any(np.abs(par) > 50):
            return np.inf
        return grid(*np.exp(par))

    x0 = np.log([hyper.a, hyper.b, 1.0])
    opts = {"xatol": 1e-8, "fatol": 1e-12}
    res = minimize(objective, x0, method="Nelder-Mead", options={**opts, "maxfev": max_evals})
    used = res.nfev
    if res.status == 0 and used < max_evals:
        res2 = minimize(objective, res.x, method="Nelder-Mead",
                        options={**opts, "maxfev": max_evals - used})
        used += res2.nfev
        if res2.fun <= res.fun:
            res = res2
    if not np.isfinite(res.fun):
        raise NoConvergence(f"GBP fit failed for a={hyper.a}, b={hyper.b}, theta={theta}")
    if res.status != 0 and not extreme:
        raise NoConvergence(f"GBP fit exceeded {max_evals} evaluations "
                            f"(a={hyper.a}, b={hyper.b}, theta={theta})")
    a_s, b_s, d_s = (float(v) for v in np.exp(res.x))
    log.debug("GBP fit theta=%.4g a=%g b=%g -> (%g, %g, %g) div=%.3g",
              theta, hyper.a, hyper.b, a_s, b_s, d_s, res.fun)
    return GBPFit(GBPParams(a_s, b_s, d_s), float(res.fun), int(used), float(theta), hyper)


def mixture_hkl(theta, spec: MixtureSpec):
    """The ``h, k, l`` constants of the intercept-mixture R2."""
    m = spec.m
    c, d, cmd = weibull_moment_constants(theta)
    e2 = np.exp(2.0 * np.asarray(spec.beta0s))
    h = np.sum(d * e2 / m**2)
    k = np.sum(d * (2.0 / m - 2.0 / m**2) * e2)
    l = np.sum((2.0 / m - 1.0 / m**2) * cmd * e2)
    return float(h), float(k), float(l)


def mixture_r2_from_w(w, theta, spec: MixtureSpec):
    h, k, l = mixture_hkl(theta, spec)
    w = np.asarray(w, dtype=float)
    out = h * (-np.expm1(-w)) / ((h + k + l) - h * np.exp(-w))
    return float(out) if out.ndim == 0 else out


def mixture_prior_w_density(w, theta, spec: MixtureSpec, hyper: R2D2Hyper):
    h, k, l = mixture_hkl(theta, spec)
    q = h / (h + k + l)
    w = np.asarray(w, dtype=float)
    out = np.exp(_log_density_q(w, q, hyper.a, hyper.b))
    return float(out) if out.ndim == 0 else out

"""Metropolis-within-Gibbs samplers for the censored Weibull model.

Each iteration of the Weibull samplers runs

1. random-walk MH on the intercept (u integrated out),
3. random-walk MH on ``log(theta)`` (u integrated out),
7. fresh latent ``u_i ~ Exp(1)`` truncated above ``y_i**theta * exp(-theta*eta_i)``,
2. a sweep of truncated-normal coefficient draws given ``u``,
4-6. the prior block (R2D2: ``W``, ``gamma``, ``phi``; Horseshoe: local and
   global scales; fixed Gaussian: nothing).

The two MH steps use the marginal likelihood, so ``u`` is only needed by the
coefficient sweep and is redrawn right before it; it stays feasible at the
end of every iteration. Coefficient prior variances are always carried as
``phi_j * W``.

Internally the latent variables are kept as gaps
``g_i = log(u_i) - theta * (log(y_i) - eta_i) >= 0``, which keeps the
truncation bounds finite where ``u_i`` itself would overflow.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels as _default_kernels
from .errors import ChainDiverged, InfeasibleRegion, SeparationWarning
from .kernels import get_backend
from .model import SurvivalDataset, weibull_mle_theta
from .prior import GBPParams, R2D2Hyper, fit_gbp_approx, gbp_median, r2_from_w

__all__ = [
    "SamplerConfig",
    "ChainState",
    "PosteriorDraws",
    "beta_truncation_bounds",
    "R2D2Sampler",
    "HorseshoeSampler",
    "GaussianWeibullSampler",
    "run_r2d2_chain",
    "run_horseshoe_chain",
    "run_gaussian_weibull_chain",
    "run_logistic_chain",
    "run_linear_chain",
    "bayes_r2_posterior",
    "outcome_config",
]

_VAR_FLOOR = 1e-300
_DBL_MIN = np.finfo(float).tiny


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 20000
    burn_in: int = 6000
    thin: int = 3
    hyper: R2D2Hyper = field(default_factory=R2D2Hyper)
    gbp: GBPParams | None = None
    t1: float = 0.0
    t2: float = 100.0
    mu_b0: float = 0.0
    sig2_b0: float = 100.0
    seed: int | None = None
    target_accept: tuple = (0.30, 0.50)
    adapt_window: int = 100
    coef_prior_var: float = 100.0
    # global-local samplers hold coefficient variances at warm_var for the first
    # warm_start burn-in iterations (None means burn_in // 3)
    warm_start: int | None = None
    warm_var: float = 0.1

    def __post_init__(self):
        if self.iterations < 1 or not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.t2 > 0 and self.sig2_b0 > 0 and self.coef_prior_var > 0):
            raise ValueError("prior variances must be positive")
        lo, hi = self.target_accept
        if not 0 < lo < hi < 1:
            raise ValueError("target_accept must be an increasing pair inside (0, 1)")
        if self.warm_start is not None and not 0 <= self.warm_start <= self.burn_in:
            raise ValueError("warm_start must lie in [0, burn_in]")
        if not self.warm_var > 0:
            raise ValueError("warm_var must be positive")

    @property
    def n_warm(self):
        return self.burn_in // 3 if self.warm_start is None else self.warm_start

    @property
    def n_keep(self):
        return (self.iterations - self.burn_in) // self.thin

    def echo(self):
        d = asdict(self)
        d["target_accept"] = list(self.target_accept)
        return d


def outcome_config(**kw):
    """Defaults for the non-penalized outcome model: N(0, 100) coefficients and intercept,
    log(theta) ~ N(0, 1000), 20k iterations with 5k burn-in."""
    base = dict(iterations=20000, burn_in=5000, thin=1, t1=0.0, t2=1000.0, mu_b0=0.0,
                sig2_b0=100.0, coef_prior_var=100.0)
    base.update(kw)
    return SamplerConfig(**base)


@dataclass
class ChainState:
    """All unknowns at one iteration. ``log_u`` holds the latent variables on the log scale."""

    beta0: float
    beta: np.ndarray
    log_theta: float
    W: float
    gamma: float
    phi: np.ndarray
    log_u: np.ndarray
    mh_scales: dict = field(default_factory=dict)
    accept_counts: dict = field(default_factory=dict)
    local: np.ndarray | None = None  # Horseshoe lambda^2
    aux: dict = field(default_factory=dict)

    @property
    def theta(self):
        return math.exp(self.log_theta)

    @property
    def u(self):
        return np.exp(self.log_u)

    def copy(self):
        return ChainState(self.beta0, self.beta.copy(), self.log_theta, self.W, self.gamma,
                          self.phi.copy(), self.log_u.copy(), dict(self.mh_scales),
                          dict(self.accept_counts),
                          None if self.local is None else self.local.copy(), dict(self.aux))


def beta_truncation_bounds(i, j, state: ChainState, data: SurvivalDataset):
    """Feasible interval for coefficient ``j`` implied by ``u_i > y_i**theta exp(-theta eta_i)``.

    ``i=None`` intersects the constraints of all observations. Raises
    :class:`InfeasibleRegion` if the intersection is empty.
    """
    X = data.X_std
    theta = state.theta
    rows = range(data.n) if i is None else [i]
    lo, hi = -math.inf, math.inf
    for r in rows:
        x = X[r, j]
        if x == 0.0:
            continue
        rest = X[r] @ state.beta - x * state.beta[j]
        bound = (math.log(data.times[r]) - state.beta0 - rest - state.log_u[r] / theta) / x
        if x > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    if lo > hi:
        raise InfeasibleRegion(f"empty truncation region for coefficient {j}",
                               {"j": j, "lower": lo, "upper": hi})
    return lo, hi


@dataclass
class PosteriorDraws:
    """Retained draws (leading axis = draw) plus acceptance rates and a config echo."""

    draws: dict
    acceptance: dict
    config: dict
    seed: int | None
    names: tuple
    method: str
    burn_in_acceptance: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.draws[key]

    @property
    def n_draws(self):
        return next(iter(self.draws.values())).shape[0] if self.draws else 0

    @property
    def beta(self):
        return self.draws["beta"]

    def quantiles(self, key, q=(0.025, 0.5, 0.975)):
        return np.quantile(self.draws[key], q, axis=0)

    def summary(self):
        out = {}
        for key, arr in self.draws.items():
            qs = np.quantile(arr, [0.025, 0.5, 0.975], axis=0)
            if arr.ndim == 1:
                out[key] = {"median": float(qs[1]), "q025": float(qs[0]), "q975": float(qs[2])}
            else:
                out[key] = [{"median": float(qs[1][k]), "q025": float(qs[0][k]),
                             "q975": float(qs[2][k])} for k in range(arr.shape[1])]
        return out

    def to_summary_dict(self):
        s = {
            "method": self.method,
            "seed": self.seed,
            "n_draws": self.n_draws,
            "acceptance": self.acceptance,
            "config": self.config,
            "parameters": self.summary(),
        }
        if "beta" in self.draws and self.names:
            s["coefficients"] = [dict(name=nm, **rec) for nm, rec in
                                 zip(self.names, s["parameters"]["beta"])]
        if "W" in self.draws and "theta" in self.draws and self.method == "r2d2":
            r2 = bayes_r2_posterior(self)
            qs = np.quantile(r2, [0.025, 0.5, 0.975])
            s["r2"] = {"median": float(qs[1]), "q025": float(qs[0]), "q975": float(qs[2])}
        return s

    def trace_csv(self):
        """Render the trace as CSV text (one row per retained draw)."""
        cols, mats = [], []
        for key, arr in self.draws.items():
            if arr.ndim == 1:
                cols.append(key)
                mats.append(arr[:, None])
            else:
                labels = self.names if key == "beta" and len(self.names) == arr.shape[1] \
                    else [str(k + 1) for k in range(arr.shape[1])]
                cols.extend(f"{key}[{lab}]" for lab in labels)
                mats.append(arr)
        table = np.hstack(mats) if mats else np.zeros((0, 0))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["draw"] + cols)
        for t, row in enumerate(table):
            w.writerow([t] + [repr(float(v)) for v in row])
        return buf.getvalue()


class _WeibullSampler:
    """Shared machinery for steps 1, 3, 7 and 2. Subclasses own the prior block."""

    method = "weibull"
    global_local = False
    record_keys = ("beta0", "beta", "theta")

    def __init__(self, data: SurvivalDataset, config: SamplerConfig, rng, backend=None):
        self.K = _default_kernels if backend is None else get_backend(backend)
        self.data = data
        self.cfg = config
        self.rng = rng
        self.n, self.p = data.n, data.p
        self.X = np.ascontiguousarray(data.X_std, dtype=float)
        self.XT = np.ascontiguousarray(self.X.T)
        self.set_response(data.times, data.events)
        self.xb = np.zeros(self.n)
        self.gap = np.zeros(self.n)
        self.state = None
        self._warm = False

    def set_response(self, times, events):
        """Swap the response vector (used by joint-distribution tests)."""
        self.log_y = np.ascontiguousarray(np.log(np.asarray(times, dtype=float)))
        self.events = np.ascontiguousarray(np.asarray(events, dtype=np.int64))
        self.score = np.ascontiguousarray(self.XT @ self.events.astype(float))
        self.n_events = int(self.events.sum())

    # -- initialization ---------------------------------------------------
    def _init_common(self):
        cfg = self.cfg
        if self.n_events >= 1:
            theta = weibull_mle_theta(self.data)
            beta0 = float(np.mean(self.log_y[self.events == 1]))
        else:
            theta = math.exp(cfg.t1)
            beta0 = cfg.mu_b0
        d = max(self.n_events, 0)
        sd_b0 = math.sqrt(cfg.sig2_b0) if d == 0 else min(math.sqrt(cfg.sig2_b0),
                                                          1.0 / (theta * math.sqrt(d)))
        sd_lt = math.sqrt(cfg.t2) if d == 0 else min(math.sqrt(cfg.t2), 0.75 / math.sqrt(d))
        scales = {"beta0": 2.4 * sd_b0, "log_theta": 2.4 * sd_lt}
        counts = {"beta0": 0, "log_theta": 0}
        return ChainState(beta0, np.zeros(self.p), math.log(theta), 1.0, 1.0,
                          np.full(self.p, 1.0 / max(self.p, 1)), np.zeros(self.n),
                          scales, counts)

    def init_state(self):
        self.state = self._init_common()
        self._init_prior(self.state)
        self._sync_latent(refresh=True)
        return self.state

    def set_state(self, state: ChainState):
        """Install an externally built state (latent ``u`` is redrawn)."""
        self.state = state.copy()
        self._sync_latent(refresh=True)

    def _sync_latent(self, refresh):
        s = self.state
        np.dot(self.X, s.beta, out=self.xb)
        if refresh:
            self.K.refresh_gaps(self.log_y, self.xb, s.beta0, s.theta, self.rng, self.gap)
        s.log_u = s.theta * (self.log_y - s.beta0 - self.xb) + self.gap

    # -- blocks -------------------------------------------------------------
    def _loglik(self, beta0, theta):
        return self.K.weibull_loglik(self.log_y, self.events, self.xb, beta0, theta)

    def _mh_beta0(self, s):
        K, cfg = self.K, self.cfg
        theta = s.theta
        ll_old = self._loglik(s.beta0, theta)
        prop = s.beta0 + s.mh_scales["beta0"] * K.std_normal(self.rng)
        ll_new = self._loglik(prop, theta)
        lr = ll_new - ll_old + ((s.beta0 - cfg.mu_b0) ** 2 - (prop - cfg.mu_b0) ** 2) \
            / (2.0 * cfg.sig2_b0)
        if math.log(K.uniform(self.rng)) < lr:
            s.beta0 = prop
            return 1
        return 0

    def _mh_log_theta(self, s):
        K, cfg = self.K, self.cfg
        ll_old = self._loglik(s.beta0, s.theta)
        prop = s.log_theta + s.mh_scales["log_theta"] * K.std_normal(self.rng)
        ll_new = self._loglik(s.beta0, math.exp(prop))
        lr = ll_new - ll_old + ((s.log_theta - cfg.t1) ** 2 - (prop - cfg.t1) ** 2) \
            / (2.0 * cfg.t2)
        if math.log(K.uniform(self.rng)) < lr:
            s.log_theta = prop
            return 1
        return 0

    def _beta_sweep(self, s):
        theta = s.theta
        if self._warm:
            var = np.full(self.p, self.cfg.warm_var)
        else:
            var = np.maximum(s.phi * s.W, _VAR_FLOOR)
        j = self.K.beta_sweep(self.XT, s.beta, self.xb, self.gap, theta, var, self.score,
                              self.rng)
        if j >= 0:
            raise InfeasibleRegion(f"empty truncation region for coefficient {j}",
                                   self._diagnostics(s, j=int(j)))

    def step(self):
        """One full iteration; returns (beta0 accepted, log_theta accepted)."""
        s = self.state
        np.dot(self.X, s.beta, out=self.xb)
        a0 = self._mh_beta0(s)
        a1 = self._mh_log_theta(s)
        self.K.refresh_gaps(self.log_y, self.xb, s.beta0, s.theta, self.rng, self.gap)
        self._beta_sweep(s)
        if not self._warm:
            self._prior_block(s)
        s.log_u = s.theta * (self.log_y - s.beta0 - self.xb) + self.gap
        return a0, a1

    def _diagnostics(self, s, **extra):
        d = {"beta0": s.beta0, "log_theta": s.log_theta, "W": s.W, "gamma": s.gamma,
             "beta_finite": bool(np.all(np.isfinite(s.beta))),
             "phi_min": float(s.phi.min()) if s.phi.size else None}
        d.update(extra)
        return d

    def _check(self, s, t):
        vals = (s.beta0, s.log_theta, s.W, s.gamma)
        if not (all(map(math.isfinite, vals)) and np.all(np.isfinite(s.beta))):
            raise ChainDiverged(f"non-finite state at iteration {t}",
                                self._diagnostics(s, iteration=t))

    # -- prior hooks ----------------------------------------------------------
    def _init_prior(self, s):
        s.W = self.cfg.coef_prior_var * max(self.p, 1)

    def _prior_block(self, s):
        pass

    def _record(self, s):
        return {"beta0": s.beta0, "beta": s.beta.copy(), "theta": s.theta}

    # -- driver -------------------------------------------------------------
    def run(self):
        cfg = self.cfg
        if self.state is None:
            self.init_state()
        s = self.state
        lo, hi = cfg.target_accept
        win = {"beta0": 0, "log_theta": 0}
        burn_acc = {"beta0": 0, "log_theta": 0}
        post_acc = {"beta0": 0, "log_theta": 0}
        keep = {}
        kept = 0
        n_keep = cfg.n_keep
        n_warm = cfg.n_warm if self.global_local else 0
        for t in range(cfg.iterations):
            self._warm = t < n_warm
            a0, a1 = self.step()
            self._check(s, t)
            if t < cfg.burn_in:
                win["beta0"] += a0
                win["log_theta"] += a1
                burn_acc["beta0"] += a0
                burn_acc["log_theta"] += a1
                if (t + 1) % cfg.adapt_window == 0:
                    for key in win:
                        rate = win[key] / cfg.adapt_window
                        if rate < lo:
                            s.mh_scales[key] *= 0.9
                        elif rate > hi:
                            s.mh_scales[key] *= 1.1
                        win[key] = 0
            else:
                post_acc["beta0"] += a0
                post_acc["log_theta"] += a1
                if (t - cfg.burn_in + 1) % cfg.thin == 0 and kept < n_keep:
                    rec = self._record(s)
                    if not keep:
                        keep = {k: np.empty((n_keep,) + np.shape(v)) for k, v in rec.items()}
                    for k, v in rec.items():
                        keep[k][kept] = v
                    kept += 1
        self._warm = False
        s.accept_counts = dict(post_acc)
        n_post = cfg.iterations - cfg.burn_in
        acceptance = {k: v / n_post for k, v in post_acc.items()}
        burn = {k: (v / cfg.burn_in if cfg.burn_in else float("nan")) for k, v in burn_acc.items()}
        echo = cfg.echo()
        echo.update(self._echo_extra())
        return PosteriorDraws(keep, acceptance, echo, cfg.seed, self.data.names,
                              self.method, burn)

    def _echo_extra(self):
        return {}


class GaussianWeibullSampler(_WeibullSampler):
    """Fixed N(0, coef_prior_var) coefficient priors."""

    method = "gaussian"


class R2D2Sampler(_WeibullSampler):
    method = "r2d2"
    global_local = True
    record_keys = ("beta0", "beta", "theta", "W", "gamma", "phi")

    def __init__(self, data, config, rng, backend=None):
        super().__init__(data, config, rng, backend)
        if config.gbp is None:
            theta_hat = weibull_mle_theta(data)
            self.gbp = fit_gbp_approx(theta_hat, config.hyper).params
        else:
            self.gbp = config.gbp

    def _echo_extra(self):
        return {"gbp": asdict(self.gbp)}

    def _init_prior(self, s):
        g = self.gbp
        s.W = gbp_median(g)
        s.phi = np.full(self.p, 1.0 / max(self.p, 1))
        s.gamma = self.K.gamma(g.b_star, g.d_star, self.rng)

    def _prior_block(self, s):
        K, g, p = self.K, self.gbp, self.p
        if p == 0:
            s.gamma = K.gamma(g.a_star + g.b_star, g.d_star + s.W, self.rng)
            return
        b2 = s.beta * s.beta
        chi = max(float(np.sum(b2 / s.phi)), _DBL_MIN)
        s.W = max(K.gig(chi, 2.0 * s.gamma, g.a_star - 0.5 * p, self.rng), _VAR_FLOOR)
        s.gamma = K.gamma(g.a_star + g.b_star, g.d_star + s.W, self.rng)
        T = np.empty(p)
        K.gig_fill(np.maximum(b2, _DBL_MIN), 2.0 * s.gamma, g.a_star / p - 0.5, self.rng, T)
        np.maximum(T, _VAR_FLOOR, out=T)
        total = T.sum()
        phi = np.maximum(T / total, _VAR_FLOOR)
        s.phi = phi / phi.sum()
        # (W, phi) <-> T is one-to-one, so this is an exact joint update
        s.W = float(total)

    def _record(self, s):
        return {"beta0": s.beta0, "beta": s.beta.copy(), "theta": s.theta, "W": s.W,
                "gamma": s.gamma, "phi": s.phi.copy()}


class HorseshoeSampler(_WeibullSampler):
    """Half-Cauchy local and global scales via inverse-gamma auxiliaries."""

    method = "horseshoe"
    global_local = True

    def _init_prior(self, s):
        p = self.p
        s.local = np.ones(p)
        s.aux = {"tau2": 1.0, "nu": np.ones(p), "zeta": 1.0}
        self._to_phi(s)

    def _to_phi(self, s):
        lam2, tau2 = s.local, s.aux["tau2"]
        total = float(lam2.sum())
        if self.p == 0:
            s.W = tau2
            return
        s.W = max(tau2 * total, _VAR_FLOOR)
        phi = np.maximum(lam2 / total, _VAR_FLOOR)
        s.phi = phi / phi.sum()

    def _inv_gamma_vec(self, shape, rates):
        out = np.empty(rates.shape[0])
        self.K.gamma_fill(shape, np.ascontiguousarray(rates), self.rng, out)
        return 1.0 / np.maximum(out, _VAR_FLOOR)

    def _prior_block(self, s):
        K, p = self.K, self.p
        if p == 0:
            return
        aux = s.aux
        b2 = s.beta * s.beta
        tau2 = aux["tau2"]
        s.local = np.minimum(self._inv_gamma_vec(1.0, 1.0 / aux["nu"] + b2 / (2.0 * tau2)), 1e300)
        rate = 1.0 / aux["zeta"] + float(np.sum(b2 / s.local)) / 2.0
        tau2 = min(1.0 / max(K.gamma(0.5 * (p + 1), rate, self.rng), _VAR_FLOOR), 1e300)
        aux["tau2"] = tau2
        aux["nu"] = self._inv_gamma_vec(1.0, 1.0 + 1.0 / s.local)
        aux["zeta"] = 1.0 / max(K.gamma(1.0, 1.0 + 1.0 / tau2, self.rng), _VAR_FLOOR)
        self._to_phi(s)

    def _record(self, s):
        return {"beta0": s.beta0, "beta": s.beta.copy(), "theta": s.theta,
                "tau2": s.aux["tau2"], "lambda2": s.local.copy()}


def _resolve_rng(config, rng):
    if rng is not None:
        return rng
    if config.seed is None:
        raise ValueError("provide an rng or a config seed")
    return np.random.default_rng(config.seed)


def run_r2d2_chain(data, config, rng=None, backend=None) -> PosteriorDraws:
    return R2D2Sampler(data, config, _resolve_rng(config, rng), backend).run()


def run_horseshoe_chain(data, config, rng=None, backend=None) -> PosteriorDraws:
    return HorseshoeSampler(data, config, _resolve_rng(config, rng), backend).run()


def run_gaussian_weibull_chain(data, config, rng=None, backend=None) -> PosteriorDraws:
    return GaussianWeibullSampler(data, config, _resolve_rng(config, rng), backend).run()


def bayes_r2_posterior(draws: PosteriorDraws):
    """Per-draw Bayesian R^2 from the retained (W, theta) pairs."""
    return r2_from_w(np.asarray(draws["W"]), np.asarray(draws["theta"]))


# ---------------------------------------------------------------------------
# mediator models

def _design(X_star):
    X_star = np.asarray(X_star, dtype=float)
    if X_star.ndim == 1:
        X_star = X_star[:, None]
    return np.hstack([np.ones((X_star.shape[0], 1)), X_star])


def _mvn(K, rng, chol):
    z = np.empty(chol.shape[0])
    K.normal_fill(rng, z)
    return chol @ z


def _logistic_loglik(Z, y, b):
    eta = Z @ b
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _logistic_map(Z, y, prior_var, iters=100):
    b = np.zeros(Z.shape[1])
    for _ in range(iters):
        mu = 1.0 / (1.0 + np.exp(-(Z @ b)))
        grad = Z.T @ (y - mu) - b / prior_var
        H = (Z * (mu * (1 - mu))[:, None]).T @ Z + np.eye(Z.shape[1]) / prior_var
        stepv = np.linalg.solve(H, grad)
        b = b + stepv
        if np.max(np.abs(stepv)) < 1e-10:
            break
    mu = 1.0 / (1.0 + np.exp(-(Z @ b)))
    H = (Z * (mu * (1 - mu))[:, None]).T @ Z + np.eye(Z.shape[1]) / prior_var
    return b, H


def run_logistic_chain(M, X_star, config: SamplerConfig, rng=None, backend=None,
                       ig_shape=0.1, ig_scale=0.1) -> PosteriorDraws:
    """Bayesian logistic regression ``Pr(M=1) = expit(xi + X* alpha)``.

    Coefficients (intercept included) are N(0, sigma^2 I) with
    sigma^2 ~ InvGamma(0.1, 0.1). Coefficients move by one random-walk MH block
    whose covariance comes from the curvature at the posterior mode; its
    scale adapts during burn-in only. sigma^2 is a conjugate Gibbs draw.
    """
    K = _default_kernels if backend is None else get_backend(backend)
    rng = _resolve_rng(config, rng)
    Z = _design(X_star)
    y = np.asarray(M, dtype=float)
    if y.shape[0] != Z.shape[0]:
        raise ValueError("mediator length does not match X_star rows")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("binary mediator must be coded 0/1")
    if y.min() == y.max():
        warnings.warn("binary mediator is constant; coefficients are identified by the prior only",
                      SeparationWarning, stacklevel=2)
    k = Z.shape[1]
    sigma2 = 10.0
    b, H = _logistic_map(Z, y, sigma2)
    chol = np.linalg.cholesky(np.linalg.inv(H))
    scale = 2.38 / math.sqrt(k)
    ll = _logistic_loglik(Z, y, b)
    lo, hi = 0.15, 0.45
    win = acc_post = 0
    n_keep = config.n_keep
    out_b = np.empty((n_keep, k))
    out_s = np.empty(n_keep)
    kept = 0
    for t in range(config.iterations):
        prop = b + scale * _mvn(K, rng, chol)
        ll_new = _logistic_loglik(Z, y, prop)
        lr = ll_new - ll - (prop @ prop - b @ b) / (2.0 * sigma2)
        acc = math.log(K.uniform(rng)) < lr
        if acc:
            b, ll = prop, ll_new
        rate = ig_scale + 0.5 * float(b @ b)
        sigma2 = 1.0 / K.gamma(ig_shape + 0.5 * k, rate, rng)
        if t < config.burn_in:
            win += acc
            if (t + 1) % config.adapt_window == 0:
                r = win / config.adapt_window
                scale *= 0.9 if r < lo else (1.1 if r > hi else 1.0)
                win = 0
        else:
            acc_post += acc
            if (t - config.burn_in + 1) % config.thin == 0 and kept < n_keep:
                out_b[kept] = b
                out_s[kept] = sigma2
                kept += 1
    rate_post = acc_post / (config.iterations - config.burn_in)
    if rate_post < 0.05:
        warnings.warn(f"logistic MH acceptance collapsed to {rate_post:.3f}",
                      SeparationWarning, stacklevel=2)
    draws = {"intercept": out_b[:, 0], "coef": out_b[:, 1:], "sigma2": out_s}
    return PosteriorDraws(draws, {"coef": rate_post}, config.echo(), config.seed, (), "logistic")


def run_linear_chain(M, X_star, config: SamplerConfig, rng=None, backend=None,
                     ig_shape=0.1, ig_scale=0.1) -> PosteriorDraws:
    """Conjugate Gibbs for ``M = xi + X* alpha + eps``, eps ~ N(0, sigma^2).

    Coefficients (intercept included) are N(0, tau^2 I); tau^2 and sigma^2
    are InvGamma(0.1, 0.1).
    """
    K = _default_kernels if backend is None else get_backend(backend)
    rng = _resolve_rng(config, rng)
    Z = _design(X_star)
    y = np.asarray(M, dtype=float)
    if y.shape[0] != Z.shape[0]:
        raise ValueError("mediator length does not match X_star rows")
    n, k = Z.shape
    ZtZ = Z.T @ Z
    Zty = Z.T @ y
    b = np.linalg.lstsq(Z, y, rcond=None)[0]
    sigma2 = max(float(np.var(y - Z @ b)), 1e-8)
    tau2 = 1.0
    n_keep = config.n_keep
    out_b = np.empty((n_keep, k))
    out_s = np.empty(n_keep)
    out_t = np.empty(n_keep)
    kept = 0
    eye = np.eye(k)
    for t in range(config.iterations):
        prec = ZtZ / sigma2 + eye / tau2
        L = np.linalg.cholesky(prec)
        mean = np.linalg.solve(prec, Zty / sigma2)
        z = np.empty(k)
        K.normal_fill(rng, z)
        # L L' = prec, so solving L' x = z gives x ~ N(0, prec^-1)
        b = mean + np.linalg.solve(L.T, z)
        resid = y - Z @ b
        sigma2 = 1.0 / K.gamma(ig_shape + 0.5 * n, ig_scale + 0.5 * float(resid @ resid), rng)
        tau2 = 1.0 / K.gamma(ig_shape + 0.5 * k, ig_scale + 0.5 * float(b @ b), rng)
        if t >= config.burn_in and (t - config.burn_in + 1) % config.thin == 0 and kept < n_keep:
            out_b[kept] = b
            out_s[kept] = sigma2
            out_t[kept] = tau2
            kept += 1
    draws = {"intercept": out_b[:, 0], "coef": out_b[:, 1:], "sigma2": out_s, "tau2": out_t}
    return PosteriorDraws(draws, {}, config.echo(), config.seed, (), "linear")

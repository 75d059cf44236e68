"""Exposure projection and product-of-coefficients mediation on a Weibull outcome.

Pipeline: project exposures onto leading principal components, fit the
Weibull outcome model on (mediators, projections), fit one regression per
mediator on the projections, then combine aligned posterior draws into
indirect, direct and total effects per original exposure.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import (SamplerConfig, outcome_config, run_gaussian_weibull_chain,
                     run_linear_chain, run_logistic_chain, run_r2d2_chain)
from .errors import AlignmentError, DimensionMismatch, RankDeficientWarning
from .metrics import significance_and_scores
from .model import SurvivalDataset

__all__ = [
    "PCAProjection",
    "MediationResult",
    "pca_project",
    "select_mediators",
    "indirect_effects",
    "rotate_to_original",
    "delta_days",
    "run_mediation",
    "simulate_mediation_data",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PCAProjection:
    rotation: np.ndarray  # p x p_x, orthonormal columns
    eigenvalues: np.ndarray  # all p, descending
    explained_fraction: float
    p_x: int
    X_star: np.ndarray  # n x p_x, standardized scores


def pca_project(X, variance_target=0.70) -> PCAProjection:
    """Principal components of the sample correlation matrix.

    Keeps the smallest number of components whose cumulative eigenvalue
    share reaches ``variance_target``. Each eigenvector is signed so that its
    largest-magnitude entry is positive. Scores ``X_std @ rotation`` are
    standardized column-wise.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise DimensionMismatch("X must be a non-empty n x p matrix")
    if not 0 < variance_target <= 1:
        raise ValueError("variance_target must lie in (0, 1]")
    sd = X.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DimensionMismatch("exposure columns must be non-constant")
    Xs = (X - X.mean(axis=0)) / sd
    R = (Xs.T @ Xs) / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[-1] <= 1e-10 * max(vals[0], 1.0):
        warnings.warn("correlation matrix is numerically rank deficient", RankDeficientWarning,
                      stacklevel=2)
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    frac = np.cumsum(vals) / np.sum(vals)
    p_x = int(np.searchsorted(frac, variance_target - 1e-12) + 1)
    p_x = min(p_x, vals.size)
    rot = vecs[:, :p_x]
    scores = Xs @ rot
    X_star = (scores - scores.mean(axis=0)) / scores.std(axis=0, ddof=1)
    return PCAProjection(rot, vals, float(frac[p_x - 1]), p_x, X_star)


def select_mediators(data: SurvivalDataset, config: SamplerConfig, rng=None, backend=None):
    """Fit the R2D2 model of survival on mediators; keep coefficients whose 95% CI excludes 0.

    Returns ``(selected_indices, draws)``.
    """
    draws = run_r2d2_chain(data, config, rng, backend)
    sel = significance_and_scores(draws)
    return np.flatnonzero(sel.flags), draws


def _binary_weight(alpha, xi, X_star, full_predictor):
    """Mean logistic density weight, shape (p_x, p_M), for one draw."""
    if full_predictor:
        z = xi[None, :] + X_star @ alpha  # n x p_M
        e = np.exp(-np.abs(z))
        w = e / (1.0 + e) ** 2
        return np.broadcast_to(w.mean(axis=0), alpha.shape)
    # k-th projection only inside the expit: z_ikj = xi_j + alpha_kj X*_ik
    z = xi[None, None, :] + X_star[:, :, None] * alpha[None, :, :]
    e = np.exp(-np.abs(z))
    return (e / (1.0 + e) ** 2).mean(axis=0)


def indirect_effects(alpha, beta, xi, c, X_star, full_predictor=False):
    """Indirect effect of each projection through the mediators.

    ``tau_k = sum_j alpha_kj beta_j [c_j + w_kj (1 - c_j)]`` where ``c_j = 1``
    marks a continuous mediator and ``w_kj`` is the sample mean of the
    logistic density at ``xi_j + alpha_kj X*_ik``. With ``full_predictor``
    the density is evaluated at the full linear predictor of mediator j.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    X_star = np.asarray(X_star, dtype=float)
    if X_star.ndim == 1:
        X_star = X_star[:, None]
    p_x, p_m = alpha.shape
    if beta.size != p_m or xi.size != p_m or c.size != p_m or X_star.shape[1] != p_x:
        raise DimensionMismatch("alpha, beta, xi, c and X_star dimensions disagree")
    factor = np.broadcast_to(c, alpha.shape).copy()
    if np.any(c == 0):
        w = _binary_weight(alpha, xi, X_star, full_predictor)
        factor = factor + w * (1.0 - c)[None, :]
    return (alpha * factor) @ beta


def rotate_to_original(tau, rotation):
    """Map projection-level effects back to the original exposures: ``rotation @ tau``."""
    tau = np.asarray(tau, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    if rotation.ndim != 2 or tau.shape[-1] != rotation.shape[1]:
        raise DimensionMismatch(f"rotation {rotation.shape} cannot act on {tau.shape}")
    return tau @ rotation.T


def delta_days(omega, mean_age_years):
    """Change in days to event implied by a log-time effect: ``(e^omega - 1) * age * 365``."""
    return np.expm1(np.asarray(omega, dtype=float)) * mean_age_years * 365.0


@dataclass
class MediationResult:
    exposure_names: tuple
    mediator_names: tuple
    projection: PCAProjection
    draws: dict  # tau_D, tau_I (n x p_x); direct, indirect, total (n x p)
    mean_age_years: float | None = None
    chains: dict = field(default_factory=dict, repr=False)

    @property
    def n_draws(self):
        return self.draws["total"].shape[0]

    def _interval(self, arr):
        q = np.quantile(arr, [0.025, 0.5, 0.975], axis=0)
        return q

    def table(self):
        """One record per exposure with median and 95% CI of each effect."""
        rows = []
        q = {k: self._interval(self.draws[k]) for k in ("indirect", "direct", "total")}
        dd = {}
        if self.mean_age_years is not None:
            dd = {k: self._interval(delta_days(self.draws[k], self.mean_age_years))
                  for k in ("indirect", "direct", "total")}
        prop = self.proportion_mediated()
        for i, name in enumerate(self.exposure_names):
            rec = {"covariate": name}
            for k in ("indirect", "direct", "total"):
                rec[k] = {"median": float(q[k][1, i]), "q025": float(q[k][0, i]),
                          "q975": float(q[k][2, i]),
                          "significant": bool(q[k][0, i] > 0 or q[k][2, i] < 0)}
                if dd:
                    rec[k + "_days"] = {"median": float(dd[k][1, i]),
                                        "q025": float(dd[k][0, i]),
                                        "q975": float(dd[k][2, i])}
            rec["proportion_mediated"] = float(prop[i])
            rows.append(rec)
        return rows

    def proportion_mediated(self):
        ind = np.median(self.draws["indirect"], axis=0)
        tot = np.median(self.draws["total"], axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(tot != 0, ind / tot, np.nan)

    def to_dict(self):
        return {
            "exposures": list(self.exposure_names),
            "mediators": list(self.mediator_names),
            "p_x": self.projection.p_x,
            "explained_fraction": self.projection.explained_fraction,
            "n_draws": self.n_draws,
            "mean_age_years": self.mean_age_years,
            "effects": self.table(),
            "tau_I": _summ(self.draws["tau_I"]),
            "tau_D": _summ(self.draws["tau_D"]),
        }


def _summ(arr):
    q = np.quantile(arr, [0.025, 0.5, 0.975], axis=0)
    return [{"median": float(q[1, k]), "q025": float(q[0, k]), "q975": float(q[2, k])}
            for k in range(arr.shape[1])]


def _align(arrays, strict):
    counts = {k: v.shape[0] for k, v in arrays.items()}
    m = min(counts.values())
    if strict and len(set(counts.values())) > 1:
        raise AlignmentError(f"unequal retained draw counts: {counts}")
    if m == 0:
        raise AlignmentError("a chain retained no draws")
    return m


def run_mediation(data: SurvivalDataset, M, mediator_types, X_exposure, variance_target=0.70,
                  outcome_cfg: SamplerConfig | None = None,
                  mediator_cfg: SamplerConfig | None = None, seed=None, rng=None,
                  exposure_names=(), mediator_names=(), mean_age_years=None,
                  full_predictor=False, strict_alignment=False, threads=1,
                  backend=None) -> MediationResult:
    """Two-model mediation analysis with posterior draws paired by index.

    ``mediator_types[j]`` is ``"continuous"`` or ``"binary"``. Outcome
    coefficients are reported per raw unit of each mediator and of each
    standardized projection. RNG streams for the outcome chain and each
    mediator chain are spawned from one seed.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    X_exposure = np.asarray(X_exposure, dtype=float)
    n = data.n
    if M.shape[0] != n or X_exposure.shape[0] != n:
        raise DimensionMismatch("outcome, mediators and exposures need the same rows")
    p_m = M.shape[1]
    types = list(mediator_types)
    if len(types) != p_m or any(t not in ("continuous", "binary") for t in types):
        raise ValueError("mediator_types must give 'continuous' or 'binary' per mediator")
    c = np.array([1.0 if t == "continuous" else 0.0 for t in types])
    exposure_names = tuple(exposure_names) or tuple(f"x{k + 1}" for k in range(X_exposure.shape[1]))
    mediator_names = tuple(mediator_names) or tuple(f"m{j + 1}" for j in range(p_m))

    if rng is None:
        if seed is None:
            raise ValueError("provide seed or rng")
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(int(rng.integers(2 ** 63)))
    out_ss, *med_ss = ss.spawn(1 + p_m)

    pca = pca_project(X_exposure, variance_target)
    p_x = pca.p_x
    outcome_cfg = outcome_cfg or outcome_config()
    mediator_cfg = mediator_cfg or replace(outcome_cfg, t2=100.0)

    Z = np.hstack([M, pca.X_star])
    names = mediator_names + tuple(f"pc{k + 1}" for k in range(p_x))
    out_data = SurvivalDataset.from_arrays(data.times, data.events, Z, names)

    def fit_outcome():
        return run_gaussian_weibull_chain(out_data, outcome_cfg, np.random.default_rng(out_ss),
                                          backend)

    def fit_mediator(j):
        r = np.random.default_rng(med_ss[j])
        if c[j] == 1.0:
            return run_linear_chain(M[:, j], pca.X_star, mediator_cfg, r, backend)
        return run_logistic_chain(M[:, j], pca.X_star, mediator_cfg, r, backend)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            fut_out = ex.submit(fit_outcome)
            med = list(ex.map(fit_mediator, range(p_m)))
            outcome = fut_out.result()
    else:
        outcome = fit_outcome()
        med = [fit_mediator(j) for j in range(p_m)]

    _, coef_raw = out_data.back_transform(outcome["beta0"], outcome["beta"])
    arrays = {"outcome": coef_raw}
    arrays.update({f"m{j}": d["coef"] for j, d in enumerate(med)})
    T = _align(arrays, strict_alignment)

    beta_m = coef_raw[:T, :p_m]
    tau_D = coef_raw[:T, p_m:]
    tau_I = np.empty((T, p_x))
    alpha = np.empty((p_x, p_m))
    xi = np.empty(p_m)
    for t in range(T):
        for j, d in enumerate(med):
            alpha[:, j] = d["coef"][t]
            xi[j] = d["intercept"][t]
        tau_I[t] = indirect_effects(alpha, beta_m[t], xi, c, pca.X_star, full_predictor)
    indirect = rotate_to_original(tau_I, pca.rotation)
    direct = rotate_to_original(tau_D, pca.rotation)
    total = direct + indirect
    draws = {"tau_D": tau_D, "tau_I": tau_I, "beta_mediator": beta_m, "indirect": indirect,
             "direct": direct, "total": total}
    chains = {"outcome": outcome, "mediators": med}
    return MediationResult(exposure_names, mediator_names, pca, draws, mean_age_years, chains)


def simulate_mediation_data(rng, n=1000, p=6, alpha=0.5, beta=-0.4, direct=0.0,
                            theta=1.5, censor_rate=0.2, planted=0, signal=True):
    """Synthetic exposures, one continuous mediator and a Weibull outcome.

    The mediator is ``alpha * X*_planted + N(0, 1)`` where ``X*`` are the
    standardized principal-component scores of the exposures, and the
    outcome log-scale is ``beta * M + direct * X*_planted``. With
    ``signal=False`` the outcome ignores both. Censoring times are uniform,
    scaled to hit roughly ``censor_rate``.

    Returns ``(data, M, X, projection)``.
    """
    # two correlated blocks so the leading components are well separated
    f = rng.standard_normal((n, 2))
    load = np.zeros((p, 2))
    load[: p // 2, 0] = 0.9
    load[p // 2:, 1] = 0.7
    X = f @ load.T + rng.standard_normal((n, p)) * 0.5
    pca = pca_project(X, 0.70)
    xs = pca.X_star[:, planted]
    m = alpha * xs + rng.standard_normal(n)
    if signal:
        eta = 0.5 + beta * m + direct * xs
    else:
        eta = np.full(n, 0.5)
    t = np.exp(eta) * rng.standard_exponential(n) ** (1.0 / theta)
    cmax = np.quantile(t, 1.0 - censor_rate / 2.0) * 2.0
    cens = rng.uniform(0.0, cmax, n)
    events = (t <= cens).astype(int)
    y = np.minimum(t, cens)
    data = SurvivalDataset.from_arrays(y, events, np.zeros((n, 0)))
    return data, m[:, None], X, pca

"""Censored Weibull regression data model.

Survival times follow the Weibull law with shape ``theta`` and log-scale
``eta = beta0 + x @ beta``::

    f(y) = theta * y**(theta - 1) * exp(-theta * eta) * exp(-y**theta * exp(-theta * eta))

``events[i] == 1`` marks an observed event; ``0`` marks a right-censored
record whose ``time`` is the censoring time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import (
    DataValidationError,
    DegenerateColumn,
    NoConvergence,
    NonFiniteResult,
    TooFewEvents,
)

__all__ = [
    "SurvivalDataset",
    "WeibullParams",
    "standardize",
    "log_likelihood",
    "weibull_mle_theta",
    "read_survival_csv",
]


def standardize(X_raw, events):
    """Centre and scale columns using the uncensored rows only.

    Uses the sample standard deviation (``n - 1`` denominator).

    Returns
    -------
    X_std, col_means, col_sds
    """
    X_raw = np.asarray(X_raw, dtype=float)
    events = np.asarray(events)
    if X_raw.ndim != 2:
        raise DataValidationError("X_raw must be a 2-d array")
    mask = events == 1
    n_ev = int(mask.sum())
    if n_ev < 2:
        raise TooFewEvents(n_ev)
    sub = X_raw[mask]
    means = sub.mean(axis=0)
    sds = sub.std(axis=0, ddof=1)
    for j, s in enumerate(sds):
        # relative test so that huge-magnitude constant columns are still caught
        if not np.isfinite(s) or s <= 1e-14 * max(1.0, abs(means[j])):
            raise DegenerateColumn(j)
    X_std = (X_raw - means) / sds
    return X_std, means, sds


def _as_design(X, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[0] == n:
        return X
    try:
        return X.reshape(n, -1)
    except ValueError:
        raise DataValidationError(f"design matrix has shape {X.shape}, expected {n} rows") from None


@dataclass(frozen=True)
class SurvivalDataset:
    """Right-censored survival data with covariates standardized on the events.

    Build with :meth:`from_arrays` (validates and standardizes). Direct
    construction skips standardization and the event-count check, which the
    fixed-prior outcome sampler relies on for prior-only runs.
    """

    times: np.ndarray
    events: np.ndarray
    X_raw: np.ndarray
    X_std: np.ndarray
    col_means: np.ndarray
    col_sds: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        events = np.asarray(self.events, dtype=np.int64)
        if times.ndim != 1 or events.shape != times.shape:
            raise DataValidationError("times and events must be 1-d arrays of equal length")
        if times.size and not np.all(np.isfinite(times) & (times > 0)):
            raise DataValidationError("all survival times must be finite and strictly positive")
        if not np.all((events == 0) | (events == 1)):
            raise DataValidationError("events must be coded 0 (censored) or 1 (event)")
        X_raw = _as_design(self.X_raw, times.size)
        X_std = _as_design(self.X_std, times.size)
        if X_raw.shape != X_std.shape:
            raise DataValidationError("X_raw and X_std must share dimensions")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "X_raw", X_raw)
        object.__setattr__(self, "X_std", X_std)
        object.__setattr__(self, "col_means", np.asarray(self.col_means, dtype=float))
        object.__setattr__(self, "col_sds", np.asarray(self.col_sds, dtype=float))
        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(X_raw.shape[1]))
        if len(names) != X_raw.shape[1]:
            raise DataValidationError("one name per covariate column is required")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_arrays(cls, times, events, X_raw, names=()):
        times = np.asarray(times, dtype=float)
        X_raw = np.asarray(X_raw, dtype=float)
        if X_raw.ndim == 1:
            X_raw = X_raw.reshape(-1, 1)
        if X_raw.shape[0] != times.shape[0]:
            raise DataValidationError(
                f"X_raw has {X_raw.shape[0]} rows but there are {times.shape[0]} times")
        events = np.asarray(events)
        if X_raw.shape[1] == 0:
            n_ev = int(np.sum(events == 1))
            if n_ev < 2:
                raise TooFewEvents(n_ev)
            X_std, means, sds = X_raw.copy(), np.zeros(0), np.zeros(0)
        else:
            X_std, means, sds = standardize(X_raw, events)
        return cls(times, events, X_raw, X_std, means, sds, tuple(names))

    @property
    def n(self):
        return self.times.size

    @property
    def p(self):
        return self.X_std.shape[1]

    @property
    def n_events(self):
        return int(self.events.sum())

    def back_transform(self, beta0, beta):
        """Map coefficients on standardized covariates to the raw covariate scale.

        Accepts a single draw or stacked draws (leading axis = draws).
        """
        beta = np.asarray(beta, dtype=float)
        beta_raw = beta / self.col_sds
        beta0_raw = np.asarray(beta0, dtype=float) - beta_raw @ self.col_means
        return beta0_raw, beta_raw


@dataclass(frozen=True)
class WeibullParams:
    theta: float
    beta0: float
    beta: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise ValueError("theta must be positive and finite")
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))


def log_likelihood(data: SurvivalDataset, params: WeibullParams) -> float:
    """Censored Weibull log-likelihood on the standardized design."""
    theta = params.theta
    eta = params.beta0 + data.X_std @ params.beta if data.p else np.full(data.n, params.beta0)
    log_y = np.log(data.times)
    d = data.events
    with np.errstate(over="ignore", invalid="ignore"):
        cum_hazard = np.exp(theta * (log_y - eta))
        ll = np.sum(d * (np.log(theta) + (theta - 1.0) * log_y - theta * eta)) - np.sum(cum_hazard)
    if not np.isfinite(ll):
        raise NonFiniteResult("Weibull log-likelihood overflowed for the given parameters")
    return float(ll)


def _profile_loglik(log_theta, log_y, events):
    theta = np.exp(log_theta)
    d = events.sum()
    log_s = logsumexp(theta * log_y)
    # intercept maximising the likelihood at this shape is exp(theta*b0) = S/d
    return d * log_theta + (theta - 1.0) * np.sum(events * log_y) - d * (log_s - np.log(d)) - d


def weibull_mle_theta(data: SurvivalDataset) -> float:
    """Profile-likelihood MLE of the Weibull shape for an intercept-only model.

    The intercept is profiled out in closed form; the shape is found by a
    bounded Brent search on ``log(theta)`` over ``[-5, 5]``.
    """
    log_y = np.log(data.times)
    events = data.events.astype(float)
    if events.sum() < 1:
        raise TooFewEvents(int(events.sum()))
    res = minimize_scalar(
        lambda lt: -_profile_loglik(lt, log_y, events),
        bounds=(-5.0, 5.0),
        method="bounded",
        options={"xatol": 1e-10, "maxiter": 500},
    )
    if not res.success or not np.isfinite(res.x):
        raise NoConvergence(f"shape MLE search failed: {res.message}")
    return float(np.exp(res.x))


def read_survival_csv(path, time_col="time", status_col="status"):
    """Read a survival CSV (header row; ``time``, ``status`` plus covariates).

    Raises :class:`DataValidationError` naming the offending line or column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: file is empty") from None
        for col in (time_col, status_col):
            if col not in header:
                raise DataValidationError(f"{path}: missing required column {col!r}")
        ti, si = header.index(time_col), header.index(status_col)
        cov_idx = [k for k in range(len(header)) if k not in (ti, si)]
        names = [header[k] for k in cov_idx]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataValidationError(f"{path}:{lineno}: non-numeric value") from None
            if not vals[ti] > 0 or not np.isfinite(vals[ti]):
                raise DataValidationError(f"{path}:{lineno}: time must be positive")
            if vals[si] not in (0.0, 1.0):
                raise DataValidationError(f"{path}:{lineno}: status must be 0 or 1")
            rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    arr = np.asarray(rows)
    return SurvivalDataset.from_arrays(arr[:, ti], arr[:, si].astype(int), arr[:, cov_idx], names)

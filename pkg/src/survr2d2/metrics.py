"""Estimation, selection, coverage and concordance metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import LengthMismatch, NoComparablePairs, OneClassOnly

__all__ = [
    "SelectionScore",
    "sse_decomposition",
    "selection_auc",
    "coverage",
    "c_index",
    "significance_and_scores",
]


@dataclass(frozen=True)
class SelectionScore:
    scores: np.ndarray
    flags: np.ndarray


def sse_decomposition(beta_hat, beta_true):
    """Squared error split into the true-nonzero and true-zero coefficients.

    Returns ``(overall, nonzero, zero)`` with ``overall == nonzero + zero``.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise LengthMismatch(f"lengths differ: {beta_hat.shape} vs {beta_true.shape}")
    sq = (beta_hat - beta_true) ** 2
    nz = beta_true != 0
    nonzero = float(np.sum(sq[nz]))
    zero = float(np.sum(sq[~nz]))
    return nonzero + zero, nonzero, zero


def selection_auc(scores, truth_nonzero):
    """Mann-Whitney AUC of ``scores`` for the positive class; ties count one half."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth_nonzero).astype(bool)
    if scores.shape != truth.shape:
        raise LengthMismatch("scores and truth must have the same length")
    n1 = int(truth.sum())
    n0 = truth.size - n1
    if n1 == 0 or n0 == 0:
        raise OneClassOnly("AUC needs both positive and negative cases")
    ranks = rankdata(scores)
    return float((ranks[truth].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def coverage(draws, beta_true, level=0.95):
    """Fraction of coefficients whose equal-tailed credible interval contains the truth.

    ``draws`` is a :class:`PosteriorDraws` or an (n_draws, p) array.
    """
    arr = draws["beta"] if not isinstance(draws, np.ndarray) else draws
    beta_true = np.asarray(beta_true, dtype=float)
    if arr.shape[1] != beta_true.size:
        raise LengthMismatch("draws and beta_true disagree on p")
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(arr, [a, 1.0 - a], axis=0)
    return float(np.mean((lo <= beta_true) & (beta_true <= hi)))


def c_index(risk, times, events):
    """Harrell's concordance for right-censored data.

    A pair is comparable when the smaller observed time is an event (strictly
    smaller). It is concordant when that member has the higher risk; equal
    risks score one half.
    """
    risk = np.asarray(risk, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events).astype(bool)
    if not (risk.shape == times.shape == events.shape):
        raise LengthMismatch("risk, times and events must have equal length")
    order = np.argsort(times, kind="stable")
    t, e, r = times[order], events[order], risk[order]
    num = 0.0
    den = 0
    n = t.size
    for i in range(n):
        if not e[i]:
            continue
        later = t > t[i]
        k = int(later.sum())
        if k == 0:
            continue
        rl = r[later]
        num += np.sum(r[i] > rl) + 0.5 * np.sum(r[i] == rl)
        den += k
    if den == 0:
        raise NoComparablePairs("no comparable pairs")
    return float(num / den)


def significance_and_scores(draws, level=0.95) -> SelectionScore:
    """CI-exclusion flags and the continuous score ``1 - 2 min(P(b>0), P(b<0))``."""
    arr = draws["beta"] if not isinstance(draws, np.ndarray) else draws
    arr = np.asarray(arr, dtype=float)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(arr, [a, 1.0 - a], axis=0)
    flags = (lo > 0) | (hi < 0)
    p_pos = np.mean(arr > 0, axis=0)
    p_neg = np.mean(arr < 0, axis=0)
    scores = np.clip(1.0 - 2.0 * np.minimum(p_pos, p_neg), 0.0, 1.0)
    return SelectionScore(scores, flags.astype(int))

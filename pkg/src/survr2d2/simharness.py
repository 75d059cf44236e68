"""Synthetic benchmark: AR(1) covariates, sparse Weibull truth, fixed right censoring."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import SamplerConfig, run_horseshoe_chain, run_r2d2_chain
from .errors import SurvR2D2Error
from .metrics import c_index, coverage, selection_auc, significance_and_scores, sse_decomposition
from .model import SurvivalDataset, weibull_mle_theta
from .prior import R2D2Hyper, fit_gbp_approx

__all__ = [
    "SimDesign",
    "MethodSpec",
    "beta_pattern",
    "generate_ar1",
    "generate_dataset",
    "run_replicate",
    "run_benchmark",
    "aggregate",
    "read_external_results",
    "DESK_PROFILE",
    "FULL_PROFILE",
    "default_methods",
]

log = logging.getLogger(__name__)

BETA_1 = np.array([2.5, -2.0, 0.5, -1.0, 1.5])
BETA_2 = np.array([-1.5, -0.5, 2.0, -2.5, 1.0])

DESK_PROFILE = {"replicates": 10, "iterations": 20000, "burn_in": 6000, "thin": 3}
FULL_PROFILE = {"replicates": 100, "iterations": 100000, "burn_in": 30000, "thin": 3}

METRIC_NAMES = ("sse_overall", "sse_nonzero", "sse_zero", "auc", "coverage", "c_index")


def beta_pattern(p):
    z5 = np.zeros(5)
    if p == 100:
        return np.concatenate([z5, BETA_1, z5, BETA_2, np.zeros(80)])
    if p == 500:
        return np.concatenate([z5, BETA_1, z5, BETA_2, z5, -BETA_1, z5, -BETA_2, np.zeros(460)])
    raise ValueError("coefficient pattern is defined for p = 100 or 500")


@dataclass(frozen=True)
class SimDesign:
    p: int = 100
    n_uncensored: int = 60
    rho: float = 0.5
    log_theta_true: float = 0.5
    censor_quantile: float = 0.65
    replicates: int = 10
    seed: int = 0
    beta: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be < 1")
        if not 0 < self.censor_quantile < 1:
            raise ValueError("censor_quantile must lie in (0, 1)")
        if self.beta is None:
            object.__setattr__(self, "beta", beta_pattern(self.p))
        else:
            b = np.asarray(self.beta, dtype=float)
            if b.size != self.p:
                raise ValueError("beta length must equal p")
            object.__setattr__(self, "beta", b)

    @property
    def n_total(self):
        return int(round(self.n_uncensored / self.censor_quantile))

    @property
    def setting(self):
        return f"p{self.p}_rho{self.rho:g}"


@dataclass(frozen=True)
class MethodSpec:
    name: str
    prior: str  # "r2d2" or "horseshoe"
    hyper: R2D2Hyper | None = None


def default_methods():
    return [
        MethodSpec("R2D2(0.5,0.5)", "r2d2", R2D2Hyper(0.5, 0.5)),
        MethodSpec("R2D2(1,5)", "r2d2", R2D2Hyper(1.0, 5.0)),
        MethodSpec("R2D2(5,1)", "r2d2", R2D2Hyper(5.0, 1.0)),
        MethodSpec("HS", "horseshoe"),
    ]


def generate_ar1(n, p, rho, rng):
    """Rows iid; within a row ``X_1 ~ N(0,1)``, ``X_{j+1} = rho X_j + sqrt(1-rho^2) e``."""
    if not abs(rho) < 1:
        raise ValueError("|rho| must be < 1")
    E = rng.standard_normal((n, p))
    X = np.empty((n, p))
    if p == 0:
        return X
    s = math.sqrt(1.0 - rho * rho)
    X[:, 0] = E[:, 0]
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + s * E[:, j]
    return X


def generate_dataset(design: SimDesign, rng):
    """Simulate one replicate; returns ``(dataset, beta_true, beta0_true)``.

    Times above the empirical censoring quantile are set to that value and
    marked censored, so every censored record shares one threshold.
    """
    n = design.n_total
    X = generate_ar1(n, design.p, design.rho, rng)
    beta = design.beta
    beta0 = float(rng.standard_normal())
    theta = math.exp(design.log_theta_true)
    eta = beta0 + X @ beta
    # Weibull(theta, scale e^eta): Y = e^eta * E^(1/theta), E ~ Exp(1)
    y = np.exp(eta) * rng.standard_exponential(n) ** (1.0 / theta)
    k = int(round(design.censor_quantile * n))
    threshold = np.sort(y)[k - 1]
    events = (y <= threshold).astype(int)
    y = np.minimum(y, threshold)
    data = SurvivalDataset.from_arrays(y, events, X)
    return data, beta, beta0


def _replicate_metrics(data, beta_true, draws):
    # truth lives on the raw covariate scale; compare there
    b0_raw, b_raw = data.back_transform(draws["beta0"], draws["beta"])
    med = np.median(b_raw, axis=0)
    overall, nz, zero = sse_decomposition(med, beta_true)
    sel = significance_and_scores(b_raw)
    truth_nz = beta_true != 0
    try:
        auc = selection_auc(sel.scores, truth_nz)
    except SurvR2D2Error:
        auc = float("nan")
    cov = coverage(b_raw, beta_true)
    eta_hat = np.median(b0_raw) + data.X_raw @ med
    ci = c_index(-eta_hat, data.times, data.events)
    return {"sse_overall": overall, "sse_nonzero": nz, "sse_zero": zero, "auc": auc,
            "coverage": cov, "c_index": ci, "n_selected": int(sel.flags.sum())}


def run_replicate(design: SimDesign, methods, replicate, seed_seq, chain_cfg: SamplerConfig,
                  backend=None):
    """Generate one dataset and fit every method. One row per method."""
    data_ss, *method_ss = seed_seq.spawn(1 + len(methods))
    data, beta_true, _ = generate_dataset(design, np.random.default_rng(data_ss))
    theta_hat = weibull_mle_theta(data)
    rows = []
    for spec, ss in zip(methods, method_ss):
        rng = np.random.default_rng(ss)
        row = {"method": spec.name, "setting": design.setting, "replicate": replicate}
        try:
            if spec.prior == "r2d2":
                gbp = fit_gbp_approx(theta_hat, spec.hyper).params
                cfg = _with(chain_cfg, hyper=spec.hyper, gbp=gbp)
                draws = run_r2d2_chain(data, cfg, rng, backend)
            elif spec.prior == "horseshoe":
                draws = run_horseshoe_chain(data, chain_cfg, rng, backend)
            else:
                raise ValueError(f"unknown prior {spec.prior!r}")
            row.update(_replicate_metrics(data, beta_true, draws))
            row["status"] = "ok"
        except (SurvR2D2Error, ValueError, FloatingPointError) as exc:
            log.warning("replicate %d method %s failed: %s", replicate, spec.name, exc)
            row.update({k: float("nan") for k in METRIC_NAMES})
            row["status"] = f"failed: {type(exc).__name__}"
        rows.append(row)
    return rows


def _with(cfg: SamplerConfig, **kw):
    from dataclasses import replace
    return replace(cfg, **kw)


def run_benchmark(designs, methods, seed, chain_cfg: SamplerConfig | None = None, threads=1,
                  backend=None):
    """Run every design x method x replicate; returns the per-replicate rows.

    Replicate seeds are spawned from ``SeedSequence(seed)`` per design and
    replicate, so results do not depend on ``threads``.
    """
    methods = list(methods)
    if not methods:
        return []
    chain_cfg = chain_cfg or SamplerConfig(**{k: v for k, v in DESK_PROFILE.items()
                                              if k != "replicates"})
    root = np.random.SeedSequence(seed)
    jobs = []
    for design, dss in zip(designs, root.spawn(len(designs))):
        for r, rss in enumerate(dss.spawn(design.replicates)):
            jobs.append((design, r, rss))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda j: run_replicate(j[0], methods, j[1], j[2], chain_cfg,
                                                        backend), jobs))
    else:
        parts = [run_replicate(d, methods, r, s, chain_cfg, backend) for d, r, s in jobs]
    return [row for part in parts for row in part]


def aggregate(rows, metrics=METRIC_NAMES):
    """Mean and standard error per (setting, method, metric), failures excluded."""
    cells = {}
    for row in rows:
        cells.setdefault((row["setting"], row["method"]), []).append(row)
    out = []
    for (setting, method), rs in sorted(cells.items()):
        for m in metrics:
            vals = np.array([r[m] for r in rs if m in r], dtype=float)
            vals = vals[np.isfinite(vals)]
            k = vals.size
            mean = float(vals.mean()) if k else float("nan")
            se = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
            out.append({"setting": setting, "method": method, "metric": m, "mean": mean,
                        "se": se, "n": k})
    return out


def read_external_results(path):
    """Read externally computed rows (columns: method, setting, replicate, metric, value)."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"method", "setting", "replicate", "metric", "value"}
        missing = need - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            key = (rec["method"], rec["setting"], int(rec["replicate"]))
            row = rows.setdefault(key, {"method": key[0], "setting": key[1],
                                        "replicate": key[2], "status": "external"})
            row[rec["metric"]] = float(rec["value"])
    return list(rows.values())

"""Command-line entry point: ``survr2d2 {fit,simulate,mediate,approx-gbp}``.

Settings are layered: built-in defaults, then a TOML config file
(``--config``; top-level keys or a table named after the subcommand), then
explicit flags. ``--seed`` is required, either as a flag or in the config.
Outputs go to ``--output-dir``, else ``$SURVR2D2_OUTPUT_DIR``, else the
working directory.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 chain failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import re
import sys

import numpy as np

from . import __version__
from ._io import atomic_write_text, rows_to_csv, to_json, write_json
from .engine import (SamplerConfig, outcome_config, run_gaussian_weibull_chain,
                     run_horseshoe_chain, run_r2d2_chain)
from .errors import ChainDiverged, DataValidationError, InfeasibleRegion, NoConvergence
from .mediation import run_mediation, select_mediators
from .model import SurvivalDataset, read_survival_csv, weibull_mle_theta
from .prior import R2D2Hyper, fit_gbp_approx
from .simharness import (DESK_PROFILE, FULL_PROFILE, MethodSpec, SimDesign, aggregate,
                         default_methods, read_external_results, run_benchmark)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("survr2d2")

EXIT_USAGE, EXIT_INPUT, EXIT_CHAIN = 1, 2, 3

DEFAULTS = {
    "fit": {"prior": "r2d2", "a": 0.5, "b": 0.5, "iterations": 20000, "burn_in": 6000,
            "thin": 3, "time_col": "time", "status_col": "status"},
    "simulate": {"p": 100, "rho": 0.5, "n_uncensored": None, "profile": "desk",
                 "replicates": None, "iterations": None, "burn_in": None, "thin": None,
                 "methods": None, "external_results": None},
    "mediate": {"variance_target": 0.70, "iterations": 20000, "burn_in": 5000, "thin": 1,
                "mean_age": None, "binary": None, "select": False, "select_iterations": 20000,
                "select_burn_in": 6000, "full_predictor": False,
                "time_col": "time", "status_col": "status"},
    "approx-gbp": {"a": 0.5, "b": 0.5, "theta": None},
}
COMMON = {"seed": None, "output_dir": None, "threads": None}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--seed", type=int, help="master RNG seed (required)")
    p.add_argument("--config", help="TOML file with default settings")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quiet", action="store_true")
    g.add_argument("--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="survr2d2", description="R2D2 shrinkage for censored Weibull regression")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit a survival CSV")
    f.add_argument("data", help="CSV with time, status and covariate columns")
    f.add_argument("--prior", choices=["r2d2", "horseshoe", "gaussian"])
    f.add_argument("--a", type=float)
    f.add_argument("--b", type=float)
    f.add_argument("--iterations", type=int)
    f.add_argument("--burn-in", dest="burn_in", type=int)
    f.add_argument("--thin", type=int)
    f.add_argument("--time-col", dest="time_col")
    f.add_argument("--status-col", dest="status_col")
    _common(f)

    s = sub.add_parser("simulate", help="run the synthetic benchmark")
    s.add_argument("--p", type=int, choices=[100, 500])
    s.add_argument("--rho", type=float)
    s.add_argument("--n-uncensored", dest="n_uncensored", type=int)
    s.add_argument("--profile", choices=["desk", "full"])
    s.add_argument("--replicates", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--burn-in", dest="burn_in", type=int)
    s.add_argument("--thin", type=int)
    s.add_argument("--methods", help="comma-separated subset of: " +
                   ",".join(m.name for m in default_methods()))
    s.add_argument("--external-results", dest="external_results")
    _common(s)

    m = sub.add_parser("mediate", help="mediation analysis")
    m.add_argument("--outcome", required=True, help="CSV with time and status")
    m.add_argument("--mediators", required=True, help="CSV of mediators (header row)")
    m.add_argument("--exposures", required=True, help="CSV of exposures (header row)")
    m.add_argument("--binary", help="comma-separated binary mediator names (default: 0/1 columns)")
    m.add_argument("--variance-target", dest="variance_target", type=float)
    m.add_argument("--iterations", type=int)
    m.add_argument("--burn-in", dest="burn_in", type=int)
    m.add_argument("--thin", type=int)
    m.add_argument("--mean-age", dest="mean_age", type=float)
    m.add_argument("--select", action="store_const", const=True,
                   help="first keep only mediators selected by the R2D2 survival model")
    m.add_argument("--full-predictor", dest="full_predictor", action="store_const", const=True,
                   help="evaluate the binary-mediator weight at the full linear predictor")
    m.add_argument("--time-col", dest="time_col")
    m.add_argument("--status-col", dest="status_col")
    _common(m)

    g = sub.add_parser("approx-gbp", help="fit the GBP approximation to the induced prior")
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--theta", type=float)
    _common(g)
    return parser


def _settings(args):
    """Merge defaults < config file < explicit flags."""
    cmd = args.command
    merged = dict(COMMON)
    merged.update(DEFAULTS[cmd])
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                cfg = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise DataValidationError(f"{args.config}: {exc}") from None
        top = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
        sect = {k.replace("-", "_"): v for k, v in cfg.get(cmd, {}).items()}
        for src in (top, sect):
            unknown = set(src) - set(merged)
            if unknown:
                raise DataValidationError(f"{args.config}: unknown settings {sorted(unknown)}")
            merged.update(src)
    for k, v in vars(args).items():
        if v is not None or k not in merged:
            merged[k] = v
    if merged["seed"] is None:
        raise DataValidationError("--seed is required (flag or config file)")
    if merged["threads"] is None:
        merged["threads"] = os.cpu_count() or 1
    out = merged["output_dir"] or os.environ.get("SURVR2D2_OUTPUT_DIR") or "."
    merged["output_dir"] = out
    return merged


def _read_numeric_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: file is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataValidationError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    return header, np.asarray(rows)


def _cmd_fit(st):
    data = read_survival_csv(st["data"], st["time_col"], st["status_col"])
    cfg = SamplerConfig(iterations=st["iterations"], burn_in=st["burn_in"], thin=st["thin"],
                        hyper=R2D2Hyper(st["a"], st["b"]), seed=st["seed"])
    rng = np.random.default_rng(st["seed"])
    log.info("fitting %s prior: n=%d, p=%d, events=%d", st["prior"], data.n, data.p,
             data.n_events)
    if st["prior"] == "r2d2":
        theta_hat = weibull_mle_theta(data)
        fit = fit_gbp_approx(theta_hat, cfg.hyper)
        log.info("GBP fit a*=%.4g b*=%.4g d*=%.4g divergence=%.3g", fit.params.a_star,
                 fit.params.b_star, fit.params.d_star, fit.divergence)
        from dataclasses import replace
        cfg = replace(cfg, gbp=fit.params)
        draws = run_r2d2_chain(data, cfg, rng)
    elif st["prior"] == "horseshoe":
        draws = run_horseshoe_chain(data, cfg, rng)
    else:
        draws = run_gaussian_weibull_chain(data, cfg, rng)
    summary = draws.to_summary_dict()
    b0_raw, b_raw = data.back_transform(draws["beta0"], draws["beta"])
    q = np.quantile(b_raw, [0.025, 0.5, 0.975], axis=0)
    for k, rec in enumerate(summary.get("coefficients", [])):
        rec["raw_scale"] = {"median": float(q[1, k]), "q025": float(q[0, k]),
                            "q975": float(q[2, k])}
    summary["data"] = {"path": os.path.basename(st["data"]), "n": data.n, "p": data.p,
                       "n_events": data.n_events}
    out = st["output_dir"]
    write_json(os.path.join(out, "summary.json"), summary)
    atomic_write_text(os.path.join(out, "trace.csv"), draws.trace_csv())
    log.info("wrote %s", os.path.join(out, "summary.json"))


def _cmd_simulate(st):
    prof = dict(DESK_PROFILE if st["profile"] == "desk" else FULL_PROFILE)
    for k in ("replicates", "iterations", "burn_in", "thin"):
        if st[k] is not None:
            prof[k] = st[k]
    n_unc = st["n_uncensored"] or (60 if st["p"] == 100 else 100)
    design = SimDesign(p=st["p"], n_uncensored=n_unc, rho=st["rho"],
                       replicates=prof["replicates"], seed=st["seed"])
    methods = default_methods()
    if st["methods"]:
        # names like R2D2(1,5) carry commas; split only outside parentheses
        wanted = [w.strip() for w in re.split(r",(?![^(]*\))", st["methods"]) if w.strip()]
        by_name = {m.name: m for m in methods}
        bad = [w for w in wanted if w not in by_name]
        if bad:
            raise DataValidationError(f"unknown methods {bad}; choose from {sorted(by_name)}")
        methods = [by_name[w] for w in wanted]
    chain = SamplerConfig(iterations=prof["iterations"], burn_in=prof["burn_in"],
                          thin=prof["thin"], seed=st["seed"])
    log.info("simulating %s: %d replicates x %d methods", design.setting, design.replicates,
             len(methods))
    rows = run_benchmark([design], methods, st["seed"], chain, threads=st["threads"])
    if st["external_results"]:
        try:
            rows += read_external_results(st["external_results"])
        except (OSError, ValueError) as exc:
            raise DataValidationError(str(exc)) from None
    out = st["output_dir"]
    atomic_write_text(os.path.join(out, "replicates.csv"), rows_to_csv(rows))
    atomic_write_text(os.path.join(out, "aggregate.csv"), rows_to_csv(aggregate(rows)))
    write_json(os.path.join(out, "replicates.json"),
               {"design": {"p": design.p, "rho": design.rho, "n_uncensored": n_unc,
                           "n_total": design.n_total, "replicates": design.replicates},
                "chain": chain.echo(), "rows": rows})


def _cmd_mediate(st):
    data = read_survival_csv(st["outcome"], st["time_col"], st["status_col"])
    mnames, M = _read_numeric_csv(st["mediators"])
    xnames, X = _read_numeric_csv(st["exposures"])
    if M.shape[0] != data.n or X.shape[0] != data.n:
        raise DataValidationError("outcome, mediator and exposure files need the same rows")
    if st["binary"] is not None:
        binary = {b.strip() for b in st["binary"].split(",") if b.strip()}
        missing = binary - set(mnames)
        if missing:
            raise DataValidationError(f"unknown binary mediators {sorted(missing)}")
    else:
        binary = {nm for nm, col in zip(mnames, M.T) if np.all((col == 0) | (col == 1))}
    keep = list(range(len(mnames)))
    if st["select"]:
        sel_data = SurvivalDataset.from_arrays(data.times, data.events, M, mnames)
        cfg = SamplerConfig(iterations=st["select_iterations"], burn_in=st["select_burn_in"],
                            seed=st["seed"])
        idx, _ = select_mediators(sel_data, cfg, np.random.default_rng(st["seed"]))
        keep = [int(i) for i in idx]
        log.info("selected mediators: %s", [mnames[i] for i in keep])
        if not keep:
            raise DataValidationError("no mediators selected")
    names = tuple(mnames[i] for i in keep)
    types = ["binary" if nm in binary else "continuous" for nm in names]
    ocfg = outcome_config(iterations=st["iterations"], burn_in=st["burn_in"], thin=st["thin"],
                          seed=st["seed"])
    res = run_mediation(data, M[:, keep], types, X, st["variance_target"], outcome_cfg=ocfg,
                        seed=st["seed"], exposure_names=xnames, mediator_names=names,
                        mean_age_years=st["mean_age"], full_predictor=st["full_predictor"],
                        threads=st["threads"])
    out = st["output_dir"]
    payload = res.to_dict()
    payload["mediator_types"] = dict(zip(names, types))
    write_json(os.path.join(out, "mediation.json"), payload)
    rows = []
    for rec in res.table():
        row = {"covariate": rec["covariate"]}
        unit = "_days" if st["mean_age"] is not None else ""
        for k in ("indirect", "direct", "total"):
            e = rec[k + unit] if unit else rec[k]
            row[k] = f"{e['median']:.1f} ({e['q025']:.1f}, {e['q975']:.1f})" if unit else \
                f"{e['median']:.4f} ({e['q025']:.4f}, {e['q975']:.4f})"
        row["significant_total"] = rec["total"]["significant"]
        rows.append(row)
    atomic_write_text(os.path.join(out, "effects.csv"), rows_to_csv(rows))


def _cmd_approx_gbp(st):
    if st["theta"] is None or not (st["theta"] > 0 and math.isfinite(st["theta"])):
        raise DataValidationError("--theta must be a positive number")
    if not (st["a"] > 0 and st["b"] > 0):
        raise DataValidationError("--a and --b must be positive")
    fit = fit_gbp_approx(st["theta"], R2D2Hyper(st["a"], st["b"]))
    rec = {"a": st["a"], "b": st["b"], "theta": st["theta"], "a_star": fit.params.a_star,
           "b_star": fit.params.b_star, "d_star": fit.params.d_star,
           "divergence": fit.divergence, "n_evals": fit.n_evals}
    sys.stdout.write(to_json(rec))
    if st["output_dir"] != ".":
        write_json(os.path.join(st["output_dir"], "gbp.json"), rec)


COMMANDS = {"fit": _cmd_fit, "simulate": _cmd_simulate, "mediate": _cmd_mediate,
            "approx-gbp": _cmd_approx_gbp}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)
    try:
        st = _settings(args)
        COMMANDS[args.command](st)
    except (DataValidationError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, FileNotFoundError):
            msg = f"file not found: {exc.filename}"
        else:
            msg = str(exc)
        print(f"survr2d2: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (ChainDiverged, InfeasibleRegion, NoConvergence) as exc:
        diag = getattr(exc, "diagnostics", {})
        print(f"survr2d2: chain failure: {exc}", file=sys.stderr)
        try:
            out = getattr(args, "output_dir", None) or os.environ.get("SURVR2D2_OUTPUT_DIR") or "."
            write_json(os.path.join(out, "diagnostics.json"),
                       {"error": type(exc).__name__, "message": str(exc), "diagnostics": diag})
        except OSError:
            pass
        return EXIT_CHAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_backends.py [--repeat 3] [--json out.json]

Both backends consume the random stream identically, so each workload also
checks that the two produce the same output.
"""

import argparse
import json
import time

import numpy as np

from survr2d2 import kernels
from survr2d2.engine import SamplerConfig, run_r2d2_chain
from survr2d2.simharness import SimDesign, generate_dataset


def _draws(K, rng, n=200000):
    out = np.empty(n)
    K.gig_fill(np.geomspace(1e-10, 10, n), 2.0, -0.45, rng, out)
    t = np.empty(n)
    K.truncnorm_fill(0.0, 1.0, 1.5, np.inf, rng, t)
    return np.concatenate([out, t])


def _sweep(K, rng, n=500, p=200, reps=20):
    r0 = np.random.default_rng(0)
    X = r0.standard_normal((n, p))
    XT = np.ascontiguousarray(X.T)
    log_y = r0.standard_normal(n)
    ev = (r0.random(n) < 0.7).astype(np.int64)
    beta = np.zeros(p)
    xb = X @ beta
    gap = np.empty(n)
    for _ in range(reps):
        K.refresh_gaps(log_y, xb, 0.0, 1.5, rng, gap)
        K.beta_sweep(XT, beta, xb, gap, 1.5, np.full(p, 0.5), XT @ ev, rng)
    return beta.copy()


def _chain(backend, seed):
    data, _, _ = generate_dataset(SimDesign(p=100), np.random.default_rng(1))
    cfg = SamplerConfig(iterations=2000, burn_in=500, thin=1, seed=seed)
    return run_r2d2_chain(data, cfg, backend=backend)["beta"]


WORKLOADS = {
    "gig+truncnorm fill (2x200k draws)": lambda name, r: _draws(kernels.get_backend(name), r),
    "latent refresh + coefficient sweep (n=500, p=200, 20 reps)":
        lambda name, r: _sweep(kernels.get_backend(name), r),
    "R2D2 chain (p=100, n=92, 2000 iterations)": lambda name, r: _chain(name, 7),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernels are not built; reinstall with a C compiler")
    results = []
    for label, fn in WORKLOADS.items():
        times, outs = {}, {}
        for name in ("cython", "python"):
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                outs[name] = fn(name, np.random.default_rng(123))
                best = min(best, time.perf_counter() - t0)
            times[name] = best
        same = bool(np.array_equal(outs["cython"], outs["python"]))
        speedup = times["python"] / times["cython"]
        results.append({"workload": label, "cython_s": times["cython"],
                        "python_s": times["python"], "speedup": speedup, "identical": same})
        print(f"{label:60s} cython {times['cython']:8.3f}s  python {times['python']:8.3f}s  "
              f"x{speedup:6.1f}  identical={same}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()

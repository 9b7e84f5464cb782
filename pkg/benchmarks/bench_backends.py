"""Timing comparison of the compiled and the numpy chunk kernels.

Runs the same Laplace-transform Monte Carlo (identical seeds, so identical
output) once per backend and per scheme, and prints paths/second plus the
speedup.  Usage:

    python3 benchmarks/bench_backends.py --paths 20000 --steps 500
"""

import argparse
import os
import time

import numpy as np

from volterra_lift import (DriverParams, ExponentialJumps, LiftMeasure,
                           LiftState, McConfig, TimeGrid, available_backends,
                           estimate_laplace_mc)


def run_case(scheme, backend, paths, steps, seed, threads):
    os.environ["VOLTERRA_LIFT_BACKEND"] = backend
    nu = LiftMeasure(rates=np.array([0.0, 0.5, 3.0, 20.0]),
                     weights=np.array([0.15, 0.35, 0.3, 0.2]))
    lam0 = LiftState(nu, np.array([0.1, 0.3, 0.4, 0.2]))
    drv = DriverParams(beta=-0.4, sigma=0.3,
                       jumps=ExponentialJumps(theta=5.0, eta=1.0))
    grid = TimeGrid(dt=1.0 / steps, steps=steps)
    mc = McConfig(paths=paths, seed=seed, scheme=scheme)
    kwargs = {}
    if scheme == "pure_jump":
        kwargs["n"] = 8
    elif scheme == "eps_jump":
        kwargs.update(w=1.0, eps=0.05, mu=drv.jumps)
    t0 = time.perf_counter()
    est = estimate_laplace_mc(-1.0, 1.0, lam0, drv, grid, mc,
                              threads=threads, **kwargs)
    elapsed = time.perf_counter() - t0
    return est, elapsed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    backends = available_backends()
    if "c" not in backends:
        print("compiled core not built; timing the python backend only")

    print(f"paths={args.paths} steps={args.steps} threads={args.threads}")
    print(f"{'scheme':<12}{'backend':<9}{'seconds':>9}{'paths/s':>12}{'mean':>14}")
    for scheme in ("hybrid", "pure_jump", "eps_jump"):
        times = {}
        for backend in backends:
            label = "c" if backend == "c" else "python"
            est, elapsed = run_case(scheme, label, args.paths, args.steps,
                                    args.seed, args.threads)
            times[label] = elapsed
            print(f"{scheme:<12}{label:<9}{elapsed:>9.3f}"
                  f"{args.paths / elapsed:>12.0f}{est.mean:>14.6f}")
        if "c" in times and "python" in times:
            print(f"{'':<12}speedup  {times['python'] / times['c']:>8.1f}x")
    os.environ.pop("VOLTERRA_LIFT_BACKEND", None)


if __name__ == "__main__":
    main()

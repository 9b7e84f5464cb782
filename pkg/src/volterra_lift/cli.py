"""Command line front end.

Subcommands: kernel-approx, resolvent, cone-check, simulate, price,
validate, converge.  Every run writes a ``run_manifest.json`` into the
output directory; failures leave an ``error.json`` instead.  Exit codes:
0 success, 1 unexpected failure, 2 configuration error, 3 validation
mismatch beyond three standard errors.

Tabular output is CSV by default (floats through repr, so bodies are
byte-identical across thread counts) or JSON with ``--format json``.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .cone import membership_report
from .config import config_hash, parse_config, serialize_config
from .kernels import (Fractional, eval_kernel, h_curve, kernel_from_measure,
                      l2_fit_error)
from .resolvent import (check_resolvent_identity, resolvent_nonnegative,
                        resolvent_second_kind)
from .riccati import (laplace_transform_lifted, laplace_transform_volterra,
                      riccati_eps_jump)
from .simulate import (active_backend, estimate_laplace_mc, simulate_eps_jump,
                       simulate_forward_lift, simulate_hybrid,
                       simulate_pure_jump_n)

__all__ = ["main"]


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_table(out_dir, name, header, rows, fmt):
    """Write rows as <name>.csv or <name>.json; returns the path."""
    if fmt == "json":
        path = os.path.join(out_dir, name + ".json")
        data = [dict(zip(header, [float(x) if isinstance(x, (float, np.floating))
                                  else x for x in row])) for row in rows]
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    else:
        path = os.path.join(out_dir, name + ".csv")
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def _write_json(out_dir, name, payload):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _scheme_kwargs(cfg):
    """Extra keyword arguments estimate_laplace_mc needs per scheme."""
    kw = {}
    if cfg.mc.scheme == "pure_jump":
        kw["n"] = cfg.n_list[0]
    elif cfg.mc.scheme == "eps_jump":
        kw["w"] = cfg.w
        kw["eps"] = cfg.eps
        kw["mu"] = cfg.driver.jumps
    return kw


def _analytic_at(cfg, u, t):
    """Reference transform for the configured scheme at (u, t)."""
    if cfg.mc.scheme == "eps_jump":
        j = cfg.grid.index_of(t)
        y = riccati_eps_jump(u, cfg.measure, cfg.w, cfg.eps,
                             cfg.driver.jumps, cfg.grid)
        return float(np.exp(y[j] @ cfg.lambda0.masses))
    return laplace_transform_lifted(u, cfg.lambda0, cfg.driver, t, cfg.grid)


# ---------------------------------------------------------------- commands

def _cmd_kernel_approx(cfg, args, out_dir):
    if not isinstance(cfg.kernel, Fractional):
        raise ConfigError("kernel-approx needs kernel.variant = fractional")
    nu = cfg.measure
    horizon = cfg.measure_horizon
    lo = cfg.delta_min if cfg.delta_min is not None else horizon / 100.0
    approx_kernel = kernel_from_measure(nu)
    _write_table(out_dir, "measure", ["rate", "weight"],
                 [(float(r), float(c)) for r, c in zip(nu.rates, nu.weights)],
                 args.format)
    ts = cfg.grid.nodes[1:]
    exact = eval_kernel(cfg.kernel, ts)
    approx = eval_kernel(approx_kernel, ts)
    _write_table(out_dir, "fit", ["t", "exact", "approx", "abs_error"],
                 [(float(t), float(e), float(a), float(abs(e - a)))
                  for t, e, a in zip(ts, exact, approx)], args.format)
    err = l2_fit_error(nu, cfg.kernel.alpha, (lo, horizon))
    _write_json(out_dir, "metrics.json", {
        "alpha": cfg.kernel.alpha,
        "n_atoms": int(nu.n_atoms),
        "window_lo": lo,
        "window_hi": horizon,
        "l2_error": err,
    })
    return {"l2_error": err}


def _cmd_resolvent(cfg, args, out_dir):
    table = resolvent_second_kind(cfg.kernel, cfg.w, cfg.grid)
    rows = [(float(t), float(v)) for t, v in zip(cfg.grid.nodes, table.values)]
    _write_table(out_dir, "resolvent", ["t", "value"], rows, args.format)
    residual = check_resolvent_identity(cfg.kernel, table)
    _write_json(out_dir, "metrics.json", {
        "w": cfg.w,
        "identity_residual": residual,
        "min_value": float(np.min(table.values)),
        "nonnegative": bool(resolvent_nonnegative(table)),
        "singular_origin": bool(table.singular_origin),
    })
    return {"identity_residual": residual}


def _cmd_cone_check(cfg, args, out_dir):
    report = membership_report(cfg.lambda0, cfg.measure, cfg.cone)
    payload = report.as_dict()
    payload["w_grid"] = [float(w) for w in cfg.cone.w_grid]
    _write_json(out_dir, "membership.json", payload)
    return {"member": report.member}


def _cmd_simulate(cfg, args, out_dir):
    scheme = cfg.mc.scheme
    seed = cfg.mc.seed
    if scheme == "hybrid":
        rec = simulate_hybrid(cfg.measure, cfg.lambda0, cfg.driver, cfg.grid, seed)
    elif scheme == "pure_jump":
        rec = simulate_pure_jump_n(cfg.measure, cfg.lambda0, cfg.driver,
                                   cfg.n_list[0], cfg.grid, seed)
    elif scheme == "eps_jump":
        rec = simulate_eps_jump(cfg.measure, cfg.lambda0, cfg.w, cfg.eps,
                                cfg.driver.jumps, cfg.grid, seed)
    else:
        curve = h_curve(cfg.lambda0, cfg.measure, cfg.grid)
        rec = simulate_forward_lift(cfg.kernel, curve, cfg.driver, cfg.grid, seed)
    header = ["t", "V"]
    coords = scheme != "forward_lift" and cfg.record_coords
    if coords:
        header += [f"lambda{i}" for i in range(cfg.measure.n_atoms)]
    rows = []
    for j, t in enumerate(cfg.grid.nodes):
        row = [float(t), float(rec.v[j])]
        if coords:
            row += [float(x) for x in rec.states[j]]
        rows.append(row)
    _write_table(out_dir, "path", header, rows, args.format)
    _write_json(out_dir, "summary.json", {
        "scheme": scheme,
        "v_final": float(rec.v[-1]),
        "v_min": float(np.min(rec.v)),
        "v_max": float(np.max(rec.v)),
        "n_jumps": int(rec.n_jumps) if rec.n_jumps is not None else None,
    })
    return {"v_final": float(rec.v[-1])}


def _cmd_price(cfg, args, out_dir):
    rows = []
    for u in cfg.u_list:
        for t in cfg.t_list:
            vv = laplace_transform_volterra(u, cfg.lambda0, cfg.kernel,
                                            cfg.driver, t, cfg.grid)
            vl = laplace_transform_lifted(u, cfg.lambda0, cfg.driver, t, cfg.grid)
            rows.append((float(u), float(t), vv, vl, abs(vv - vl)))
    _write_table(out_dir, "transform_sweep",
                 ["u", "t", "value_volterra", "value_lifted", "abs_diff"],
                 rows, args.format)
    u0, t0, vv0, vl0, d0 = rows[0]
    _write_json(out_dir, "price.json", {
        "u": u0, "t": t0,
        "value_volterra": vv0,
        "value_lifted": vl0,
        "abs_diff": d0,
    })
    return {"value_volterra": vv0, "value_lifted": vl0}


def _cmd_validate(cfg, args, out_dir, threads):
    u, t = cfg.u_list[0], cfg.t_list[0]
    est = estimate_laplace_mc(u, t, cfg.lambda0, cfg.driver, cfg.grid, cfg.mc,
                              threads=threads, **_scheme_kwargs(cfg))
    analytic = _analytic_at(cfg, u, t)
    z = (est.mean - analytic) / est.stderr if est.stderr > 0 else 0.0
    ok = abs(z) <= 3.0
    _write_json(out_dir, "validate.json", {
        "u": u, "t": t,
        "scheme": cfg.mc.scheme,
        "paths": cfg.mc.paths,
        "mc_mean": est.mean,
        "mc_stderr": est.stderr,
        "analytic": analytic,
        "z_score": z,
        "threshold": 3.0,
        "pass": ok,
    })
    return {"z_score": z, "pass": ok}


def _cmd_converge(cfg, args, out_dir, threads):
    u, t = cfg.u_list[0], cfg.t_list[0]
    analytic = laplace_transform_lifted(u, cfg.lambda0, cfg.driver, t, cfg.grid)
    mc = cfg.mc
    if mc.scheme != "pure_jump":
        from .simulate import McConfig
        mc = McConfig(paths=mc.paths, seed=mc.seed, scheme="pure_jump",
                      antithetic=False)
    rows = []
    for n in cfg.n_list:
        est = estimate_laplace_mc(u, t, cfg.lambda0, cfg.driver, cfg.grid, mc,
                                  threads=threads, n=n)
        rows.append((int(n), est.mean, est.stderr, analytic,
                     abs(est.mean - analytic)))
    _write_table(out_dir, "converge",
                 ["n", "mean", "stderr", "analytic", "abs_error"],
                 rows, args.format)
    errs = [r[4] for r in rows]
    _write_json(out_dir, "converge.json", {
        "u": u, "t": t,
        "n": [int(n) for n in cfg.n_list],
        "abs_error": errs,
        "analytic": analytic,
    })
    return {"abs_error": errs}


# ---------------------------------------------------------------- driver

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="volterra-lift",
        description="Affine Volterra jump-diffusion models through "
                    "finite-dimensional Markovian lifts.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI model file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="Monte Carlo worker threads "
                             "(default: VOLTERRA_LIFT_THREADS or 1)")
    common.add_argument("--seed", type=int, default=None,
                        help="override mc.seed from the config")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "kernel-approx": "exponential-sum fit of the fractional kernel",
        "resolvent": "resolvent of the second kind of w K",
        "cone-check": "invariant cone membership of the initial state",
        "simulate": "one sample path of the configured scheme",
        "price": "Laplace transform through both Riccati routes",
        "validate": "Monte Carlo against the analytic transform",
        "converge": "pure-jump approximation error over resolutions n",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _run(args) -> int:
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            import dataclasses

            from .simulate import McConfig
            mc = cfg.mc
            cfg = dataclasses.replace(cfg, mc=McConfig(
                paths=mc.paths, seed=args.seed, scheme=mc.scheme,
                antithetic=mc.antithetic))
    except (ValueError, OSError) as exc:
        _emit_error(args, exc, code=2)
        return 2

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("VOLTERRA_LIFT_THREADS", "1"))
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    started = time.perf_counter()
    try:
        if args.command == "kernel-approx":
            extra = _cmd_kernel_approx(cfg, args, out_dir)
        elif args.command == "resolvent":
            extra = _cmd_resolvent(cfg, args, out_dir)
        elif args.command == "cone-check":
            extra = _cmd_cone_check(cfg, args, out_dir)
        elif args.command == "simulate":
            extra = _cmd_simulate(cfg, args, out_dir)
        elif args.command == "price":
            extra = _cmd_price(cfg, args, out_dir)
        elif args.command == "validate":
            extra = _cmd_validate(cfg, args, out_dir, threads)
        else:
            extra = _cmd_converge(cfg, args, out_dir, threads)
    except ConfigError as exc:
        _emit_error(args, exc, code=2)
        return 2
    except Exception as exc:   # noqa: BLE001 - boundary of the process
        _emit_error(args, exc, code=1)
        return 1
    wall = time.perf_counter() - started

    import scipy
    manifest = {
        "command": args.command,
        "config_sha256": config_hash(cfg),
        "seed": cfg.mc.seed,
        "package_version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "backend": active_backend(),
        "threads": threads,
        "format": args.format,
        "wall_time_s": wall,
    }
    _write_json(out_dir, "run_manifest.json", manifest)
    with open(os.path.join(out_dir, "resolved_config.ini"), "w") as fh:
        fh.write(serialize_config(cfg))

    if args.command == "validate" and not extra["pass"]:
        print(f"validate: |z| = {abs(extra['z_score']):.2f} exceeds 3.0",
              file=sys.stderr)
        return 3
    return 0


def _emit_error(args, exc, code):
    payload = {
        "command": getattr(args, "command", None),
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    try:
        os.makedirs(args.out, exist_ok=True)
        _write_json(args.out, "error.json", payload)
    except OSError:
        pass
    print(f"error: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())

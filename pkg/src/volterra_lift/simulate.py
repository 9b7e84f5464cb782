"""Path simulation and Monte Carlo transform estimation.

Schemes
-------
hybrid
    Jump diffusion on the lifted state: dX_j = beta V+ dt + sigma
    sqrt(V+ dt) Z + sum of jump marks - V+ dt m1, then
    lambda_{j+1} = e^{-x dt} (lambda_j + nu dX_j).
pure_jump
    The diffusion part replaced by Poisson jumps of size 1/n at intensity
    sigma^2 n^2 V+, jump measure truncated below 1/n, drift adjusted by
    -n sigma^2 - int_{xi>1/n} xi m(dxi).
eps_jump
    Small-jump building block: explicit mean reversion -w V+ dt and
    uncompensated jumps entering the state through e^{-eps x} nu.
forward_lift
    The same driver increments applied to the forward curve
    lambda_t(x) ~ V_{t+x}: shift one cell per step and add
    K(x + dt/2) dX_j across the remaining window.

Randomness is counter-based: paths are processed in fixed chunks of
``CHUNK``; chunk k of a scheme uses an independent Philox stream keyed by
(seed, scheme id, k).  Chunk outputs land in preallocated per-path slots and
are reduced in a fixed order, so results do not depend on the thread count.
The compiled backend (if built) consumes the same streams and is
bit-identical to the numpy backend; set VOLTERRA_LIFT_BACKEND=c|py to force
one.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _mc_numpy
from .driver import (DriverParams, ExponentialJumps, FiniteAtomJumps,
                     jump_mean, jump_total_mass)
from .kernels import LiftMeasure, LiftState, TimeGrid, eval_kernel

try:
    from . import _mc_core
except ImportError:
    _mc_core = None

__all__ = [
    "CHUNK",
    "McConfig",
    "LaplaceEstimate",
    "PathRecord",
    "ForwardPath",
    "available_backends",
    "active_backend",
    "simulate_hybrid",
    "simulate_pure_jump_n",
    "simulate_eps_jump",
    "simulate_forward_lift",
    "propagate_measure_lift",
    "propagate_forward_lift",
    "estimate_laplace_mc",
]

CHUNK = 4096

_SCHEME_IDS = {"hybrid": 1, "pure_jump": 2, "eps_jump": 3, "forward_lift": 4}


@dataclass(frozen=True)
class McConfig:
    paths: int = 10_000
    seed: int = 42
    scheme: str = "hybrid"
    antithetic: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("mc.paths must be positive")
        if self.scheme not in _SCHEME_IDS:
            raise ValueError(f"mc.scheme must be one of {sorted(_SCHEME_IDS)}")
        if self.antithetic:
            if self.scheme != "hybrid":
                raise ValueError("antithetic sampling applies to the hybrid scheme only")
            if self.paths % 2:
                raise ValueError("antithetic sampling needs an even number of paths")


@dataclass(frozen=True)
class LaplaceEstimate:
    u: float
    t: float
    mean: float
    stderr: float
    paths: int
    scheme: str

    def to_dict(self) -> dict:
        return {"u": self.u, "t": self.t, "mean": self.mean,
                "stderr": self.stderr, "paths": self.paths, "scheme": self.scheme}

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")


@dataclass(frozen=True)
class PathRecord:
    """One lifted path: states (steps+1, N), increments (steps,), v (steps+1,)."""

    grid: TimeGrid
    states: np.ndarray
    increments: np.ndarray
    v: np.ndarray
    n_jumps: int = 0


@dataclass(frozen=True)
class ForwardPath:
    """One forward-curve path; curve_final is the unconsumed window at t = T."""

    grid: TimeGrid
    space_step: float
    v: np.ndarray
    increments: np.ndarray
    curve_final: np.ndarray
    n_jumps: int = 0


def available_backends() -> list[str]:
    return ["c", "python"] if _mc_core is not None else ["python"]


def active_backend() -> str:
    """Backend the measure-lift kernels will use, honoring VOLTERRA_LIFT_BACKEND."""
    forced = os.environ.get("VOLTERRA_LIFT_BACKEND", "auto").lower()
    if forced in ("c", "compiled"):
        if _mc_core is None:
            raise RuntimeError("VOLTERRA_LIFT_BACKEND=c but the compiled core is not built")
        return "c"
    if forced in ("py", "python", "numpy"):
        return "python"
    if forced != "auto":
        raise ValueError(f"unknown VOLTERRA_LIFT_BACKEND value {forced!r}")
    return "c" if _mc_core is not None else "python"


def _stream(seed: int, scheme: str, chunk_index: int) -> np.random.Philox:
    ss = np.random.SeedSequence([int(seed), _SCHEME_IDS[scheme], int(chunk_index)])
    return np.random.Philox(ss)


def _jump_params(m, truncate_below: float | None = None):
    """(jkind, jtheta, jshift, jsizes, jcum, total_mass, mean) of a jump measure,
    optionally restricted to sizes > truncate_below."""
    empty = np.empty(0)
    if m is None:
        return _mc_numpy.JUMP_NONE, 1.0, 0.0, empty, empty, 0.0, 0.0
    if isinstance(m, ExponentialJumps):
        if truncate_below is None:
            return _mc_numpy.JUMP_EXP, m.theta, 0.0, empty, empty, m.eta, m.eta / m.theta
        # memoryless tail: sizes are truncate_below + Exp(theta)
        mass = m.eta * math.exp(-m.theta * truncate_below)
        mean = mass * (truncate_below + 1.0 / m.theta)
        return _mc_numpy.JUMP_EXP, m.theta, truncate_below, empty, empty, mass, mean
    if isinstance(m, FiniteAtomJumps):
        sizes = m.sizes
        masses = m.masses
        if truncate_below is not None:
            keep = sizes > truncate_below
            sizes = sizes[keep]
            masses = masses[keep]
            if sizes.size == 0:
                return _mc_numpy.JUMP_NONE, 1.0, 0.0, empty, empty, 0.0, 0.0
        total = float(np.sum(masses))
        cum = np.cumsum(masses) / total
        cum[-1] = 1.0
        return (_mc_numpy.JUMP_ATOMS, 1.0, 0.0, sizes.astype(float), cum,
                total, float(np.sum(masses * sizes)))
    raise TypeError("unsupported jump measure")


def _backend_call(name, bit_generator, lam, args, rec_idx, out_v,
                  out_dx=None, out_states=None, out_njumps=None):
    """Invoke a chunk kernel on the active backend with matching buffers."""
    if active_backend() == "c":
        n = lam.shape[0]
        dummy2 = np.empty((0, 0))
        dummy3 = np.empty((0, 0, 0))
        dummyi = np.empty(0, dtype=np.int64)
        getattr(_mc_core, name)(
            bit_generator, lam, *args, rec_idx, out_v,
            out_dx if out_dx is not None else dummy2, out_dx is not None,
            out_states if out_states is not None else dummy3, out_states is not None,
            out_njumps if out_njumps is not None else dummyi, out_njumps is not None)
        return lam
    return getattr(_mc_numpy, name)(
        bit_generator, lam, *args, rec_idx, out_v, out_dx, out_states, out_njumps)


def _hybrid_args(nu: LiftMeasure, drv: DriverParams, grid: TimeGrid,
                 damping: str, antithetic: bool):
    decay = np.exp(-nu.rates * grid.dt)
    jkind, jtheta, jshift, jsizes, jcum, mtot, m1 = _jump_params(drv.jumps)
    return (decay, nu.weights.astype(float), grid.dt, drv.beta, drv.sigma,
            m1, mtot, jkind, jtheta, jshift, jsizes, jcum,
            damping == "end", antithetic, grid.steps)


def _pure_jump_args(nu: LiftMeasure, drv: DriverParams, n: int,
                    grid: TimeGrid, damping: str):
    if n < 1:
        raise ValueError("pure-jump resolution n must be >= 1")
    decay = np.exp(-nu.rates * grid.dt)
    jkind, jtheta, jshift, jsizes, jcum, mtrunc, m1_trunc = _jump_params(
        drv.jumps, truncate_below=1.0 / n)
    drift_coef = drv.beta - n * drv.sigma ** 2 - m1_trunc
    small_coef = drv.sigma ** 2 * n * n
    return (decay, nu.weights.astype(float), grid.dt, drift_coef, small_coef,
            1.0 / n, mtrunc, jkind, jtheta, jshift, jsizes, jcum,
            damping == "end", grid.steps)


def _eps_jump_args(nu: LiftMeasure, w: float, eps: float, mu,
                   grid: TimeGrid, damping: str):
    if w < 0 or eps < 0:
        raise ValueError("w and eps must be nonnegative")
    decay = np.exp(-nu.rates * grid.dt)
    jvec = nu.weights * np.exp(-eps * nu.rates)
    jkind, jtheta, jshift, jsizes, jcum, mutot, _ = _jump_params(mu)
    return (decay, nu.weights.astype(float), jvec, grid.dt, w, mutot,
            jkind, jtheta, jshift, jsizes, jcum, damping == "end", grid.steps)


def _check_state(nu: LiftMeasure, lambda0: LiftState) -> np.ndarray:
    if lambda0.masses.shape != nu.rates.shape:
        raise ValueError("lambda0 must align with the measure atoms")
    return lambda0.masses.astype(float)


def _single_path(name, args, lam0_row, grid, seed, scheme) -> tuple:
    lam = np.ascontiguousarray(lam0_row[None, :])
    steps = grid.steps
    ncoord = lam.shape[1]
    out_states = np.empty((1, steps + 1, ncoord))
    out_dx = np.empty((1, steps))
    out_njumps = np.zeros(1, dtype=np.int64)
    rec_idx = np.empty(0, dtype=np.int64)
    out_v = np.empty((1, 0))
    bg = _stream(seed, scheme, 0)
    _backend_call(name, bg, lam, args, rec_idx, out_v,
                  out_dx=out_dx, out_states=out_states, out_njumps=out_njumps)
    states = out_states[0]
    v = _mc_numpy._row_total(states)
    return states, out_dx[0], v, int(out_njumps[0])


def simulate_hybrid(nu: LiftMeasure, lambda0: LiftState, drv: DriverParams,
                    grid: TimeGrid, seed: int, damping: str = "start") -> PathRecord:
    """One path of the hybrid jump-diffusion scheme."""
    lam0 = _check_state(nu, lambda0)
    args = _hybrid_args(nu, drv, grid, damping, antithetic=False)
    states, dx, v, nj = _single_path("hybrid_chunk", args, lam0, grid, seed, "hybrid")
    return PathRecord(grid=grid, states=states, increments=dx, v=v, n_jumps=nj)


def simulate_pure_jump_n(nu: LiftMeasure, lambda0: LiftState, drv: DriverParams,
                         n: int, grid: TimeGrid, seed: int,
                         damping: str = "start") -> PathRecord:
    """One path of the pure-jump approximation at resolution n."""
    lam0 = _check_state(nu, lambda0)
    args = _pure_jump_args(nu, drv, n, grid, damping)
    states, dx, v, nj = _single_path("pure_jump_chunk", args, lam0, grid, seed, "pure_jump")
    return PathRecord(grid=grid, states=states, increments=dx, v=v, n_jumps=nj)


def simulate_eps_jump(nu: LiftMeasure, lambda0: LiftState, w: float, eps: float,
                      mu, grid: TimeGrid, seed: int,
                      damping: str = "start") -> PathRecord:
    """One path of the small-jump building block.

    The recorded increments are the per-step sums of raw jump marks (the
    driver here is not of nu dX form: marks enter through e^{-eps x} nu).
    """
    lam0 = _check_state(nu, lambda0)
    args = _eps_jump_args(nu, w, eps, mu, grid, damping)
    states, dx, v, nj = _single_path("eps_jump_chunk", args, lam0, grid, seed, "eps_jump")
    return PathRecord(grid=grid, states=states, increments=dx, v=v, n_jumps=nj)


def _forward_kvals(kernel, grid: TimeGrid, length: int) -> np.ndarray:
    dt = grid.dt
    xs = np.arange(length - 1) * dt + dt / 2.0
    return np.asarray(eval_kernel(kernel, xs), dtype=float)


def _check_curve(curve, grid: TimeGrid) -> np.ndarray:
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 1:
        raise ValueError("lambda0_curve must be one-dimensional")
    if curve.size < grid.steps + 1:
        raise ValueError("lambda0_curve must cover at least steps+1 space cells")
    return curve


def simulate_forward_lift(kernel, lambda0_curve, drv: DriverParams,
                          grid: TimeGrid, seed: int) -> ForwardPath:
    """One path of the forward-curve scheme (driver draws as in hybrid).

    The curve lives on a space grid with spacing equal to the time step;
    entry j of the initial curve is lambda0(j dt) ~ E[V_{j dt}].  Each step
    consumes one cell (the left endpoint is the current V) and adds
    K(x + dt/2) dX across the remaining window.
    """
    curve = _check_curve(lambda0_curve, grid)
    w = curve.copy()
    length = w.size
    kv = _forward_kvals(kernel, grid, length)
    jkind, jtheta, jshift, jsizes, jcum, mtot, m1 = _jump_params(drv.jumps)
    gen = np.random.Generator(_stream(seed, "forward_lift", 0))
    dt = grid.dt
    v = np.empty(grid.steps + 1)
    dxs = np.empty(grid.steps)
    njumps = 0
    for j in range(grid.steps):
        vj = w[j]
        v[j] = vj
        vp = vj if vj > 0.0 else 0.0
        vd = vp * dt
        dx = drv.beta * vp * dt
        if drv.sigma > 0.0:
            dx += drv.sigma * math.sqrt(vd) * gen.standard_normal()
        if jkind != _mc_numpy.JUMP_NONE and mtot > 0.0:
            cnt = int(gen.poisson(mtot * vd))
            sizes = _mc_numpy._draw_sizes(gen, cnt, jkind, jtheta, jshift, jsizes, jcum)
            dx += float(np.sum(sizes))
            dx -= vd * m1
            njumps += cnt
        dxs[j] = dx
        w[j + 1:] += kv[:length - 1 - j] * dx
    v[grid.steps] = w[grid.steps]
    return ForwardPath(grid=grid, space_step=dt, v=v, increments=dxs,
                       curve_final=w[grid.steps:].copy(), n_jumps=njumps)


def propagate_measure_lift(nu: LiftMeasure, lambda0: LiftState,
                           increments, grid: TimeGrid,
                           damping: str = "start") -> PathRecord:
    """Deterministic replay: apply a given increment sequence to the lift."""
    lam = _check_state(nu, lambda0).copy()
    dxs = np.asarray(increments, dtype=float)
    if dxs.shape != (grid.steps,):
        raise ValueError("increments must have one entry per grid step")
    decay = np.exp(-nu.rates * grid.dt)
    states = np.empty((grid.steps + 1, nu.n_atoms))
    states[0] = lam
    for j in range(grid.steps):
        if damping == "end":
            lam = decay * lam + dxs[j] * nu.weights
        else:
            lam = decay * (lam + dxs[j] * nu.weights)
        states[j + 1] = lam
    v = _mc_numpy._row_total(states)
    return PathRecord(grid=grid, states=states, increments=dxs.copy(), v=v)


def propagate_forward_lift(kernel, lambda0_curve, increments,
                           grid: TimeGrid) -> ForwardPath:
    """Deterministic replay of the forward-curve scheme."""
    curve = _check_curve(lambda0_curve, grid)
    dxs = np.asarray(increments, dtype=float)
    if dxs.shape != (grid.steps,):
        raise ValueError("increments must have one entry per grid step")
    w = curve.copy()
    length = w.size
    kv = _forward_kvals(kernel, grid, length)
    v = np.empty(grid.steps + 1)
    for j in range(grid.steps):
        v[j] = w[j]
        w[j + 1:] += kv[:length - 1 - j] * dxs[j]
    v[grid.steps] = w[grid.steps]
    return ForwardPath(grid=grid, space_step=grid.dt, v=v, increments=dxs.copy(),
                       curve_final=w[grid.steps:].copy())


def _forward_chunk_estimator(kernel, curve0, drv, grid, seed, chunk_index,
                             npaths, j_t) -> np.ndarray:
    """Vectorized forward-lift paths for the estimator (numpy only)."""
    curve = _check_curve(curve0, grid)
    length = curve.size
    kv = _forward_kvals(kernel, grid, length)
    jkind, jtheta, jshift, jsizes, jcum, mtot, m1 = _jump_params(drv.jumps)
    gen = np.random.Generator(_stream(seed, "forward_lift", chunk_index))
    w = np.tile(curve, (npaths, 1))
    dt = grid.dt
    out = np.empty(npaths)
    if j_t == 0:
        out[:] = w[:, 0]
        return out
    for j in range(j_t):
        vj = w[:, j]
        vp = np.where(vj > 0.0, vj, 0.0)
        vd = vp * dt
        dx = drv.beta * vp * dt
        if drv.sigma > 0.0:
            dx = dx + drv.sigma * np.sqrt(vd) * gen.standard_normal(npaths)
        if jkind != _mc_numpy.JUMP_NONE and mtot > 0.0:
            counts = gen.poisson(mtot * vd)
            sizes = _mc_numpy._draw_sizes(gen, int(counts.sum()), jkind,
                                          jtheta, jshift, jsizes, jcum)
            dx = dx + _mc_numpy._segment_sums(counts, sizes)
            dx = dx - vd * m1
        w[:, j + 1:] += dx[:, None] * kv[:length - 1 - j]
    out[:] = w[:, j_t]
    return out


def _chunk_spans(paths: int):
    return [(ci, start, min(CHUNK, paths - start))
            for ci, start in enumerate(range(0, paths, CHUNK))]


def estimate_laplace_mc(u: float, t: float, lambda0: LiftState,
                        drv: DriverParams, grid: TimeGrid, mc: McConfig,
                        threads: int | None = None, *, n: int | None = None,
                        eps: float | None = None, w: float | None = None,
                        mu=None, damping: str = "start",
                        lambda0_curve=None) -> LaplaceEstimate:
    """Monte Carlo estimate of E[exp(u V_t)] with chunked substreams.

    Scheme extras: ``n`` (pure_jump), ``w``/``eps``/``mu`` (eps_jump),
    ``lambda0_curve`` (forward_lift; defaults to the h-curve of lambda0).
    """
    if u > 0:
        raise ValueError("transform exponent u must be <= 0")
    j_t = grid.index_of(t)
    nu = lambda0.measure
    lam0 = _check_state(nu, lambda0)
    if threads is None:
        threads = int(os.environ.get("VOLTERRA_LIFT_THREADS", "1"))
    if threads < 1:
        raise ValueError("threads must be >= 1")

    scheme = mc.scheme
    rec_idx = np.array([j_t], dtype=np.int64)
    out_v = np.empty((mc.paths, 1))

    if scheme == "forward_lift":
        from .kernels import h_curve, kernel_from_measure
        if lambda0_curve is None:
            space_grid = TimeGrid(dt=grid.dt, steps=grid.steps)
            lambda0_curve = h_curve(lambda0, nu, space_grid)
        kernel = kernel_from_measure(nu)

        def job(span):
            ci, start, size = span
            out_v[start:start + size, 0] = _forward_chunk_estimator(
                kernel, lambda0_curve, drv, grid, mc.seed, ci, size, j_t)
    else:
        if scheme == "hybrid":
            name = "hybrid_chunk"
            args = _hybrid_args(nu, drv, grid, damping, mc.antithetic)
        elif scheme == "pure_jump":
            if n is None:
                raise ValueError("pure_jump scheme needs the resolution n")
            name = "pure_jump_chunk"
            args = _pure_jump_args(nu, drv, int(n), grid, damping)
        else:
            if w is None or eps is None:
                raise ValueError("eps_jump scheme needs w and eps")
            name = "eps_jump_chunk"
            args = _eps_jump_args(nu, float(w), float(eps), mu, grid, damping)

        def job(span):
            ci, start, size = span
            lam = np.ascontiguousarray(np.tile(lam0, (size, 1)))
            bg = _stream(mc.seed, scheme, ci)
            _backend_call(name, bg, lam, args, rec_idx, out_v[start:start + size])

    spans = _chunk_spans(mc.paths)
    if threads == 1:
        for span in spans:
            job(span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(job, spans))

    vals = np.exp(u * out_v[:, 0])
    mean = float(np.mean(vals))
    if mc.paths > 1:
        stderr = float(np.std(vals, ddof=1) / math.sqrt(mc.paths))
    else:
        stderr = 0.0
    return LaplaceEstimate(u=u, t=t, mean=mean, stderr=stderr,
                           paths=mc.paths, scheme=scheme)

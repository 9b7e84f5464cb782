"""Bit parity between the compiled and the numpy chunk kernels.

The two backends share one drawing contract (order and meaning of every
variate), so with the same Philox substream they must produce identical
doubles, not merely close ones.  Thread-count invariance follows from the
per-chunk substreams and is asserted at the estimator level.
"""

import os

import numpy as np
import pytest

from volterra_lift import (DriverParams, ExponentialJumps, FiniteAtomJumps,
                           LiftMeasure, LiftState, McConfig, TimeGrid,
                           available_backends, estimate_laplace_mc)
from volterra_lift.simulate import (_eps_jump_args, _hybrid_args,
                                    _pure_jump_args, _stream)
from volterra_lift import _mc_numpy

try:
    from volterra_lift import _mc_core
except ImportError:
    _mc_core = None

needs_core = pytest.mark.skipif(_mc_core is None,
                                reason="compiled core not built")

NU = LiftMeasure(rates=np.array([0.0, 0.5, 3.0, 20.0]),
                 weights=np.array([0.15, 0.35, 0.3, 0.2]))
LAM0 = np.array([0.1, 0.3, 0.4, 0.2])
GRID = TimeGrid(dt=0.004, steps=250)
DRV_J = DriverParams(beta=-0.4, sigma=0.3,
                     jumps=ExponentialJumps(theta=5.0, eta=1.0))
DRV_A = DriverParams(beta=0.1, sigma=0.25,
                     jumps=FiniteAtomJumps(sizes=np.array([0.2, 1.0]),
                                           masses=np.array([2.0, 0.3])))


def run_chunk(backend, name, args, npaths, seed, antithetic=None):
    lam = np.ascontiguousarray(np.tile(LAM0, (npaths, 1)))
    steps = GRID.steps
    rec_idx = np.array([steps // 2, steps], dtype=np.int64)
    out_v = np.empty((npaths, 2))
    out_dx = np.empty((npaths, steps))
    out_states = np.empty((npaths, steps + 1, LAM0.size))
    out_nj = np.zeros(npaths, dtype=np.int64)
    bg = _stream(seed, "hybrid", 0)
    if backend == "c":
        dummyi = np.empty(0, dtype=np.int64)
        getattr(_mc_core, name)(bg, lam, *args, rec_idx, out_v,
                                out_dx, True, out_states, True, out_nj, True)
    else:
        getattr(_mc_numpy, name)(bg, lam, *args, rec_idx, out_v,
                                 out_dx, out_states, out_nj)
    return out_v, out_dx, out_states, out_nj


def pairs():
    yield "hybrid_chunk", _hybrid_args(NU, DRV_J, GRID, "start", False)
    yield "hybrid_chunk", _hybrid_args(NU, DRV_A, GRID, "end", False)
    yield "hybrid_chunk", _hybrid_args(NU, DRV_J, GRID, "start", True)
    yield "pure_jump_chunk", _pure_jump_args(NU, DRV_J, 8, GRID, "start")
    yield "pure_jump_chunk", _pure_jump_args(NU, DRV_A, 32, GRID, "start")
    yield "eps_jump_chunk", _eps_jump_args(NU, 1.0, 0.05, DRV_J.jumps, GRID, "start")


@needs_core
@pytest.mark.parametrize("case", list(range(6)))
def test_chunk_outputs_bit_identical(case):
    name, args = list(pairs())[case]
    got_c = run_chunk("c", name, args, 64, seed=100 + case)
    got_py = run_chunk("py", name, args, 64, seed=100 + case)
    for a, b in zip(got_c, got_py):
        np.testing.assert_array_equal(a, b)


@needs_core
def test_estimator_backend_invariant(monkeypatch):
    mc = McConfig(paths=2048, seed=77, scheme="hybrid")
    lam0 = LiftState(NU, LAM0)
    monkeypatch.setenv("VOLTERRA_LIFT_BACKEND", "c")
    a = estimate_laplace_mc(-1.0, 1.0, lam0, DRV_J, GRID, mc)
    monkeypatch.setenv("VOLTERRA_LIFT_BACKEND", "py")
    b = estimate_laplace_mc(-1.0, 1.0, lam0, DRV_J, GRID, mc)
    assert a.mean == b.mean
    assert a.stderr == b.stderr


def test_estimator_thread_invariant():
    mc = McConfig(paths=3 * 4096 + 17, seed=5, scheme="hybrid")
    lam0 = LiftState(NU, LAM0)
    grid = TimeGrid(dt=0.02, steps=50)
    one = estimate_laplace_mc(-1.0, 1.0, lam0, DRV_J, grid, mc, threads=1)
    four = estimate_laplace_mc(-1.0, 1.0, lam0, DRV_J, grid, mc, threads=4)
    assert one.mean == four.mean
    assert one.stderr == four.stderr


def test_backend_listing_and_forcing(monkeypatch):
    names = available_backends()
    assert "python" in names
    from volterra_lift.simulate import active_backend
    monkeypatch.setenv("VOLTERRA_LIFT_BACKEND", "python")
    assert active_backend() == "python"
    monkeypatch.setenv("VOLTERRA_LIFT_BACKEND", "nope")
    with pytest.raises(ValueError):
        active_backend()
    if _mc_core is None:
        monkeypatch.setenv("VOLTERRA_LIFT_BACKEND", "c")
        with pytest.raises(RuntimeError):
            active_backend()


def test_vector_poisson_matches_scalar_loop():
    """The numpy backend draws Poisson counts as one vector call; the C one
    loops random_poisson.  Both must consume the stream identically."""
    bg1 = np.random.Philox(np.random.SeedSequence([1, 2, 3]))
    bg2 = np.random.Philox(np.random.SeedSequence([1, 2, 3]))
    lams = np.array([0.5, 3.0, 0.0, 12.5, 0.01])
    vec = np.random.Generator(bg1).poisson(lams)
    gen2 = np.random.Generator(bg2)
    seq = np.array([gen2.poisson(l) for l in lams])
    np.testing.assert_array_equal(vec, seq)

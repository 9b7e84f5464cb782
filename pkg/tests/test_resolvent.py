"""Resolvent of the second kind: closed-form oracles and grid behavior.

Scalar oracle used below: for K(t) = c e^{-x t} the resolvent of w K is
R^w(t) = w c e^{-(x + w c) t}.  Plugging into w K - R = w K * R makes both
sides w c e^{-x t} (1 - e^{-w c t}), so this is exact, not a fixture from
some other solver.
"""

import math

import numpy as np
import pytest
from scipy.special import gamma

from volterra_lift import (ExponentialSum, Fractional, ResolventTable,
                           TimeGrid, check_resolvent_identity,
                           resolvent_nonnegative, resolvent_second_kind)


def mittag_leffler(alpha, beta, z, terms=200):
    """Series E_{alpha, beta}(z); fine for moderate |z|."""
    acc = 0.0
    for k in range(terms):
        acc += z ** k / gamma(alpha * k + beta)
    return acc


def scalar_oracle(x, c, w, ts):
    return w * c * np.exp(-(x + w * c) * ts)


def test_single_atom_closed_form():
    x, c, w = 1.3, 0.7, 2.5
    grid = TimeGrid(dt=0.002, steps=500)
    k = ExponentialSum(rates=np.array([x]), weights=np.array([c]))
    tab = resolvent_second_kind(k, w, grid)
    err = np.max(np.abs(tab.values - scalar_oracle(x, c, w, grid.nodes)))
    assert err < 5e-6


def test_zero_weight_gives_zero():
    k = ExponentialSum(rates=np.array([0.5]), weights=np.array([1.0]))
    grid = TimeGrid(dt=0.01, steps=100)
    tab = resolvent_second_kind(k, 0.0, grid)
    assert np.all(tab.values == 0.0)


def test_error_drops_at_second_order():
    # halving dt should cut the error by about four
    x, c, w = 0.8, 1.1, 1.0
    k = ExponentialSum(rates=np.array([x]), weights=np.array([c]))
    errs = []
    for steps in (100, 200, 400):
        grid = TimeGrid(dt=1.0 / steps, steps=steps)
        tab = resolvent_second_kind(k, w, grid)
        errs.append(np.max(np.abs(tab.values - scalar_oracle(x, c, w, grid.nodes))))
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_two_atom_identity_residual():
    k = ExponentialSum(rates=np.array([0.0, 3.0]), weights=np.array([1.2, 0.8]))
    grid = TimeGrid(dt=0.005, steps=200)
    tab = resolvent_second_kind(k, 1.7, grid)
    assert check_resolvent_identity(k, tab) < 1e-10
    assert resolvent_nonnegative(tab)


def test_fractional_against_mittag_leffler():
    alpha = 0.75
    grid = TimeGrid(dt=1.0 / 400, steps=400)
    tab = resolvent_second_kind(Fractional(alpha), 1.0, grid)
    assert tab.singular_origin
    ts = grid.nodes[1:]
    oracle = np.array([t ** (alpha - 1) * mittag_leffler(alpha, alpha, -t ** alpha)
                       for t in ts])
    rel = np.abs(tab.values[1:] - oracle) / np.abs(oracle)
    assert np.max(rel[ts >= 0.01]) < 5e-4


def test_fractional_nonnegative():
    grid = TimeGrid(dt=0.005, steps=200)
    tab = resolvent_second_kind(Fractional(0.6), 3.0, grid)
    assert resolvent_nonnegative(tab)


def test_negative_w_rejected():
    k = ExponentialSum(rates=np.array([1.0]), weights=np.array([1.0]))
    with pytest.raises(ValueError):
        resolvent_second_kind(k, -0.5, TimeGrid(dt=0.1, steps=10))


def test_table_csv_round_trip(tmp_path):
    k = ExponentialSum(rates=np.array([0.4]), weights=np.array([2.0]))
    grid = TimeGrid(dt=0.05, steps=20)
    tab = resolvent_second_kind(k, 1.0, grid)
    path = tmp_path / "resolvent.csv"
    tab.to_csv(path)
    back = ResolventTable.from_csv(path, w=1.0)
    np.testing.assert_array_equal(back.values, tab.values)
    assert back.w == tab.w
    assert back.grid.steps == tab.grid.steps
    assert back.grid.dt == pytest.approx(tab.grid.dt)

"""Kernel evaluation, lift measures and the exponential-sum quadrature."""

import math

import numpy as np
import pytest
from scipy.special import gamma

from volterra_lift import (ExponentialSum, Fractional, LiftMeasure, LiftState,
                           TimeGrid, build_measure_fractional, eval_kernel,
                           h_curve, kernel_from_measure, l2_fit_error,
                           l2_norm_sq, measure_from_kernel)


def test_exponential_sum_eval_matches_manual():
    k = ExponentialSum(rates=np.array([0.0, 1.5]), weights=np.array([2.0, -0.5]))
    ts = np.array([0.0, 0.3, 2.0])
    want = 2.0 - 0.5 * np.exp(-1.5 * ts)
    np.testing.assert_allclose(eval_kernel(k, ts), want, rtol=1e-14)
    assert eval_kernel(k, 0.3) == pytest.approx(2.0 - 0.5 * math.exp(-0.45))


def test_fractional_eval():
    alpha = 0.6
    k = Fractional(alpha)
    for t in (0.01, 0.5, 1.0, 3.0):
        assert eval_kernel(k, t) == pytest.approx(t ** (alpha - 1) / gamma(alpha))


def test_fractional_alpha_range():
    with pytest.raises(ValueError):
        Fractional(1.2)
    with pytest.raises(ValueError):
        Fractional(0.5)
    Fractional(0.51)  # boundary inside the open interval is fine


def test_measure_kernel_round_trip():
    nu = LiftMeasure(rates=np.array([0.2, 4.0]), weights=np.array([0.7, 0.3]))
    k = kernel_from_measure(nu)
    back = measure_from_kernel(k)
    np.testing.assert_array_equal(back.rates, nu.rates)
    np.testing.assert_array_equal(back.weights, nu.weights)


def test_lift_state_validates_length():
    nu = LiftMeasure(rates=np.array([0.0, 1.0]), weights=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        LiftState(nu, np.array([1.0]))


def test_time_grid_nodes_and_lookup():
    grid = TimeGrid(dt=0.25, steps=4)
    np.testing.assert_allclose(grid.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert grid.horizon == pytest.approx(1.0)
    assert grid.index_of(0.5) == 2
    assert grid.index_of(1.0) == 4
    with pytest.raises(ValueError):
        grid.index_of(0.3)
    with pytest.raises(ValueError):
        grid.index_of(1.25)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(dt=0.0, steps=10)
    with pytest.raises(ValueError):
        TimeGrid(dt=0.1, steps=0)


def test_h_curve_exponential_decay():
    # two atoms: h(t) = 0.4 e^{-0 t} + 0.6 e^{-2 t}
    nu = LiftMeasure(rates=np.array([0.0, 2.0]), weights=np.array([1.0, 1.0]))
    lam0 = LiftState(nu, np.array([0.4, 0.6]))
    grid = TimeGrid(dt=0.1, steps=10)
    h = h_curve(lam0, nu, grid)
    want = 0.4 + 0.6 * np.exp(-2.0 * grid.nodes)
    np.testing.assert_allclose(h, want, rtol=1e-13)


def test_quadrature_masses_positive_and_rates_sorted():
    nu = build_measure_fractional(0.6, 20, 1.0)
    assert nu.n_atoms == 20
    assert np.all(nu.weights > 0)
    assert np.all(np.diff(nu.rates) > 0)
    assert nu.rates[0] >= 0.0


def test_quadrature_pointwise_accuracy():
    """The 20-atom fit should track t^{alpha-1}/Gamma(alpha) within a few
    percent over the working window."""
    alpha = 0.6
    nu = build_measure_fractional(alpha, 20, 1.0)
    k = kernel_from_measure(nu)
    for t in (0.02, 0.1, 0.5, 1.0):
        exact = t ** (alpha - 1) / gamma(alpha)
        assert eval_kernel(k, t) == pytest.approx(exact, rel=0.05)


def test_l2_fit_error_against_numerical_integral():
    # independent check of the closed-form window error on a small measure
    alpha = 0.7
    nu = build_measure_fractional(alpha, 6, 1.0)
    k = kernel_from_measure(nu)
    a, b = 0.01, 1.0
    ts = np.linspace(a, b, 200001)
    diff = eval_kernel(k, ts) - ts ** (alpha - 1) / gamma(alpha)
    brute = math.sqrt(np.trapezoid(diff * diff, ts))
    assert l2_fit_error(nu, alpha, (a, b)) == pytest.approx(brute, rel=1e-6)


def test_l2_norm_sq_single_atom():
    # int_0^T (c e^{-xt})^2 dt = c^2 (1 - e^{-2xT}) / (2x)
    k = ExponentialSum(rates=np.array([1.5]), weights=np.array([0.8]))
    want = 0.8 ** 2 * (1.0 - math.exp(-3.0)) / 3.0
    assert l2_norm_sq(k, 1.0) == pytest.approx(want, rel=1e-12)


def test_measure_csv_round_trip(tmp_path):
    nu = build_measure_fractional(0.65, 8, 2.0)
    path = tmp_path / "measure.csv"
    nu.to_csv(path)
    back = LiftMeasure.from_csv(path)
    np.testing.assert_array_equal(back.rates, nu.rates)
    np.testing.assert_array_equal(back.weights, nu.weights)

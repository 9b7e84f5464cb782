"""Riccati equations and Laplace transforms of the affine Volterra models.

Two independent routes to E[exp(u V_t)]:

* Volterra route: solve psi(t) = u K(t) + int_0^t K(t-s) R(psi(s)) ds by
  product integration (exact kernel cell integrals against a piecewise-
  linear nonlinearity, one predictor-corrector pass per step), then
  exponentiate u h(t) + int_0^t h(t-s) R(psi(s)) ds.

* Lifted route: solve the N-dimensional ODE y_i' = -x_i y_i + R(<y, nu>)
  with an exponential integrator (the stiff linear part is exact, the
  scalar nonlinearity is handled by a midpoint corrector), then
  exponentiate <y(t), lambda0>.

Their agreement is the internal consistency check of the whole library;
they share no discretization machinery.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .driver import DriverParams, jump_expm1_integral, nonlinearity
from .kernels import (ExponentialSum, Fractional, LiftMeasure, LiftState,
                      Tabulated, TimeGrid, eval_kernel, h_curve)
from .resolvent import _cell_weights, _is_singular

__all__ = [
    "riccati_volterra",
    "riccati_lifted",
    "riccati_eps_jump",
    "laplace_transform_volterra",
    "laplace_transform_lifted",
]


def _singular_head_moments(kernel: Fractional, drv: DriverParams, u: float, dt: float):
    """M0 = int_0^dt R(u K(s)) ds and M1 = int_0^dt R(u K(s)) s/dt ds.

    These carry the integrable singularity of the nonlinearity near s = 0
    when the kernel blows up there; the remainder F - R(uK) is continuous
    and handled by linear interpolation.
    """
    f = lambda s: nonlinearity(drv, u * eval_kernel(kernel, s))
    m0 = quad(f, 0.0, dt, limit=200)[0]
    m1 = quad(lambda s: f(s) * s / dt, 0.0, dt, limit=200)[0]
    return m0, m1


def _singular_first_cell(kernel: Fractional, drv: DriverParams, u: float, dt: float):
    """G1 = int_0^dt K(dt - s) R(u K(s)) ds (both factors singular)."""
    f = lambda s: eval_kernel(kernel, dt - s) * nonlinearity(drv, u * eval_kernel(kernel, s))
    return quad(f, 0.0, dt, limit=200)[0]


def riccati_volterra(u: float, kernel, drv: DriverParams, grid: TimeGrid) -> np.ndarray:
    """Solve the Riccati Volterra equation; returns psi at the grid nodes.

    For kernels singular at zero, psi(0) diverges and the returned node 0
    carries u * K(dt) as a placeholder; downstream consumers only use the
    integrated nonlinearity, for which the first cell is computed
    analytically.
    """
    if u > 0:
        raise ValueError("transform exponent u must be <= 0")
    n = grid.steps
    dt = grid.dt
    kappa, p, q = _cell_weights(kernel, grid)
    psi = np.zeros(n + 1)
    f = np.zeros(n + 1)

    if _is_singular(kernel):
        kd = eval_kernel(kernel, grid.nodes[1:])
        f_head = nonlinearity(drv, u * kd[0])
        g1 = _singular_first_cell(kernel, drv, u, dt)
        m0, m1 = _singular_head_moments(kernel, drv, u, dt)
        # j = 1: psi_1 = u K_1 + G1 + (F_1 - R(uK_1)) p_0, F_1 implicit
        base = u * kd[0] + g1
        f1 = nonlinearity(drv, base)            # predictor
        psi[1] = base + (f1 - f_head) * p[0]
        f[1] = nonlinearity(drv, psi[1])
        psi[1] = base + (f[1] - f_head) * p[0]
        f[1] = nonlinearity(drv, psi[1])
        psi[0] = u * kd[0]
        f[0] = f[1]
        for j in range(2, n + 1):
            # regular cells l = 0..j-2 (diagonal p_0 F_j implicit), then the
            # terminal cell with the singular head: linear-in-K weights for
            # R(uK) and a linear remainder correction.
            base = u * kd[j - 1] + q[0] * f[j - 1]
            base += p[1:j - 1] @ f[j - 1:1:-1] + q[1:j - 1] @ f[j - 2:0:-1]
            base += kd[j - 1] * (m0 - m1) + kd[j - 2] * m1
            base += (f[1] - f_head) * p[j - 1]
            fp = f[j - 1]                        # predictor
            psi[j] = base + p[0] * fp
            f[j] = nonlinearity(drv, psi[j])
            psi[j] = base + p[0] * f[j]
            f[j] = nonlinearity(drv, psi[j])
        return psi

    k_nodes = eval_kernel(kernel, grid.nodes)
    psi[0] = u * k_nodes[0]
    f[0] = nonlinearity(drv, psi[0])
    for j in range(1, n + 1):
        base = u * k_nodes[j] + q[:j] @ f[j - 1::-1]
        if j > 1:
            base += p[1:j] @ f[j - 1:0:-1]
        fp = f[j - 1]                            # predictor
        psi[j] = base + p[0] * fp
        f[j] = nonlinearity(drv, psi[j])
        psi[j] = base + p[0] * f[j]
        f[j] = nonlinearity(drv, psi[j])
    return psi


def _etd_weights(rates: np.ndarray, dt: float):
    """e^{-x dt} and int_0^dt e^{-x s} ds = (1 - e^{-x dt}) / x, stable at x = 0."""
    z = rates * dt
    decay = np.exp(-z)
    with np.errstate(divide="ignore", invalid="ignore"):
        wgt = np.where(z > 1e-12, -np.expm1(-z) / np.where(rates > 0, rates, 1.0), dt)
    return decay, wgt


def riccati_lifted(u: float, nu: LiftMeasure, drv: DriverParams, grid: TimeGrid) -> np.ndarray:
    """Solve y_i' = -x_i y_i + R(<y, nu>), y_i(0) = u; returns (steps+1, N).

    Exponential integrator: the linear decay is integrated exactly, the
    scalar source R(<y, nu>) enters through its midpoint value, predicted by
    an exponential half step.
    """
    if u > 0:
        raise ValueError("transform exponent u must be <= 0")
    x = nu.rates
    c = nu.weights
    n = grid.steps
    decay, wgt = _etd_weights(x, grid.dt)
    decay_h, wgt_h = _etd_weights(x, grid.dt / 2.0)
    y = np.empty((n + 1, x.size))
    y[0] = u
    cur = y[0].copy()
    for j in range(n):
        s0 = nonlinearity(drv, float(cur @ c))
        half = decay_h * cur + wgt_h * s0
        sm = nonlinearity(drv, float(half @ c))
        cur = decay * cur + wgt * sm
        y[j + 1] = cur
    return y


def riccati_eps_jump(u: float, nu: LiftMeasure, w: float, eps: float,
                     mu, grid: TimeGrid) -> np.ndarray:
    """Riccati path for the small-jump building block.

    y_i' = -x_i y_i - w <y, nu> + int (e^{<y, S*_eps nu> xi} - 1) mu(dxi),
    y(0) = u.  The damped pairing is <y, S*_eps nu> = sum_j c_j e^{-eps x_j} y_j.
    """
    if u > 0:
        raise ValueError("transform exponent u must be <= 0")
    if w < 0 or eps < 0:
        raise ValueError("w and eps must be nonnegative")
    x = nu.rates
    c = nu.weights
    c_eps = c * np.exp(-eps * x)
    n = grid.steps
    decay, wgt = _etd_weights(x, grid.dt)
    decay_h, wgt_h = _etd_weights(x, grid.dt / 2.0)

    def source(vec):
        return -w * float(vec @ c) + jump_expm1_integral(mu, float(vec @ c_eps))

    y = np.empty((n + 1, x.size))
    y[0] = u
    cur = y[0].copy()
    for j in range(n):
        s0 = source(cur)
        half = decay_h * cur + wgt_h * s0
        sm = source(half)
        cur = decay * cur + wgt * sm
        y[j + 1] = cur
    return y


def laplace_transform_lifted(u: float, lambda0: LiftState, drv: DriverParams,
                             t: float, grid: TimeGrid) -> float:
    """E[exp(u V_t)] through the lifted Riccati: exp(<y(t), lambda0>)."""
    j = grid.index_of(t)
    y = riccati_lifted(u, lambda0.measure, drv, grid)
    return float(np.exp(y[j] @ lambda0.masses))


def laplace_transform_volterra(u: float, lambda0: LiftState, kernel,
                               drv: DriverParams, t: float, grid: TimeGrid) -> float:
    """E[exp(u V_t)] through the Volterra Riccati.

    exp(u h(t) + int_0^t h(t-s) R(psi_s) ds), the time integral by the
    trapezoid rule (with an analytic first cell when the kernel is singular
    at zero).  Returns a value in (0, 1] for u <= 0.
    """
    j = grid.index_of(t)
    dt = grid.dt
    psi = riccati_volterra(u, kernel, drv, grid)
    h = h_curve(lambda0, lambda0.measure, grid)
    fvals = np.array([nonlinearity(drv, pv) for pv in psi[:j + 1]])
    if j == 0:
        return float(np.exp(u * h[0]))
    hv = h[j::-1]  # h(t - s_i) for s_i = 0..t
    if _is_singular(kernel):
        kd1 = eval_kernel(kernel, dt)
        m0, m1 = _singular_head_moments(kernel, drv, u, dt)
        f_head = nonlinearity(drv, u * kd1)
        # cell [0, dt]: analytic R(uK) part + linear remainder
        first = hv[0] * (m0 - m1) + hv[1] * m1
        first += (fvals[1] - f_head) * 0.5 * dt * 0.5 * (hv[0] + hv[1])
        rest = np.trapezoid(hv[1:] * fvals[1:j + 1], dx=dt) if j >= 2 else 0.0
        integral = first + rest
    else:
        integral = float(np.trapezoid(hv * fvals[:j + 1], dx=dt))
    return float(np.exp(u * h[j] + integral))

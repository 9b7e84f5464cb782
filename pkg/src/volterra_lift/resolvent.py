"""Resolvents of the second kind for memory kernels.

For a kernel K and weight w >= 0, the resolvent of the second kind R^w is
the solution of

    w K(t) - R^w(t) = w (K * R^w)(t),

with * the Volterra convolution on [0, t].  R^w is the building block of the
stochastic invariance analysis: complete monotonicity of all R^w (w > 0) is
the workable sufficient condition for the lifted cones to be invariant.

The solver discretizes the convolution with product integration: exact cell
integrals of K (closed forms for exponential sums and the fractional kernel)
against a piecewise-linear unknown, which keeps the scheme second order and
is solved by forward substitution with an implicit diagonal term.  Kernels
singular at zero get a matched terminal cell: on the last cell the unknown
is modelled as proportional to K itself, with the K.K cell integrals in
closed form (incomplete beta).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gamma

from .kernels import ExponentialSum, Fractional, Tabulated, TimeGrid, eval_kernel

__all__ = [
    "ResolventTable",
    "resolvent_second_kind",
    "check_resolvent_identity",
    "resolvent_nonnegative",
]

# Identity-residual tolerances recorded on the table, per kernel smoothness.
TOL_SMOOTH = 1e-10
TOL_SINGULAR = 1e-6


@dataclass(frozen=True)
class ResolventTable:
    """R^w sampled on the nodes of a uniform grid.

    For kernels singular at t = 0 the resolvent diverges there as w K(t);
    ``values[0]`` is then extrapolated (copied from the first positive node)
    and flagged by ``singular_origin``.
    """

    grid: TimeGrid
    w: float
    values: np.ndarray
    singular_origin: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "R"])
            for t, r in zip(self.grid.nodes, self.values):
                writer.writerow([repr(float(t)), repr(float(r))])

    @classmethod
    def from_csv(cls, path, w: float) -> "ResolventTable":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = t[1] - t[0]
        return cls(grid=TimeGrid(dt=dt, steps=t.size - 1), w=w, values=data[:, 1])


def _expsum_cell_weights(kernel: ExponentialSum, grid: TimeGrid):
    """Exact (kappa, p, q) per cell for an exponential-sum kernel.

    kappa_l = int_{t_l}^{t_{l+1}} K,
    q_l     = int_{t_l}^{t_{l+1}} K(s) (s - t_l) / dt ds,   p_l = kappa_l - q_l.
    """
    dt = grid.dt
    x = kernel.rates
    c = kernel.weights
    z = x * dt
    # per-term integrals over a cell starting at 0, then damped by e^{-x t_l}
    with np.errstate(divide="ignore", invalid="ignore"):
        i0 = np.where(z > 0, -np.expm1(-z) / np.where(x > 0, x, 1.0), dt)
    i1 = np.empty_like(z)
    small = z < 1e-4
    zl = z[~small]
    xl = x[~small]
    i1[~small] = (1.0 - np.exp(-zl) * (1.0 + zl)) / xl ** 2
    zs = z[small]
    # series of (1 - e^{-z}(1+z))/z^2 scaled by dt^2/z^2 handled via dt
    i1[small] = dt ** 2 * (0.5 - zs / 3.0 + zs ** 2 / 8.0 - zs ** 3 / 30.0)
    damp = np.exp(-np.multiply.outer(grid.nodes[:-1], x))
    kappa = damp @ (c * i0)
    q = (damp @ (c * i1)) / dt
    return kappa, kappa - q, q


def _fractional_cell_weights(alpha: float, grid: TimeGrid):
    """Exact (kappa, p, q) per cell for the fractional kernel."""
    t = grid.nodes
    dt = grid.dt
    ga = gamma(alpha)
    pa = t ** alpha
    pa1 = t ** (alpha + 1.0)
    kappa = np.diff(pa) / (alpha * ga)
    q = (np.diff(pa1) / (alpha + 1.0) - t[:-1] * np.diff(pa) / alpha) / (ga * dt)
    return kappa, kappa - q, q


def _tabulated_cell_weights(kernel: Tabulated, grid: TimeGrid):
    """Simpson cell integrals for a tabulated kernel (exact when the kernel's
    sample points align with the solver cells)."""
    t0 = grid.nodes[:-1]
    dt = grid.dt
    km = np.array([eval_kernel(kernel, t0 + f * dt) for f in (0.0, 0.5, 1.0)])
    kappa = dt * (km[0] + 4.0 * km[1] + km[2]) / 6.0
    q = dt * (0.0 * km[0] + 4.0 * 0.5 * km[1] + 1.0 * km[2]) / 6.0
    return kappa, kappa - q, q


def _cell_weights(kernel, grid: TimeGrid):
    if isinstance(kernel, ExponentialSum):
        return _expsum_cell_weights(kernel, grid)
    if isinstance(kernel, Fractional):
        if kernel.alpha == 1.0:
            return _expsum_cell_weights(ExponentialSum(rates=[0.0], weights=[1.0]), grid)
        return _fractional_cell_weights(kernel.alpha, grid)
    if isinstance(kernel, Tabulated):
        return _tabulated_cell_weights(kernel, grid)
    raise TypeError(f"unsupported kernel type {type(kernel).__name__}")


def _is_singular(kernel) -> bool:
    return isinstance(kernel, Fractional) and kernel.alpha < 1.0


def _kk_terminal_integrals(alpha: float, grid: TimeGrid) -> np.ndarray:
    """D_j = int_0^dt K(t_j - u) K(u) du for the fractional kernel, exact.

    Substituting u = t_j s gives t_j^(2a-1) B(1/j; a, a) / Gamma(a)^2 with B
    the incomplete beta function; scipy's regularized betainc supplies it.
    """
    j = np.arange(1, grid.steps + 1)
    tj = j * grid.dt
    return tj ** (2 * alpha - 1.0) * betainc(alpha, alpha, 1.0 / j) / gamma(2 * alpha)


def resolvent_second_kind(kernel, w: float, grid: TimeGrid) -> ResolventTable:
    """Solve w K - R = w K * R on the grid by product integration.

    :param kernel: ExponentialSum, Fractional or Tabulated kernel.
    :param w: nonnegative weight; w = 0 gives the zero resolvent.
    :param grid: uniform time grid.
    """
    if w < 0:
        raise ValueError("w must be nonnegative")
    n = grid.steps
    values = np.zeros(n + 1)
    if w == 0.0:
        return ResolventTable(grid=grid, w=w, values=values,
                              singular_origin=_is_singular(kernel))

    kappa, p, q = _cell_weights(kernel, grid)

    if _is_singular(kernel):
        alpha = kernel.alpha
        kd = eval_kernel(kernel, grid.nodes[1:])
        dterm = _kk_terminal_integrals(alpha, grid)
        # terminal cell: R(u) ~ R_1 K(u)/K(dt) on (0, dt]
        values[1] = w * kd[0] / (1.0 + w * dterm[0] / kd[0])
        for j in range(2, n + 1):
            # cells l = 0..j-2 carry the piecewise-linear unknown at
            # arguments >= dt; the terminal cell l = j-1 is matched.
            # cell l = 0 contributes p_0 R_j (implicit) + q_0 R_{j-1}.
            acc = dterm[j - 1] / kd[0] * values[1]
            acc += p[1:j - 1] @ values[j - 1:1:-1] + q[1:j - 1] @ values[j - 2:0:-1]
            rhs = w * kd[j - 1] - w * (acc + q[0] * values[j - 1])
            values[j] = rhs / (1.0 + w * p[0])
        values[0] = values[1]
        return ResolventTable(grid=grid, w=w, values=values, singular_origin=True)

    k_nodes = eval_kernel(kernel, grid.nodes)
    values[0] = w * k_nodes[0]
    for j in range(1, n + 1):
        # sum_{l=0}^{j-1} (p_l R_{j-l} + q_l R_{j-l-1}), diagonal p_0 R_j implicit
        conv = q[:j] @ values[j - 1::-1]
        if j > 1:
            conv += p[1:j] @ values[j - 1:0:-1]
        values[j] = (w * k_nodes[j] - w * conv) / (1.0 + w * p[0])
    return ResolventTable(grid=grid, w=w, values=values, singular_origin=False)


def _discrete_convolution_residual(kernel, table: ResolventTable) -> np.ndarray:
    """Residual of w K - R - w K*R under the solver's own discretization."""
    grid = table.grid
    w = table.w
    r = table.values
    n = grid.steps
    kappa, p, q = _cell_weights(kernel, grid)
    res = np.zeros(n + 1)
    if _is_singular(kernel):
        kd = eval_kernel(kernel, grid.nodes[1:])
        dterm = _kk_terminal_integrals(kernel.alpha, grid)
        for j in range(1, n + 1):
            conv = dterm[j - 1] / kd[0] * r[1]
            if j >= 2:
                conv += p[0] * r[j] + q[0] * r[j - 1]
                conv += p[1:j - 1] @ r[j - 1:1:-1] + q[1:j - 1] @ r[j - 2:0:-1]
            res[j] = w * kd[j - 1] - r[j] - w * conv
        return res
    k_nodes = eval_kernel(kernel, grid.nodes)
    res[0] = w * k_nodes[0] - r[0]
    for j in range(1, n + 1):
        conv = q[:j] @ r[j - 1::-1] + p[:j] @ r[j:0:-1]
        res[j] = w * k_nodes[j] - r[j] - w * conv
    return res


def check_resolvent_identity(kernel, table: ResolventTable, tol: float | None = None) -> float:
    """Max residual of the discretized resolvent identity; raises above tol.

    The convolution uses the solver's product-integration weights, so tables
    produced by :func:`resolvent_second_kind` pass at roundoff level.  The
    origin node is skipped for kernels singular at zero (extrapolated value).
    """
    if tol is None:
        tol = TOL_SINGULAR if _is_singular(kernel) else TOL_SMOOTH
    res = _discrete_convolution_residual(kernel, table)
    start = 1 if table.singular_origin else 0
    worst = float(np.max(np.abs(res[start:])))
    if worst > tol:
        raise ValueError(f"resolvent identity violated: residual {worst:.3e} > tol {tol:.1e}")
    return worst


def resolvent_nonnegative(table: ResolventTable, tol: float = 0.0) -> bool:
    """True if all tabulated resolvent values are >= -tol."""
    return bool(np.min(table.values) >= -tol)

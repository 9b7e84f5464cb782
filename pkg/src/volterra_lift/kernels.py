"""Memory kernels, lift measures and the maps between them.

A completely monotone kernel K(t) = int_0^inf e^{-x t} nu(dx) is represented
either exactly (Fractional, ExponentialSum, Tabulated) or through a finite
lift measure nu = sum_i c_i delta_{x_i}.  The lift measure is what the
Markovian state lambda_t lives on; ``build_measure_fractional`` produces the
quadrature measure approximating the fractional kernel and ``h_curve`` turns
an initial state into the deterministic forward curve h(t) = <1, S*_t
lambda_0>.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, gammainc

__all__ = [
    "ExponentialSum",
    "Fractional",
    "Tabulated",
    "LiftMeasure",
    "LiftState",
    "TimeGrid",
    "eval_kernel",
    "kernel_from_measure",
    "measure_from_kernel",
    "build_measure_fractional",
    "h_curve",
    "l2_norm_sq",
    "l2_fit_error",
]


@dataclass(frozen=True)
class ExponentialSum:
    """Kernel K(t) = sum_i weights_i * exp(-rates_i * t).

    :param rates: nonnegative decay rates x_i, strictly increasing.
    :param weights: weights c_i, nonzero reals (negative weights are allowed;
        complete monotonicity is then not guaranteed and can be probed with
        :func:`volterra_lift.cone.sufficient_cm_condition`).
    """

    rates: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", np.atleast_1d(np.asarray(self.rates, dtype=float)))
        object.__setattr__(self, "weights", np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.rates.ndim != 1 or self.rates.shape != self.weights.shape:
            raise ValueError("rates and weights must be 1-d arrays of equal length")
        if self.rates.size == 0:
            raise ValueError("an exponential-sum kernel needs at least one term")
        if np.any(self.rates < 0):
            raise ValueError("rates must be nonnegative")
        if np.any(np.diff(self.rates) <= 0):
            raise ValueError("rates must be strictly increasing")
        if np.any(self.weights == 0):
            raise ValueError("weights must be nonzero")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.rates)) @ self.weights


@dataclass(frozen=True)
class Fractional:
    """Fractional kernel K(t) = t^(alpha-1) / Gamma(alpha), alpha in (1/2, 1].

    alpha = 1 degenerates to the constant kernel K = 1.  For alpha < 1 the
    kernel is singular at t = 0 (evaluates to +inf there).
    """

    alpha: float

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0.5, 1]")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.alpha == 1.0:
            return np.ones_like(t)
        with np.errstate(divide="ignore"):
            return t ** (self.alpha - 1.0) / gamma(self.alpha)


@dataclass(frozen=True)
class Tabulated:
    """Kernel given by linear interpolation of samples (times_i, values_i)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if self.times.size < 2:
            raise ValueError("a tabulated kernel needs at least two samples")
        if self.times[0] != 0.0:
            raise ValueError("tabulated kernels must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.times[-1]):
            raise ValueError("tabulated kernel evaluated beyond its last sample")
        return np.interp(t, self.times, self.values)


Kernel = (ExponentialSum, Fractional, Tabulated)


@dataclass(frozen=True)
class LiftMeasure:
    """Finite atomic measure nu = sum_i weights_i * delta_{rates_i}.

    Rates are nonnegative and strictly increasing; weights are nonzero and
    may be signed (signed measures arise when fitting non-CM kernels).
    """

    rates: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", np.atleast_1d(np.asarray(self.rates, dtype=float)))
        object.__setattr__(self, "weights", np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.rates.ndim != 1 or self.rates.shape != self.weights.shape:
            raise ValueError("rates and weights must be 1-d arrays of equal length")
        if self.rates.size == 0:
            raise ValueError("a lift measure needs at least one atom")
        if np.any(self.rates < 0):
            raise ValueError("rates must be nonnegative")
        if np.any(np.diff(self.rates) <= 0):
            raise ValueError("rates must be strictly increasing")
        if np.any(self.weights == 0):
            raise ValueError("weights must be nonzero")

    @property
    def n_atoms(self) -> int:
        return self.rates.size

    def to_csv(self, path) -> None:
        """Write the atoms as CSV with header ``rate,weight``."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["rate", "weight"])
            for x, c in zip(self.rates, self.weights):
                writer.writerow([repr(float(x)), repr(float(c))])

    @classmethod
    def from_csv(cls, path) -> "LiftMeasure":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(rates=data[:, 0], weights=data[:, 1])


@dataclass(frozen=True)
class LiftState:
    """State lambda of the lifted process: one mass per atom of a measure."""

    measure: LiftMeasure
    masses: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "masses", np.atleast_1d(np.asarray(self.masses, dtype=float)))
        if self.masses.shape != self.measure.rates.shape:
            raise ValueError("masses must align with the measure atoms")

    @property
    def total(self) -> float:
        """V = <1, lambda>, the observable the Volterra equation describes."""
        return float(np.sum(self.masses))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_j = j * dt, j = 0..steps."""

    dt: float
    steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("grid.dt must be positive")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise ValueError("grid.steps must be a positive integer")

    @property
    def horizon(self) -> float:
        return self.dt * self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Index j with t_j = t, or raise if t is not (close to) a node."""
        j = int(round(t / self.dt))
        if j < 0 or j > self.steps or abs(j * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} does not lie on the grid (dt = {self.dt}, steps = {self.steps})")
        return j


def eval_kernel(kernel, t):
    """Evaluate a kernel at scalar or array times t >= 0."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("kernels are defined for t >= 0")
    out = kernel(t_arr)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def kernel_from_measure(nu: LiftMeasure) -> ExponentialSum:
    """Exponential-sum kernel K_N(t) = sum_i c_i e^{-x_i t} of a lift measure."""
    return ExponentialSum(rates=nu.rates.copy(), weights=nu.weights.copy())


def measure_from_kernel(kernel: ExponentialSum) -> LiftMeasure:
    """Lift measure whose atoms are the terms of an exponential-sum kernel."""
    if not isinstance(kernel, ExponentialSum):
        raise TypeError("only exponential-sum kernels carry an exact finite lift measure")
    return LiftMeasure(rates=kernel.rates.copy(), weights=kernel.weights.copy())


# Span convention for the fractional quadrature, see build_measure_fractional.
_SPAN_HEAD = 0.25   # x_lo = _SPAN_HEAD / T
_SPAN_TAIL = 0.4    # x_hi = _SPAN_TAIL * N / delta_min


def build_measure_fractional(alpha: float, n_atoms: int, horizon: float,
                             delta_min: float | None = None) -> LiftMeasure:
    """Quadrature lift measure for the fractional kernel.

    The spectral density of t^(alpha-1)/Gamma(alpha) is
    nu(dx) = x^(-alpha) dx / (Gamma(alpha) Gamma(1-alpha)).  The x-axis is
    split into cells with geometric boundaries; each cell contributes one
    atom carrying the exact density mass of the cell, placed at the
    density-weighted centroid (so the zeroth and first moments of nu are
    exact per cell).  The first cell starts at x = 0, folding the slow tail
    of the measure into the smallest rate instead of discarding it.

    The targeted fit window is [delta_min, horizon]: cells cover
    [0, x_hi] with x_lo = 0.25/horizon and x_hi = 0.4*N/delta_min, which
    makes the L2 error on the window decrease as N grows.

    :param alpha: fractional exponent, must lie in (0.5, 1) strictly
        (alpha = 1 needs no quadrature).
    :param n_atoms: number N >= 1 of atoms.
    :param horizon: largest time T the fit targets.
    :param delta_min: smallest time the fit targets (resolution cutoff
        below which K_N is allowed to deviate); defaults to horizon/100.
    """
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (0.5, 1)")
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if delta_min is None:
        delta_min = horizon / 100.0
    if not 0 < delta_min < horizon:
        raise ValueError("delta_min must lie in (0, horizon)")

    x_lo = _SPAN_HEAD / horizon
    x_hi = _SPAN_TAIL * n_atoms / delta_min
    if n_atoms == 1:
        bounds = np.array([0.0, x_hi])
    else:
        ratio = (x_hi / x_lo) ** (1.0 / (n_atoms - 1))
        bounds = np.concatenate([[0.0], x_lo * ratio ** np.arange(n_atoms)])

    # Exact cell moments of x^(-alpha) dx:
    #   m0 = (b1^(1-a) - b0^(1-a)) / (1-a),  m1 = (b1^(2-a) - b0^(2-a)) / (2-a)
    norm = gamma(alpha) * gamma(1.0 - alpha)
    p0 = bounds ** (1.0 - alpha)
    p1 = bounds ** (2.0 - alpha)
    m0 = np.diff(p0) / (1.0 - alpha)
    m1 = np.diff(p1) / (2.0 - alpha)
    weights = m0 / norm
    rates = m1 / m0
    return LiftMeasure(rates=rates, weights=weights)


def h_curve(lambda0: LiftState, measure: LiftMeasure, grid: TimeGrid) -> np.ndarray:
    """Forward curve h(t_j) = sum_i lambda0_i e^{-x_i t_j} on the grid nodes.

    This is the conditional-expectation curve of the lift started at
    lambda0 with all stochastic increments switched off.
    """
    if lambda0.masses.shape != measure.rates.shape:
        raise ValueError("lambda0 must align with the measure atoms")
    return np.exp(-np.multiply.outer(grid.nodes, measure.rates)) @ lambda0.masses


def l2_norm_sq(kernel, horizon: float) -> float:
    """Exact squared L2 norm int_0^T K(t)^2 dt.

    Closed forms exist for ExponentialSum (double sum of exponential cells;
    a cell with x_i + x_j = 0 contributes c_i c_j T) and Fractional
    (T^(2 alpha - 1) / ((2 alpha - 1) Gamma(alpha)^2); finite because
    alpha > 1/2).
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if isinstance(kernel, Fractional):
        a = kernel.alpha
        return horizon ** (2 * a - 1) / ((2 * a - 1) * gamma(a) ** 2)
    if isinstance(kernel, ExponentialSum):
        s = np.add.outer(kernel.rates, kernel.rates)
        cc = np.outer(kernel.weights, kernel.weights)
        with np.errstate(divide="ignore", invalid="ignore"):
            cells = np.where(s > 0, -np.expm1(-s * horizon) / np.where(s > 0, s, 1.0), horizon)
        return float(np.sum(cc * cells))
    raise TypeError(f"no closed-form L2 norm for {type(kernel).__name__}")


def _exp_sum_l2_window(kernel: ExponentialSum, a: float, b: float) -> float:
    """int_a^b K_N(t)^2 dt for an exponential sum, exact."""
    s = np.add.outer(kernel.rates, kernel.rates)
    cc = np.outer(kernel.weights, kernel.weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(s > 0, s, 1.0)
        cells = np.where(s > 0, (np.exp(-s * a) - np.exp(-s * b)) / safe, b - a)
    return float(np.sum(cc * cells))


def _cross_l2_window(kernel: ExponentialSum, alpha: float, a: float, b: float) -> float:
    """int_a^b K(t) K_N(t) dt with K fractional, exact via lower incomplete gamma."""
    x = kernel.rates
    c = kernel.weights
    out = 0.0
    for xi, ci in zip(x, c):
        if xi == 0.0:
            cell = (b ** alpha - a ** alpha) / alpha
        else:
            # int_0^u t^(alpha-1) e^{-x t} dt = Gamma(alpha) x^(-alpha) P(alpha, x u)
            cell = gamma(alpha) * xi ** (-alpha) * (gammainc(alpha, xi * b) - gammainc(alpha, xi * a))
        out += ci * cell / gamma(alpha)
    return out


def l2_fit_error(measure: LiftMeasure, alpha: float, window: tuple[float, float]) -> float:
    """Exact L2 error || K - K_N ||_{L2[a, b]} of a fractional-kernel fit.

    Expands the square: int K^2 - 2 int K K_N + int K_N^2, each term in
    closed form (power integral, lower incomplete gamma, exponential cells).
    """
    a, b = window
    if not 0 < a < b:
        raise ValueError("window must satisfy 0 < a < b")
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (0.5, 1)")
    kn = kernel_from_measure(measure)
    frac_sq = (b ** (2 * alpha - 1) - a ** (2 * alpha - 1)) / ((2 * alpha - 1) * gamma(alpha) ** 2)
    cross = _cross_l2_window(kn, alpha, a, b)
    approx_sq = _exp_sum_l2_window(kn, a, b)
    val = frac_sq - 2.0 * cross + approx_sq
    return math.sqrt(max(val, 0.0))

"""Affine driver of the Volterra equation: dX = beta V dt + sigma sqrt(V) dB + jumps.

The jump measure nu_jump(dxi) = V * m(dxi) is state-proportional; two
families are supported, a finite atomic measure and the exponential family
m(dxi) = eta * theta * e^{-theta xi} dxi on (0, inf).  The driver's
nonlinearity

    R(u) = beta u + sigma^2 u^2 / 2 + int (e^{u xi} - 1 - u xi) m(dxi)

is what feeds every Riccati equation; the uncompensated variant
int (e^{u xi} - 1) m(dxi) backs the small-jump building-block scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExponentialJumps",
    "FiniteAtomJumps",
    "DriverParams",
    "jump_total_mass",
    "jump_mean",
    "jump_expm1_integral",
    "jump_compensated_integral",
    "nonlinearity",
]


@dataclass(frozen=True)
class ExponentialJumps:
    """m(dxi) = eta * theta * e^{-theta xi} dxi: total mass eta, mean eta/theta."""

    theta: float
    eta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.eta > 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class FiniteAtomJumps:
    """m = sum_k masses_k * delta_{sizes_k} with positive sizes and masses."""

    sizes: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sizes", np.atleast_1d(np.asarray(self.sizes, dtype=float)))
        object.__setattr__(self, "masses", np.atleast_1d(np.asarray(self.masses, dtype=float)))
        if self.sizes.shape != self.masses.shape or self.sizes.ndim != 1:
            raise ValueError("sizes and masses must be 1-d arrays of equal length")
        if np.any(self.sizes <= 0):
            raise ValueError("jump sizes must be positive")
        if np.any(self.masses <= 0):
            raise ValueError("jump masses must be positive")


JumpMeasure = (ExponentialJumps, FiniteAtomJumps)


@dataclass(frozen=True)
class DriverParams:
    """Affine driver coefficients; ``jumps=None`` gives a pure diffusion."""

    beta: float = 0.0
    sigma: float = 0.0
    jumps: ExponentialJumps | FiniteAtomJumps | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.jumps is not None and not isinstance(self.jumps, JumpMeasure):
            raise TypeError("jumps must be ExponentialJumps, FiniteAtomJumps or None")


def jump_total_mass(m) -> float:
    """m(R_+), the jump arrival intensity per unit of V."""
    if m is None:
        return 0.0
    if isinstance(m, ExponentialJumps):
        return m.eta
    return float(np.sum(m.masses))


def jump_mean(m) -> float:
    """int xi m(dxi), the compensator slope per unit of V."""
    if m is None:
        return 0.0
    if isinstance(m, ExponentialJumps):
        return m.eta / m.theta
    return float(np.sum(m.masses * m.sizes))


def jump_expm1_integral(m, u: float) -> float:
    """int (e^{u xi} - 1) m(dxi); exponential family needs u < theta."""
    if m is None:
        return 0.0
    if isinstance(m, ExponentialJumps):
        if u >= m.theta:
            raise ValueError("transform argument must satisfy u < theta")
        return m.eta * u / (m.theta - u)
    return float(np.sum(m.masses * np.expm1(u * m.sizes)))


def jump_compensated_integral(m, u: float) -> float:
    """int (e^{u xi} - 1 - u xi) m(dxi); exponential family needs u < theta."""
    if m is None:
        return 0.0
    if isinstance(m, ExponentialJumps):
        if u >= m.theta:
            raise ValueError("transform argument must satisfy u < theta")
        return m.eta * u * u / (m.theta * (m.theta - u))
    return float(np.sum(m.masses * (np.expm1(u * m.sizes) - u * m.sizes)))


def nonlinearity(drv: DriverParams, u: float) -> float:
    """R(u) = beta u + sigma^2 u^2 / 2 + int (e^{u xi} - 1 - u xi) m(dxi)."""
    return drv.beta * u + 0.5 * drv.sigma ** 2 * u * u + jump_compensated_integral(drv.jumps, u)

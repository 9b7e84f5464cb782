"""INI model configuration: parse, validate, fill defaults, serialize.

Sections: [kernel], [measure], [initial], [driver], [grid], [mc], [cone].
Unknown keys are rejected.  A minimal config needs only the kernel; every
other field has a documented default (paths 10000, seed 42, dt 1/500,
steps 500, scheme hybrid).  ``serialize_config`` emits the fully resolved
file in canonical order, which is what the run manifests hash.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

import numpy as np

from .cone import ConeCheckConfig
from .driver import DriverParams, ExponentialJumps, FiniteAtomJumps
from .kernels import (ExponentialSum, Fractional, LiftMeasure, LiftState,
                      TimeGrid, build_measure_fractional, measure_from_kernel)
from .simulate import McConfig

__all__ = ["ModelConfig", "parse_config", "serialize_config", "config_hash"]

_KNOWN_KEYS = {
    "kernel": {"variant", "alpha", "atoms"},
    "measure": {"atoms", "n_atoms", "horizon", "delta_min"},
    "initial": {"lambda0", "v0"},
    "driver": {"beta", "sigma", "jumps", "theta", "eta", "jump_sizes", "jump_masses"},
    "grid": {"dt", "steps"},
    "mc": {"paths", "seed", "scheme", "antithetic", "u", "t", "n", "eps", "w",
           "record_coords"},
    "cone": {"w_grid", "horizon", "n_steps", "tol"},
}


@dataclass(frozen=True)
class ModelConfig:
    """Fully resolved model: typed objects plus the transform targets."""

    kernel: object
    measure: LiftMeasure
    lambda0: LiftState
    driver: DriverParams
    grid: TimeGrid
    mc: McConfig
    cone: ConeCheckConfig
    u_list: tuple[float, ...]
    t_list: tuple[float, ...]
    n_list: tuple[int, ...]
    eps: float
    w: float
    record_coords: bool
    measure_derived: bool
    measure_horizon: float
    delta_min: float | None


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _atom_pairs(text: str, where: str):
    rates, weights = [], []
    for tok in text.replace(",", " ").split():
        if ":" not in tok:
            raise ValueError(f"{where} atoms must be rate:weight pairs, got {tok!r}")
        a, b = tok.split(":", 1)
        rates.append(float(a))
        weights.append(float(b))
    if not rates:
        raise ValueError(f"{where} atoms list is empty")
    return np.array(rates), np.array(weights)


def _get(cp, section, key, fallback=None):
    if cp.has_section(section) and key in cp[section]:
        val = cp[section][key].strip()
        if val == "":
            raise ValueError(f"{section}.{key} is empty")
        return val
    return fallback


def _check_keys(cp):
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ValueError(f"unknown key {key!r} in [{section}]")


def parse_config(source) -> ModelConfig:
    """Parse an INI file (path or text) into a resolved ModelConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = None
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    if text is not None:
        cp.read_string(text)
    else:
        if not cp.read(str(source)):
            raise ValueError(f"config file {source} not found or unreadable")
    _check_keys(cp)

    # [grid] -- defaults dt = 1/500, steps = 500; present-but-broken is an error
    try:
        dt = float(_get(cp, "grid", "dt", fallback=str(1.0 / 500.0)))
        steps = int(_get(cp, "grid", "steps", fallback="500"))
    except ValueError as exc:
        raise ValueError(f"invalid [grid] section: {exc}") from exc
    if dt <= 0:
        raise ValueError("grid.dt must be positive")
    if steps < 1:
        raise ValueError("grid.steps must be a positive integer")
    grid = TimeGrid(dt=dt, steps=steps)

    # [kernel]
    variant = _get(cp, "kernel", "variant")
    if variant is None:
        raise ValueError("kernel.variant is required (fractional or expsum)")
    variant = variant.lower()
    delta_min = None
    if variant == "fractional":
        alpha_text = _get(cp, "kernel", "alpha")
        if alpha_text is None:
            raise ValueError("kernel.alpha is required for the fractional variant")
        alpha = float(alpha_text)
        if not 0.5 < alpha < 1.0:
            raise ValueError("kernel.alpha must lie in (0.5, 1)")
        kernel = Fractional(alpha)
    elif variant == "expsum":
        atoms_text = _get(cp, "kernel", "atoms")
        if atoms_text is None:
            raise ValueError("kernel.atoms is required for the expsum variant")
        rates, weights = _atom_pairs(atoms_text, "kernel")
        kernel = ExponentialSum(rates=rates, weights=weights)
    else:
        raise ValueError(f"kernel.variant must be fractional or expsum, got {variant!r}")

    # [measure]
    measure_derived = False
    measure_horizon = float(_get(cp, "measure", "horizon", fallback=str(grid.horizon)))
    atoms_text = _get(cp, "measure", "atoms")
    if atoms_text is not None:
        rates, weights = _atom_pairs(atoms_text, "measure")
        measure = LiftMeasure(rates=rates, weights=weights)
    elif isinstance(kernel, ExponentialSum):
        measure = measure_from_kernel(kernel)
    else:
        n_atoms = int(_get(cp, "measure", "n_atoms", fallback="20"))
        dm_text = _get(cp, "measure", "delta_min")
        delta_min = float(dm_text) if dm_text is not None else None
        measure = build_measure_fractional(kernel.alpha, n_atoms, measure_horizon,
                                           delta_min=delta_min)
        measure_derived = True

    # [initial]
    lam_text = _get(cp, "initial", "lambda0")
    if lam_text is not None:
        masses = np.array(_floats(lam_text))
        if masses.size != measure.n_atoms:
            raise ValueError(
                f"initial.lambda0 has {masses.size} entries but the measure has "
                f"{measure.n_atoms} atoms")
    else:
        v0 = float(_get(cp, "initial", "v0", fallback="1.0"))
        masses = v0 * measure.weights / float(np.sum(measure.weights))
    lambda0 = LiftState(measure, masses)

    # [driver]
    beta = float(_get(cp, "driver", "beta", fallback="0.0"))
    sigma = float(_get(cp, "driver", "sigma", fallback="0.0"))
    jumps_kind = (_get(cp, "driver", "jumps", fallback="none") or "none").lower()
    if jumps_kind in ("none", "off"):
        jumps = None
    elif jumps_kind == "exponential":
        theta = _get(cp, "driver", "theta")
        eta = _get(cp, "driver", "eta")
        if theta is None or eta is None:
            raise ValueError("driver.jumps=exponential needs driver.theta and driver.eta")
        jumps = ExponentialJumps(theta=float(theta), eta=float(eta))
    elif jumps_kind == "finite_atoms":
        sizes = _get(cp, "driver", "jump_sizes")
        masses_t = _get(cp, "driver", "jump_masses")
        if sizes is None or masses_t is None:
            raise ValueError("driver.jumps=finite_atoms needs jump_sizes and jump_masses")
        jumps = FiniteAtomJumps(sizes=np.array(_floats(sizes)),
                                masses=np.array(_floats(masses_t)))
    else:
        raise ValueError(f"driver.jumps must be none, exponential or finite_atoms, "
                         f"got {jumps_kind!r}")
    driver = DriverParams(beta=beta, sigma=sigma, jumps=jumps)

    # [mc]
    mc = McConfig(
        paths=int(_get(cp, "mc", "paths", fallback="10000")),
        seed=int(_get(cp, "mc", "seed", fallback="42")),
        scheme=(_get(cp, "mc", "scheme", fallback="hybrid") or "hybrid").lower(),
        antithetic=(_get(cp, "mc", "antithetic", fallback="false").lower()
                    in ("1", "true", "yes", "on")),
    )
    u_list = tuple(_floats(_get(cp, "mc", "u", fallback="-1.0")))
    t_list = tuple(_floats(_get(cp, "mc", "t", fallback=str(grid.horizon))))
    n_list = tuple(_ints(_get(cp, "mc", "n", fallback="2 8 32")))
    eps = float(_get(cp, "mc", "eps", fallback="0.0"))
    w = float(_get(cp, "mc", "w", fallback="1.0"))
    record_coords = (_get(cp, "mc", "record_coords", fallback="false").lower()
                     in ("1", "true", "yes", "on"))
    if any(uu > 0 for uu in u_list):
        raise ValueError("mc.u entries must be <= 0")
    for tt in t_list:
        grid.index_of(tt)   # raises if off-grid

    # [cone]
    wg_text = _get(cp, "cone", "w_grid")
    cone_kwargs = {}
    if wg_text is not None:
        cone_kwargs["w_grid"] = np.array(_floats(wg_text))
    hz_text = _get(cp, "cone", "horizon")
    if hz_text is not None:
        cone_kwargs["horizon"] = float(hz_text)
    ns_text = _get(cp, "cone", "n_steps")
    if ns_text is not None:
        cone_kwargs["n_steps"] = int(ns_text)
    tol_text = _get(cp, "cone", "tol")
    if tol_text is not None:
        cone_kwargs["tol"] = float(tol_text)
    cone = ConeCheckConfig(**cone_kwargs)

    return ModelConfig(kernel=kernel, measure=measure, lambda0=lambda0,
                       driver=driver, grid=grid, mc=mc, cone=cone,
                       u_list=u_list, t_list=t_list, n_list=n_list,
                       eps=eps, w=w, record_coords=record_coords,
                       measure_derived=measure_derived,
                       measure_horizon=measure_horizon, delta_min=delta_min)


def _fmt_atoms(rates, weights) -> str:
    return ", ".join(f"{float(r)!r}:{float(w)!r}" for r, w in zip(rates, weights))


def serialize_config(cfg: ModelConfig) -> str:
    """Canonical INI text of a resolved config (defaults filled in)."""
    out = io.StringIO()
    out.write("[kernel]\n")
    if isinstance(cfg.kernel, Fractional):
        out.write("variant = fractional\n")
        out.write(f"alpha = {float(cfg.kernel.alpha)!r}\n")
    else:
        out.write("variant = expsum\n")
        out.write(f"atoms = {_fmt_atoms(cfg.kernel.rates, cfg.kernel.weights)}\n")
    out.write("\n[measure]\n")
    out.write(f"atoms = {_fmt_atoms(cfg.measure.rates, cfg.measure.weights)}\n")
    out.write("\n[initial]\n")
    out.write("lambda0 = " + ", ".join(repr(float(v)) for v in cfg.lambda0.masses) + "\n")
    out.write("\n[driver]\n")
    out.write(f"beta = {cfg.driver.beta!r}\n")
    out.write(f"sigma = {cfg.driver.sigma!r}\n")
    j = cfg.driver.jumps
    if j is None:
        out.write("jumps = none\n")
    elif isinstance(j, ExponentialJumps):
        out.write("jumps = exponential\n")
        out.write(f"theta = {j.theta!r}\n")
        out.write(f"eta = {j.eta!r}\n")
    else:
        out.write("jumps = finite_atoms\n")
        out.write("jump_sizes = " + ", ".join(repr(float(s)) for s in j.sizes) + "\n")
        out.write("jump_masses = " + ", ".join(repr(float(m)) for m in j.masses) + "\n")
    out.write("\n[grid]\n")
    out.write(f"dt = {cfg.grid.dt!r}\n")
    out.write(f"steps = {cfg.grid.steps}\n")
    out.write("\n[mc]\n")
    out.write(f"paths = {cfg.mc.paths}\n")
    out.write(f"seed = {cfg.mc.seed}\n")
    out.write(f"scheme = {cfg.mc.scheme}\n")
    out.write(f"antithetic = {str(cfg.mc.antithetic).lower()}\n")
    out.write("u = " + ", ".join(repr(v) for v in cfg.u_list) + "\n")
    out.write("t = " + ", ".join(repr(v) for v in cfg.t_list) + "\n")
    out.write("n = " + ", ".join(str(v) for v in cfg.n_list) + "\n")
    out.write(f"eps = {cfg.eps!r}\n")
    out.write(f"w = {cfg.w!r}\n")
    out.write(f"record_coords = {str(cfg.record_coords).lower()}\n")
    out.write("\n[cone]\n")
    out.write("w_grid = " + ", ".join(repr(float(v)) for v in cfg.cone.w_grid) + "\n")
    if cfg.cone.horizon is not None:
        out.write(f"horizon = {cfg.cone.horizon!r}\n")
    out.write(f"n_steps = {cfg.cone.n_steps}\n")
    if cfg.cone.tol is not None:
        out.write(f"tol = {cfg.cone.tol!r}\n")
    return out.getvalue()


def config_hash(cfg: ModelConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()

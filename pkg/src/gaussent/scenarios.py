"""Closed-form state families and their symplectic constructions.

Each family has a closed-form constructor returning a :class:`StandardFormV0`
and a ``compose_*`` counterpart built only from :mod:`gaussent.covariance`
primitives, so the two can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .covariance import (
    QuadratureMatrix,
    StandardFormV0,
    apply,
    beam_splitter,
    squeezer,
    tensor,
    thermal,
    two_mode_squeezer,
    vacuum,
)
from .separability import Verdict, make_verdict


class ConfigError(ValueError):
    """Invalid scenario or grid configuration."""


def _require(cond: bool, field_name: str, msg: str):
    if not cond:
        raise ConfigError(f"{field_name}: {msg}")


@dataclass(frozen=True)
class EntanglerParams:
    """Two squeezed thermal inputs on a 50:50 beam splitter (second input squeezed along ``p``)."""

    n_tilde_1: float = 1.0
    n_tilde_2: float = 1.0
    s1: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        for name in ("n_tilde_1", "n_tilde_2"):
            x = getattr(self, name)
            _require(math.isfinite(x) and x >= 1, name, f"must be >= 1, got {x!r}")
        for name in ("s1", "s2"):
            x = getattr(self, name)
            _require(math.isfinite(x) and x >= 0, name, f"must be >= 0, got {x!r}")


@dataclass(frozen=True)
class SqueezedThermalParams:
    n_tilde: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        _require(math.isfinite(self.n_tilde) and self.n_tilde >= 1, "n_tilde",
                 f"must be >= 1, got {self.n_tilde!r}")
        _require(math.isfinite(self.s) and self.s >= 0, "s", f"must be >= 0, got {self.s!r}")


@dataclass(frozen=True)
class DecoherenceParams:
    """Two-mode squeezed vacuum after time ``gamma_t`` (in units of 1/gamma) in a thermal bath."""

    s: float = 0.0
    n_tilde_env: float = 1.0
    gamma_t: float = 0.0

    def __post_init__(self):
        _require(math.isfinite(self.s) and self.s >= 0, "s", f"must be >= 0, got {self.s!r}")
        _require(math.isfinite(self.n_tilde_env) and self.n_tilde_env >= 1, "n_tilde_env",
                 f"must be >= 1, got {self.n_tilde_env!r}")
        _require(self.gamma_t >= 0 and not math.isnan(self.gamma_t), "gamma_t",
                 f"must be >= 0, got {self.gamma_t!r}")


FAMILIES = {
    "entangler": EntanglerParams,
    "tmst": SqueezedThermalParams,
    "decohered": DecoherenceParams,
}


def beam_splitter_entangler(p: EntanglerParams) -> StandardFormV0:
    a1, b1 = p.n_tilde_1 * math.exp(-2 * p.s1), p.n_tilde_1 * math.exp(2 * p.s1)
    a2, b2 = p.n_tilde_2 * math.exp(2 * p.s2), p.n_tilde_2 * math.exp(-2 * p.s2)
    return StandardFormV0(
        n1=(a1 + a2) / 2,
        n2=(b1 + b2) / 2,
        c1=(a1 - a2) / 2,
        c2=(b1 - b2) / 2,
    )


def entangler_separability_closed_form(p: EntanglerParams, tol: float = 1e-9) -> Verdict:
    """Separable iff the product of the input sub-vacuum variances is at least 1."""
    lhs = p.n_tilde_1 * math.exp(-2 * p.s1) * p.n_tilde_2 * math.exp(-2 * p.s2)
    return make_verdict("entangler_closed_form", lhs, 1.0, tol)


def two_mode_squeezed_thermal(p: SqueezedThermalParams) -> StandardFormV0:
    ch, sh = math.cosh(2 * p.s), math.sinh(2 * p.s)
    return StandardFormV0(p.n_tilde * ch, p.n_tilde * ch, -p.n_tilde * sh, p.n_tilde * sh)


def decohered_squeezed_vacuum(p: DecoherenceParams) -> StandardFormV0:
    decay = math.exp(-p.gamma_t)
    n = decay * math.cosh(2 * p.s) + p.n_tilde_env * (1 - decay)
    c = decay * math.sinh(2 * p.s)
    return StandardFormV0(n, n, -c, c)


def build(family: str, params) -> StandardFormV0:
    if family == "entangler":
        return beam_splitter_entangler(params)
    if family == "tmst":
        return two_mode_squeezed_thermal(params)
    if family == "decohered":
        return decohered_squeezed_vacuum(params)
    raise ConfigError(f"family: unknown family {family!r} (choose from {sorted(FAMILIES)})")


# --- symplectic compositions -------------------------------------------------

def compose_entangler(p: EntanglerParams) -> QuadratureMatrix:
    inputs = tensor(
        apply(squeezer(p.s1), thermal(p.n_tilde_1)),
        apply(squeezer(-p.s2), thermal(p.n_tilde_2)),
    )
    return apply(beam_splitter(math.pi / 2, 0.0), inputs)


def compose_squeezed_thermal(p: SqueezedThermalParams) -> QuadratureMatrix:
    return apply(two_mode_squeezer(p.s), tensor(thermal(p.n_tilde), thermal(p.n_tilde)))


def thermal_loss_dilation(V: QuadratureMatrix, mode: int, transmissivity: float,
                          n_tilde_env: float) -> QuadratureMatrix:
    """Mix ``mode`` with a fresh thermal environment mode on a beam splitter and trace it out."""
    theta = 2 * math.acos(math.sqrt(transmissivity))
    joint = tensor(V, thermal(n_tilde_env))
    env = V.n_modes
    out = apply(beam_splitter(theta, 0.0), joint, modes=(mode, env))
    return out.marginal(range(V.n_modes))


def compose_decohered(p: DecoherenceParams) -> QuadratureMatrix:
    v = apply(two_mode_squeezer(p.s), vacuum(2))
    decay = math.exp(-p.gamma_t)
    for mode in (0, 1):
        v = thermal_loss_dilation(v, mode, decay, p.n_tilde_env)
    return v


# --- configuration -----------------------------------------------------------

def params_from_config(cfg: dict):
    """Parse ``{"family": ..., <param>: value, ...}`` into a family and its parameters."""
    if "family" not in cfg:
        raise ConfigError("family: missing")
    family = cfg["family"]
    if family not in FAMILIES:
        raise ConfigError(f"family: unknown family {family!r} (choose from {sorted(FAMILIES)})")
    cls = FAMILIES[family]
    allowed = {f.name for f in fields(cls)}
    rest = {k: v for k, v in cfg.items() if k != "family"}
    unknown = set(rest) - allowed
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown parameter for family {family!r}")
    kwargs = {}
    for k, v in rest.items():
        try:
            kwargs[k] = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{k}: expected a number, got {v!r}") from None
    return family, cls(**kwargs)


@dataclass(frozen=True)
class GridAxis:
    name: str
    min: float
    max: float
    steps: int

    def __post_init__(self):
        _require(math.isfinite(self.min) and math.isfinite(self.max), self.name,
                 "grid bounds must be finite")
        _require(self.max > self.min, self.name,
                 f"degenerate range (max {self.max} <= min {self.min})")
        _require(self.steps >= 2, self.name, f"grid needs steps >= 2, got {self.steps}")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


def grid_from_config(cfg: dict) -> list[GridAxis]:
    """Parse ``{param: {"min": .., "max": .., "steps": ..}}``."""
    axes = []
    for name, spec in cfg.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"{name}: grid entry must be an object with min, max, steps")
        unknown = set(spec) - {"min", "max", "steps"}
        if unknown or not {"min", "max", "steps"} <= set(spec):
            raise ConfigError(f"{name}: grid entry needs exactly min, max, steps")
        axes.append(GridAxis(name, float(spec["min"]), float(spec["max"]), int(spec["steps"])))
    return axes


def parse_grid_flag(name: str, text: str) -> GridAxis:
    """Parse ``MIN:MAX:STEPS``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{name}: grid must be MIN:MAX:STEPS, got {text!r}")
    try:
        return GridAxis(name, float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        raise ConfigError(f"{name}: grid must be MIN:MAX:STEPS, got {text!r}") from None

"""Controllable design parameters, manufacturing tolerances and the uncertainty model.

A design space is an ordered list of bounded parameters. Each geometric
parameter carries a manufacturing tolerance ``u`` that defines a symmetric
uniform perturbation ``Unif(-u, +u)``. Material degradation is described by
two absolute state variables: ``alpha`` (knee degradation of the B(H)
characteristic, 1 = pristine) and ``beta`` (magnet strength degradation
fraction, 0 = pristine).
"""

from __future__ import annotations

from configparser import ConfigParser
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

GEOMETRIC = "geometric"
MATERIAL = "material"

ALPHA_RANGE = (0.0, 1.0)
BETA_RANGE = (0.0, 0.065)
ALPHA_NOMINAL = 1.0
BETA_NOMINAL = 0.0

MATERIAL_NAMES = ("alpha", "beta")


class InvalidSpaceError(ValueError):
    """Bounds or tolerances are inconsistent."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ParameterSpec:
    """One bounded design parameter with an optional manufacturing tolerance."""

    name: str
    lower: float
    upper: float
    tolerance: float = 0.0
    kind: str = GEOMETRIC

    def __post_init__(self):
        if self.kind not in (GEOMETRIC, MATERIAL):
            raise InvalidSpaceError(f"unknown parameter kind {self.kind!r}")
        if not self.lower < self.upper:
            raise InvalidSpaceError(
                f"{self.name}: lower bound {self.lower} must be < upper {self.upper}"
            )
        if self.tolerance < 0:
            raise InvalidSpaceError(f"{self.name}: tolerance must be >= 0")
        if self.kind == GEOMETRIC and self.tolerance >= (self.upper - self.lower) / 2:
            raise InvalidSpaceError(
                f"{self.name}: tolerance {self.tolerance} collapses the interval "
                f"[{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class DesignSpace:
    """Ordered collection of uniquely named parameters."""

    params: tuple[ParameterSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise InvalidSpaceError("parameter names must be unique")
        if not self.params:
            raise InvalidSpaceError("design space needs at least one parameter")

    @property
    def dim(self) -> int:
        return len(self.params)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @cached_property
    def lower(self) -> np.ndarray:
        return _readonly([p.lower for p in self.params])

    @cached_property
    def upper(self) -> np.ndarray:
        return _readonly([p.upper for p in self.params])

    @cached_property
    def tolerances(self) -> np.ndarray:
        return _readonly([p.tolerance for p in self.params])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no parameter named {name!r}") from None

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def validate_point(self, x) -> np.ndarray:
        """Check length and return the point as a float vector."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise ValueError(f"design point must have {self.dim} coordinates, got shape {x.shape}")
        return x

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = self.lower, self.upper
        return bool(np.all(x[..., : self.dim] >= lo - atol) and np.all(x[..., : self.dim] <= hi + atol))

    @classmethod
    def from_bounds(cls, lower, upper, names=None, tolerances=None) -> "DesignSpace":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        d = lower.shape[0]
        if names is None:
            names = [f"x{i}" for i in range(d)]
        if tolerances is None:
            tolerances = np.zeros(d)
        params = [
            ParameterSpec(str(n), float(lo), float(hi), float(t))
            for n, lo, hi, t in zip(names, lower, upper, tolerances)
        ]
        return cls(tuple(params))

    @classmethod
    def unit(cls, d: int) -> "DesignSpace":
        return cls.from_bounds(np.zeros(d), np.ones(d))


def load_design_space(source) -> DesignSpace:
    """Read a design space from an INI file (path or text).

    Each section is one parameter, in file order, with keys ``lower``,
    ``upper``, ``tolerance`` (optional, default 0) and ``kind`` (optional,
    default geometric).
    """
    parser = ConfigParser()
    text = Path(source).read_text() if not str(source).lstrip().startswith("[") else str(source)
    parser.read_string(text)
    params = []
    for section in parser.sections():
        sec = parser[section]
        params.append(
            ParameterSpec(
                name=section,
                lower=float(sec["lower"]),
                upper=float(sec["upper"]),
                tolerance=float(sec.get("tolerance", "0")),
                kind=sec.get("kind", GEOMETRIC),
            )
        )
    return DesignSpace(tuple(params))


@lru_cache(maxsize=1)
def default_design_space() -> DesignSpace:
    """The bundled 12-parameter reference space."""
    text = resources.files("rdopt").joinpath("data/table1.ini").read_text()
    return load_design_space(text)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; dimensions with zero width are degenerate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _readonly(self.lower)
        hi = _readonly(self.upper)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("box lower bounds exceed upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @cached_property
    def widths(self) -> np.ndarray:
        return _readonly(self.upper - self.lower)

    @cached_property
    def active(self) -> np.ndarray:
        """Mask of non-degenerate dimensions."""
        mask = self.widths > 0
        mask.flags.writeable = False
        return mask

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def is_degenerate(self) -> bool:
        return self.n_active == 0


@dataclass(frozen=True)
class UncertaintySpec:
    """Perturbation half-widths per geometric parameter plus optional material state.

    Geometric perturbations are additive and symmetric: ``Unif(-g_j, +g_j)``.
    Material variables are absolute coordinates drawn over their full ranges;
    ``alpha = 1, beta = 0`` is the unperturbed state.
    """

    geometric: tuple[float, ...]
    include_material: bool = False
    alpha_range: tuple[float, float] = ALPHA_RANGE
    beta_range: tuple[float, float] = BETA_RANGE

    def __post_init__(self):
        object.__setattr__(self, "geometric", tuple(float(g) for g in self.geometric))
        if any(g < 0 for g in self.geometric):
            raise ValueError("perturbation half-widths must be >= 0")

    @property
    def n_geometric(self) -> int:
        return len(self.geometric)

    @property
    def dim(self) -> int:
        """Length of a perturbation vector."""
        return self.n_geometric + (2 if self.include_material else 0)

    @cached_property
    def half_widths(self) -> np.ndarray:
        return _readonly(self.geometric)

    def is_deterministic(self) -> bool:
        return not self.include_material and all(g == 0 for g in self.geometric)

    @classmethod
    def from_space(cls, space: DesignSpace, uncertain=None, include_material: bool = False):
        """Use the space's own tolerances; ``uncertain`` restricts to a subset of names."""
        if uncertain is None:
            widths = [p.tolerance for p in space.params]
        else:
            unknown = set(uncertain) - set(space.names)
            if unknown:
                raise KeyError(f"unknown parameter names: {sorted(unknown)}")
            widths = [p.tolerance if p.name in set(uncertain) else 0.0 for p in space.params]
        return cls(tuple(widths), include_material=include_material)

    @classmethod
    def none(cls, space: DesignSpace):
        return cls((0.0,) * space.dim, include_material=False)


def robust_search_space(space: DesignSpace, u: UncertaintySpec) -> DesignSpace:
    """Shrink each uncertain interval so every perturbed point stays in bounds.

    A parameter with half-width ``g`` becomes ``[lower + g, upper - g]``;
    surrogates trained on the original bounds are then never evaluated
    outside their training domain.
    """
    if u.n_geometric != space.dim:
        raise ValueError("uncertainty spec does not match the design space dimension")
    params = []
    for p, g in zip(space.params, u.geometric):
        lo, hi = p.lower + g, p.upper - g
        if lo >= hi:
            raise InvalidSpaceError(
                f"{p.name}: half-width {g} collapses [{p.lower}, {p.upper}] "
                f"to an empty interval"
            )
        params.append(ParameterSpec(p.name, lo, hi, p.tolerance, p.kind))
    return DesignSpace(tuple(params))


def perturbation_box(u: UncertaintySpec) -> Box:
    """Box of admissible perturbations: ``[-g_j, +g_j]`` per geometric parameter.

    Certain parameters (``g_j = 0``) give degenerate ``[0, 0]`` dimensions.
    With material uncertainty the box gains two absolute coordinates for
    ``alpha`` and ``beta``.
    """
    lo = [-g for g in u.geometric]
    hi = [g for g in u.geometric]
    if u.include_material:
        lo += [u.alpha_range[0], u.beta_range[0]]
        hi += [u.alpha_range[1], u.beta_range[1]]
    return Box(np.array(lo), np.array(hi))


def apply_perturbation(x, delta, u: UncertaintySpec) -> np.ndarray:
    """Form the perturbed design: geometric coordinates add, material ones replace.

    ``x`` may carry just the geometry (length d) or geometry plus material
    state (length d+2). ``delta`` must match ``u.dim``; rows of a 2-D
    ``delta`` are applied independently.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    d = u.n_geometric
    if delta.shape[-1] != u.dim:
        raise ValueError(f"perturbation must have {u.dim} coordinates, got {delta.shape[-1]}")
    if x.shape[-1] not in (d, d + 2):
        raise ValueError(f"design point must have {d} or {d + 2} coordinates, got {x.shape[-1]}")
    geo = x[..., :d] + delta[..., :d]
    if u.include_material:
        material = np.broadcast_to(delta[..., d:], geo.shape[:-1] + (2,))
        return np.concatenate(np.broadcast_arrays(geo, material), axis=-1)
    if x.shape[-1] == d:
        return geo
    material = np.broadcast_to(x[..., d:], geo.shape[:-1] + (2,))
    return np.concatenate(np.broadcast_arrays(geo, material), axis=-1)


def with_nominal_material(X) -> np.ndarray:
    """Append pristine material columns (alpha=1, beta=0) to geometry rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = np.empty((X.shape[0], 2))
    cols[:, 0] = ALPHA_NOMINAL
    cols[:, 1] = BETA_NOMINAL
    return np.hstack([X, cols])

"""Analytic stand-in for an expensive motor simulator.

Two outputs over the bundled 12-parameter geometry plus the material state
``(alpha, beta)``:

* ``mean_torque`` (N.m) — smooth, almost additive in geometry and exactly
  affine in the material state with geometry-independent coefficients, so
  degradation shifts every design by the same amount.
* ``torque_ripple`` (%) — non-smooth (absolute-value kinks) with pairwise
  interactions between the flux-barrier angle pairs, independent of the
  material state.

The surface is calibrated so the reference design (interval midpoints,
pristine material) returns 433.34 N.m and 10.38 %, and full degradation
costs exactly 20 N.m. Coefficients are frozen; bump ``BENCH_VERSION`` when
changing any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .design_space import ALPHA_NOMINAL, BETA_NOMINAL, default_design_space

BENCH_VERSION = "1.0"

NOMINAL_MEAN_TORQUE = 433.34
NOMINAL_TORQUE_RIPPLE = 10.38

# Torque lost at full B(H)-knee degradation (alpha: 1 -> 0)...
ALPHA_TORQUE_COEFF = 12.0
# ... and per unit magnet degradation fraction; together 20 N.m at worst.
BETA_TORQUE_COEFF = 8.0 / 0.065
FULL_DEGRADATION_DROP = 20.0

# Smooth unimodal torque contributions of the dominant parameters:
# name -> (amplitude, peak location, width) in normalized [-1, 1] coordinates.
_TORQUE_DOMINANT = {
    "Slot_angle": (6.0, 0.55, 0.85),
    "Beta_L1_P1": (4.6, 0.45, 0.80),
    "Beta_L1_P2": (4.2, -0.40, 0.80),
    "Beta_L2_P1": (3.8, 0.00, 0.80),
    "Beta_L2_P2": (3.5, 0.00, 0.85),
}

# Weak torque contributions of the remaining parameters: name -> (amplitude, frequency).
_TORQUE_MINOR = {
    "Beta_L3_P1": (0.35, 0.9),
    "Beta_L3_P2": (0.30, 1.1),
    "Airgap": (0.40, 0.8),
    "Bridge_L1": (0.25, 1.0),
    "Bridge_L2": (0.22, 0.9),
    "Bridge_L3": (0.18, 1.2),
    "Bridge_tang": (0.20, 1.0),
}

_RIPPLE_SLOT_KINK = 2.6
_RIPPLE_PAIR_L1 = 1.5
_RIPPLE_PAIR_L2 = 1.2

# Two ripple valleys on Beta_L2_P2, symmetric about its torque peak so the
# choice between them is torque-neutral: a deep narrow one (attractive at the
# nominal point, fragile under perturbation) and a shallower broad one.
_RIPPLE_VALLEYS = ((1.25, -0.40, 0.11), (0.95, 0.40, 0.30))

_RIPPLE_MINOR_SLOPES = {
    "Beta_L3_P1": 0.14,
    "Beta_L3_P2": 0.12,
    "Airgap": 0.16,
    "Bridge_L1": 0.10,
    "Bridge_L2": 0.10,
    "Bridge_L3": 0.08,
    "Bridge_tang": 0.09,
}


@dataclass(frozen=True)
class MotorDesign:
    """One motor design: geometry in native units plus the material state."""

    Slot_angle: float
    Beta_L1_P1: float
    Beta_L1_P2: float
    Beta_L2_P1: float
    Beta_L2_P2: float
    Beta_L3_P1: float
    Beta_L3_P2: float
    Airgap: float
    Bridge_L1: float
    Bridge_L2: float
    Bridge_L3: float
    Bridge_tang: float
    alpha: float = ALPHA_NOMINAL
    beta: float = BETA_NOMINAL

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 0.065:
            raise ValueError(f"beta must be in [0, 0.065], got {self.beta}")

    def as_array(self, include_material: bool = True) -> np.ndarray:
        values = [getattr(self, f.name) for f in fields(self)]
        return np.array(values if include_material else values[:-2], dtype=float)

    @classmethod
    def from_array(cls, x, alpha: float | None = None, beta: float | None = None):
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] == 14:
            geo, a, b = x[:12], x[12], x[13]
        elif x.shape[0] == 12:
            geo, a, b = x, ALPHA_NOMINAL, BETA_NOMINAL
        else:
            raise ValueError(f"expected 12 or 14 values, got {x.shape[0]}")
        if alpha is not None:
            a = alpha
        if beta is not None:
            b = beta
        names = [f.name for f in fields(cls)][:12]
        return cls(**dict(zip(names, geo)), alpha=float(a), beta=float(b))


@lru_cache(maxsize=1)
def _geometry_constants():
    space = default_design_space()
    names = space.names
    mid = space.midpoint()
    half = 0.5 * (space.upper - space.lower)
    dom_idx, dom_amp, dom_peak, dom_width = [], [], [], []
    for name, (a, m, s) in _TORQUE_DOMINANT.items():
        dom_idx.append(names.index(name))
        dom_amp.append(a)
        dom_peak.append(m)
        dom_width.append(s)
    min_idx, min_amp, min_freq = [], [], []
    for name, (a, w) in _TORQUE_MINOR.items():
        min_idx.append(names.index(name))
        min_amp.append(a)
        min_freq.append(w)
    slope_idx = [names.index(n) for n in _RIPPLE_MINOR_SLOPES]
    slopes = list(_RIPPLE_MINOR_SLOPES.values())
    return {
        "mid": mid,
        "half": half,
        "i_slot": names.index("Slot_angle"),
        "i_b11": names.index("Beta_L1_P1"),
        "i_b12": names.index("Beta_L1_P2"),
        "i_b21": names.index("Beta_L2_P1"),
        "i_b22": names.index("Beta_L2_P2"),
        "dom": (np.array(dom_idx), np.array(dom_amp), np.array(dom_peak), np.array(dom_width)),
        "minor": (np.array(min_idx), np.array(min_amp), np.array(min_freq)),
        "slopes": (np.array(slope_idx), np.array(slopes)),
    }


@lru_cache(maxsize=1)
def _torque_base() -> float:
    _, amp, peak, width = _geometry_constants()["dom"]
    at_ref = np.sum(amp * np.exp(-(peak**2) / (2.0 * width**2)))
    return float(NOMINAL_MEAN_TORQUE - at_ref)


def _valley(z22: np.ndarray) -> np.ndarray:
    total = np.zeros_like(z22)
    for depth, center, width in _RIPPLE_VALLEYS:
        total -= depth * np.exp(-((z22 - center) ** 2) / (2.0 * width**2))
    return total


@lru_cache(maxsize=1)
def _ripple_base() -> float:
    return float(NOMINAL_TORQUE_RIPPLE - _valley(np.zeros(1))[0])


def _as_matrix(x) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Normalize input to (geometry matrix, alpha, beta, scalar_flag)."""
    if isinstance(x, MotorDesign):
        arr = x.as_array()[None, :]
        return arr[:, :12], arr[:, 12], arr[:, 13], True
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] == 14:
        return arr[:, :12], arr[:, 12], arr[:, 13], scalar
    if arr.shape[1] == 12:
        n = arr.shape[0]
        return arr, np.full(n, ALPHA_NOMINAL), np.full(n, BETA_NOMINAL), scalar
    raise ValueError(f"expected 12 or 14 columns, got {arr.shape[1]}")


def _normalized(geom: np.ndarray) -> np.ndarray:
    c = _geometry_constants()
    return (geom - c["mid"]) / c["half"]


def mean_torque(x):
    """Mean torque in N.m for a design (or batch of design rows)."""
    geom, alpha, beta, scalar = _as_matrix(x)
    if np.any(alpha < 0) or np.any(alpha > 1) or np.any(beta < 0) or np.any(beta > 0.065):
        raise ValueError("material state out of range: alpha in [0,1], beta in [0,0.065]")
    z = _normalized(geom)
    c = _geometry_constants()
    idx, amp, peak, width = c["dom"]
    t = _torque_base() + np.sum(
        amp * np.exp(-((z[:, idx] - peak) ** 2) / (2.0 * width**2)), axis=1
    )
    midx, mamp, mfreq = c["minor"]
    t = t + np.sum(mamp * np.sin(mfreq * z[:, midx]), axis=1)
    t = t - ALPHA_TORQUE_COEFF * (1.0 - alpha) - BETA_TORQUE_COEFF * beta
    return float(t[0]) if scalar else t


def torque_ripple(x):
    """Torque ripple in percent; depends on geometry only."""
    geom, _, _, scalar = _as_matrix(x)
    z = _normalized(geom)
    c = _geometry_constants()
    r = _ripple_base() + _RIPPLE_SLOT_KINK * np.abs(z[:, c["i_slot"]])
    r = r + _RIPPLE_PAIR_L1 * np.abs(z[:, c["i_b11"]] - z[:, c["i_b12"]])
    r = r + _RIPPLE_PAIR_L2 * np.abs(z[:, c["i_b21"]] - z[:, c["i_b22"]])
    r = r + _valley(z[:, c["i_b22"]])
    sidx, slopes = c["slopes"]
    r = r + np.sum(slopes * z[:, sidx], axis=1)
    return float(r[0]) if scalar else r


def reference_design() -> MotorDesign:
    """Calibration anchor: every interval midpoint, pristine material."""
    space = default_design_space()
    return MotorDesign.from_array(space.midpoint())


def evaluators() -> tuple:
    """(torque, ripple) batch evaluators sharing the surrogate calling convention."""
    return mean_torque, torque_ripple

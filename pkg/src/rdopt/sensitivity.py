"""Variance-based global sensitivity: first-order and total Sobol indices.

Uses the pick-freeze scheme: two independent Latin-hypercube base designs A
and B plus d cross designs AB_i (A with column i taken from B), for a total
of ``n_base * (d + 2)`` evaluations. First-order indices use the Janon
estimator on the (B, AB_i) pairs, total indices the Jansen estimator on
(A, AB_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design_space import DesignSpace
from .doe import lhs, scale
from .seeding import derive_seed


class ZeroVarianceError(ValueError):
    """The evaluated output is (numerically) constant."""


@dataclass(frozen=True)
class SobolResult:
    names: tuple[str, ...]
    first_order: np.ndarray
    total: np.ndarray
    first_order_se: np.ndarray
    total_se: np.ndarray
    n_base: int
    output_variance: float

    @property
    def dim(self) -> int:
        return len(self.names)

    def clamped_first_order(self) -> np.ndarray:
        """Small negative estimates clipped to zero, for reporting only."""
        return np.maximum(self.first_order, 0.0)

    def clamped_total(self) -> np.ndarray:
        return np.maximum(self.total, 0.0)


def sobol_indices(f, space: DesignSpace, n_base: int, seed: int, names=None) -> SobolResult:
    """Estimate first-order and total indices of ``f`` under uniform inputs.

    ``f`` must be a deterministic batch evaluator mapping (m, d) rows to (m,)
    outputs. Results are deterministic for a fixed seed and independent of
    how the evaluations would be distributed across workers.
    """
    d = space.dim
    if n_base < 64:
        raise ValueError("n_base must be at least 64")
    if names is None:
        names = space.names
    A = scale(lhs(n_base, d, derive_seed(seed, "sobol-A")), space).points
    B = scale(lhs(n_base, d, derive_seed(seed, "sobol-B")), space).points
    y_a = np.asarray(f(A), dtype=float).ravel()
    y_b = np.asarray(f(B), dtype=float).ravel()
    if y_a.shape[0] != n_base or y_b.shape[0] != n_base:
        raise ValueError("evaluator must return one output per row")

    pooled = np.concatenate([y_a, y_b])
    variance = float(np.var(pooled, ddof=1))
    mean = float(pooled.mean())
    if variance == 0.0 or variance < 1e-12 * mean * mean:
        raise ZeroVarianceError("output variance is zero; indices are undefined")

    first = np.empty(d)
    total = np.empty(d)
    first_se = np.empty(d)
    total_se = np.empty(d)
    for i in range(d):
        ab = A.copy()
        ab[:, i] = B[:, i]
        y_ab = np.asarray(f(ab), dtype=float).ravel()

        # Janon estimator: (B, AB_i) share only coordinate i.
        m = 0.5 * np.mean(y_b + y_ab)
        v = 0.5 * np.mean(y_b**2 + y_ab**2) - m * m
        first[i] = (np.mean(y_b * y_ab) - m * m) / v
        terms = y_b * (y_ab - y_a) / variance
        first_se[i] = float(np.std(terms, ddof=1) / np.sqrt(n_base))

        # Jansen estimator: (A, AB_i) differ only in coordinate i.
        t_terms = 0.5 * (y_a - y_ab) ** 2 / variance
        total[i] = float(np.mean(t_terms))
        total_se[i] = float(np.std(t_terms, ddof=1) / np.sqrt(n_base))

    return SobolResult(
        names=tuple(names),
        first_order=first,
        total=total,
        first_order_se=first_se,
        total_se=total_se,
        n_base=n_base,
        output_variance=variance,
    )


def rank_uncertain_parameters(result: SobolResult, space: DesignSpace, k: int) -> list[str]:
    """Top-k parameter names by total index (ties: first-order, then position).

    Raw (unclamped) estimates are used so ordering information is preserved.
    """
    if k > space.dim:
        raise ValueError(f"k={k} exceeds the {space.dim} parameters")
    order = np.lexsort((np.arange(result.dim), -result.first_order, -result.total))
    return [result.names[i] for i in order[:k]]


def save_csv(result: SobolResult, path) -> None:
    """Persist indices as CSV rows (parameter, S_i, S_total): bar-chart ready."""
    lines = [f"# n_base={result.n_base}", "parameter,s_first,s_total"]
    for name, s1, st in zip(result.names, result.first_order, result.total):
        lines.append(f"{name},{s1:.17g},{st:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")

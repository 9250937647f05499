"""Space-filling experiment designs: Latin hypercubes with maximin refinement."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design_space import DesignSpace
from .seeding import derive_seed

KINDS = ("lhs", "maximin_lhs", "grid")


@dataclass(frozen=True)
class SampleSet:
    """An n x d matrix of sample points plus the seed and sampler that made it."""

    points: np.ndarray
    seed: int
    kind: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D matrix")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def lhs(n: int, d: int, seed: int, centered: bool = False) -> SampleSet:
    """Latin hypercube in [0,1]^d: one point per stratum in every column.

    Points are placed at jittered stratum midpoints, or exactly at the
    midpoints when ``centered`` (useful when exact per-column means matter).
    """
    if n < 1 or d < 1:
        raise ValueError("lhs needs n >= 1 and d >= 1")
    rng = np.random.default_rng(derive_seed(seed, "lhs", n, d))
    pts = np.empty((n, d))
    offsets = np.full((n, d), 0.5) if centered else rng.random((n, d))
    for j in range(d):
        pts[:, j] = (rng.permutation(n) + offsets[:, j]) / n
    return SampleSet(pts, seed, "lhs")


def is_latin(points: np.ndarray) -> bool:
    """True when every column has exactly one point per stratum [k/n, (k+1)/n)."""
    pts = np.asarray(points)
    n = pts.shape[0]
    strata = np.floor(pts * n).astype(int)
    expected = np.arange(n)
    return all(np.array_equal(np.sort(strata[:, j]), expected) for j in range(pts.shape[1]))


def min_pairwise_distance(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    d2 = _sq_distance_matrix(pts)
    return float(np.sqrt(d2.min()))


def _sq_distance_matrix(pts: np.ndarray) -> np.ndarray:
    sq = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(sq, np.inf)
    return sq


def maximin_lhs(n: int, d: int, seed: int, iters: int | None = None, centered: bool = False) -> SampleSet:
    """LHS improved by random within-column row swaps that increase the minimum distance.

    Swapping two rows' values inside one column preserves the Latin property;
    a swap is kept only when it strictly increases the minimum pairwise
    Euclidean distance, so the result is never worse than the initial design.
    """
    if n < 2:
        raise ValueError("maximin_lhs needs n >= 2")
    base = lhs(n, d, seed, centered=centered)
    pts = np.array(base.points)
    if iters is None:
        iters = 10 * n * d
    rng = np.random.default_rng(derive_seed(seed, "maximin", n, d))
    sq = _sq_distance_matrix(pts)
    best = sq.min()
    amin = np.unravel_index(np.argmin(sq), sq.shape)
    for _ in range(iters):
        j = int(rng.integers(d))
        r1, r2 = rng.choice(n, size=2, replace=False)
        v1, v2 = pts[r1, j], pts[r2, j]
        if v1 == v2:
            continue
        # Only pairs involving r1/r2 change, so the global minimum can rise
        # only if the current minimal pair is one of them.
        if amin[0] not in (r1, r2) and amin[1] not in (r1, r2):
            continue
        col = pts[:, j]
        sq1_old = (v1 - col) ** 2
        sq2_old = (v2 - col) ** 2
        new1 = sq[r1] - sq1_old + sq2_old
        new2 = sq[r2] - sq2_old + sq1_old
        new1[r1] = np.inf
        new2[r2] = np.inf
        new1[r2] = sq[r1, r2]
        new2[r1] = sq[r1, r2]
        mask = np.ones(n, dtype=bool)
        mask[[r1, r2]] = False
        others_min = sq[np.ix_(mask, mask)].min() if n > 2 else np.inf
        candidate = min(others_min, new1.min(), new2.min())
        if candidate > best:
            pts[r1, j], pts[r2, j] = v2, v1
            sq[r1, :] = new1
            sq[:, r1] = new1
            sq[r2, :] = new2
            sq[:, r2] = new2
            sq[r1, r2] = sq[r2, r1] = new1[r2]
            best = candidate
            amin = np.unravel_index(np.argmin(sq), sq.shape)
    return SampleSet(pts, seed, "maximin_lhs")


def grid(levels: int, d: int) -> SampleSet:
    """Full-factorial grid over [0,1]^d including the endpoints."""
    if levels < 2 or d < 1:
        raise ValueError("grid needs levels >= 2 and d >= 1")
    axes = [np.linspace(0.0, 1.0, levels)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    return SampleSet(pts, 0, "grid")


def scale(samples: SampleSet, space: DesignSpace) -> SampleSet:
    """Affine map of unit-cube samples onto the space's bounds."""
    if samples.dim != space.dim:
        raise ValueError(f"samples have {samples.dim} columns, space has {space.dim}")
    pts = space.lower + samples.points * (space.upper - space.lower)
    return SampleSet(pts, samples.seed, samples.kind)


def unscale(samples: SampleSet, space: DesignSpace) -> SampleSet:
    """Inverse of :func:`scale`."""
    if samples.dim != space.dim:
        raise ValueError(f"samples have {samples.dim} columns, space has {space.dim}")
    pts = (samples.points - space.lower) / (space.upper - space.lower)
    return SampleSet(pts, samples.seed, samples.kind)


def save_csv(samples: SampleSet, path, names=None) -> None:
    """Persist a sample set as CSV with a header row of parameter names."""
    path = Path(path)
    if names is None:
        names = [f"x{i}" for i in range(samples.dim)]
    if len(names) != samples.dim:
        raise ValueError("one column name per dimension required")
    lines = [f"# kind={samples.kind}", f"# seed={samples.seed}", ",".join(names)]
    for row in samples.points:
        lines.append(",".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def load_csv(path) -> tuple[SampleSet, list[str]]:
    path = Path(path)
    kind, seed = "lhs", 0
    names: list[str] = []
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "kind":
                kind = value.strip()
            elif key.strip() == "seed":
                seed = int(value.strip())
            continue
        if not names:
            names = [c.strip() for c in line.split(",")]
            continue
        rows.append([float(c) for c in line.split(",")])
    if not names or not rows:
        raise ValueError(f"no sample data in {path}")
    return SampleSet(np.array(rows), seed, kind), names

"""Multi-objective genetic search (NSGA-II style) and particle-swarm optimization.

The genetic algorithm uses fast non-dominated sorting, crowding-distance
selection, binary tournaments, simulated binary crossover and polynomial
mutation with elitist (mu + lambda) survival. The swarm optimizer is a
global-best PSO with inertia weight, velocity clamping and reflecting
bounds; a lockstep variant runs many independent swarms side by side so
embedded per-design searches can share batched objective evaluations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design_space import Box, DesignSpace
from .doe import lhs, scale
from .seeding import derive_seed

FORMULATIONS = ("deterministic", "expectation", "worst_case")
UNCERTAINTY_TAGS = ("none", "ug", "ugum")


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 40
    iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    velocity_fraction: float = 0.5  # velocity clamp as a fraction of the box width
    seed: int = 0

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 1:
            raise ValueError("particles and iterations must be >= 1")


@dataclass(frozen=True)
class Nsga2Config:
    population: int = 150
    generations: int = 300
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float | None = None  # default 1/d
    mutation_eta: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for p in (self.crossover_prob, self.mutation_prob):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


@dataclass
class Individual:
    x: np.ndarray
    objectives: np.ndarray
    rank: int = 0
    crowding: float = 0.0


@dataclass(frozen=True)
class ParetoFront:
    """A mutually non-dominated set of evaluated designs."""

    individuals: tuple[Individual, ...]
    formulation: str = "deterministic"
    uncertainty_tag: str = "none"
    seed: int = 0
    evaluation_budget: int = 0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.uncertainty_tag not in UNCERTAINTY_TAGS:
            raise ValueError(f"uncertainty_tag must be one of {UNCERTAINTY_TAGS}")
        objs = self.objectives
        if len(self.individuals) > 1:
            fronts = non_dominated_sort(objs)
            if len(fronts) != 1:
                raise ValueError("front contains dominated individuals")

    def __len__(self) -> int:
        return len(self.individuals)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([ind.objectives for ind in self.individuals], dtype=float)

    @property
    def designs(self) -> np.ndarray:
        return np.array([ind.x for ind in self.individuals], dtype=float)


def non_dominated_sort(objectives) -> list[np.ndarray]:
    """Partition points into domination ranks (rank 0 first).

    A point dominates another when it is <= in every objective and < in at
    least one.
    """
    F = np.atleast_2d(np.asarray(objectives, dtype=float))
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=-1)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=-1)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0)
    fronts: list[np.ndarray] = []
    assigned = np.zeros(n, dtype=bool)
    current = np.where(n_dominators == 0)[0]
    while current.size:
        fronts.append(current)
        assigned[current] = True
        n_dominators = n_dominators - dom[current].sum(axis=0)
        current = np.where((n_dominators == 0) & ~assigned)[0]
    return fronts


def crowding_distance(objectives) -> np.ndarray:
    """Per-point crowding distance; boundary points get infinity."""
    F = np.atleast_2d(np.asarray(objectives, dtype=float))
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        lo, hi = F[order[0], j], F[order[-1], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            gaps = (F[order[2:], j] - F[order[:-2], j]) / (hi - lo)
            dist[order[1:-1]] += gaps
    return dist


def _rank_and_crowd(F: np.ndarray):
    ranks = np.empty(F.shape[0], dtype=int)
    crowd = np.empty(F.shape[0])
    for r, front in enumerate(non_dominated_sort(F)):
        ranks[front] = r
        crowd[front] = crowding_distance(F[front])
    return ranks, crowd


def _tournament(rng, ranks, crowd, count):
    a = rng.integers(len(ranks), size=count)
    b = rng.integers(len(ranks), size=count)
    a_wins = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowd[a] > crowd[b]))
    return np.where(a_wins, a, b)


def _sbx(rng, parents1, parents2, lower, upper, eta, prob):
    """Bounded simulated binary crossover on paired parent rows."""
    m, d = parents1.shape
    c1, c2 = parents1.copy(), parents2.copy()
    do_pair = rng.random(m) < prob
    do_gene = rng.random((m, d)) < 0.5
    u = rng.random((m, d))
    swap = rng.random((m, d)) < 0.5
    y1 = np.minimum(parents1, parents2)
    y2 = np.maximum(parents1, parents2)
    span = y2 - y1
    ok = do_pair[:, None] & do_gene & (span > 1e-14)
    with np.errstate(divide="ignore", invalid="ignore"):
        span_safe = np.where(span > 1e-14, span, 1.0)
        beta1 = 1.0 + 2.0 * (y1 - lower) / span_safe
        beta2 = 1.0 + 2.0 * (upper - y2) / span_safe
        exp = -(eta + 1.0)
        alpha1 = 2.0 - beta1**exp
        alpha2 = 2.0 - beta2**exp
        bq1 = np.where(
            u <= 1.0 / alpha1,
            (u * alpha1) ** (1.0 / (eta + 1.0)),
            (1.0 / (2.0 - u * alpha1)) ** (1.0 / (eta + 1.0)),
        )
        bq2 = np.where(
            u <= 1.0 / alpha2,
            (u * alpha2) ** (1.0 / (eta + 1.0)),
            (1.0 / (2.0 - u * alpha2)) ** (1.0 / (eta + 1.0)),
        )
        child1 = 0.5 * ((y1 + y2) - bq1 * span)
        child2 = 0.5 * ((y1 + y2) + bq2 * span)
    child1 = np.clip(child1, lower, upper)
    child2 = np.clip(child2, lower, upper)
    lo = np.where(swap, child2, child1)
    hi = np.where(swap, child1, child2)
    c1[ok] = lo[ok]
    c2[ok] = hi[ok]
    return c1, c2


def _polynomial_mutation(rng, X, lower, upper, eta, prob):
    m, d = X.shape
    out = X.copy()
    do = rng.random((m, d)) < prob
    u = rng.random((m, d))
    span = upper - lower
    d1 = (X - lower) / span
    d2 = (upper - X) / span
    mpow = 1.0 / (eta + 1.0)
    low_side = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)) ** mpow - 1.0
    high_side = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)) ** mpow
    delta = np.where(u < 0.5, low_side, high_side)
    out[do] = np.clip(X + delta * span, lower, upper)[do]
    return out


def nsga2(
    objectives,
    space: DesignSpace,
    cfg: Nsga2Config,
    *,
    formulation: str = "deterministic",
    uncertainty_tag: str = "none",
) -> ParetoFront:
    """Minimize a vector objective over a box-bounded space.

    ``objectives`` is a batch evaluator mapping an (m, d) design matrix to an
    (m, n_obj) objective matrix; all objectives are minimized. Returns the
    rank-0 subset of the final population. Bitwise deterministic per seed.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "nsga2"))
    lower, upper = space.lower, space.upper
    d = space.dim
    pop = cfg.population + (cfg.population % 2)
    pm = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / d

    X = scale(lhs(pop, d, derive_seed(cfg.seed, "nsga2-init")), space).points.copy()
    F = _evaluate(objectives, X)
    evals = pop
    ranks, crowd = _rank_and_crowd(F)

    for _ in range(cfg.generations):
        parents = _tournament(rng, ranks, crowd, pop)
        p1, p2 = X[parents[0::2]], X[parents[1::2]]
        c1, c2 = _sbx(rng, p1, p2, lower, upper, cfg.crossover_eta, cfg.crossover_prob)
        children = np.empty_like(X)
        children[0::2] = c1
        children[1::2] = c2
        children = _polynomial_mutation(rng, children, lower, upper, cfg.mutation_eta, pm)
        CF = _evaluate(objectives, children)
        evals += pop

        allX = np.vstack([X, children])
        allF = np.vstack([F, CF])
        X, F, ranks, crowd = _survival(allX, allF, pop)

    front0 = np.where(ranks == 0)[0]
    individuals = tuple(
        Individual(X[i].copy(), F[i].copy(), 0, float(crowd[i])) for i in front0
    )
    return ParetoFront(
        individuals=individuals,
        formulation=formulation,
        uncertainty_tag=uncertainty_tag,
        seed=cfg.seed,
        evaluation_budget=evals,
    )


def _evaluate(objectives, X) -> np.ndarray:
    F = np.atleast_2d(np.asarray(objectives(X), dtype=float))
    if F.shape[0] != X.shape[0]:
        raise ValueError("objective evaluator must return one row per design")
    if not np.all(np.isfinite(F)):
        bad = np.where(~np.all(np.isfinite(F), axis=1))[0][0]
        raise RuntimeError(f"objective evaluation failed at design {X[bad]!r}")
    return F


def _survival(allX, allF, pop):
    ranks = np.empty(allX.shape[0], dtype=int)
    keep: list[np.ndarray] = []
    total = 0
    for r, front in enumerate(non_dominated_sort(allF)):
        ranks[front] = r
        if total + front.size <= pop:
            keep.append(front)
            total += front.size
        else:
            cd = crowding_distance(allF[front])
            order = np.argsort(-cd, kind="stable")
            keep.append(front[order[: pop - total]])
            total = pop
        if total >= pop:
            break
    idx = np.concatenate(keep)
    X, F = allX[idx].copy(), allF[idx].copy()
    new_ranks, crowd = _rank_and_crowd(F)
    return X, F, new_ranks, crowd


def pso_batch(objective_batch, lower, upper, cfg: PsoConfig, seeds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run many independent swarms in lockstep (minimization).

    ``objective_batch`` maps an (m, p, k) particle tensor to (m, p) values;
    each swarm has its own random stream so results per swarm are pure
    functions of (bounds, cfg, seed) regardless of how swarms are batched.
    Returns (best positions (m, k), best values (m,), converged flags (m,)).
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    k = lower.shape[0]
    m = len(seeds)
    p = cfg.particles
    span = upper - lower
    vmax = cfg.velocity_fraction * span

    pos = np.empty((m, p, k))
    draws = np.empty((m, cfg.iterations, 2, p, k))
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        pos[i] = lower + rng.random((p, k)) * span
        draws[i] = rng.random((cfg.iterations, 2, p, k))
    vel = np.zeros_like(pos)

    vals = np.asarray(objective_batch(pos), dtype=float)
    pbest_pos = pos.copy()
    pbest_val = vals.copy()
    g_idx = np.argmin(pbest_val, axis=1)
    rows = np.arange(m)
    gbest_pos = pbest_pos[rows, g_idx].copy()
    gbest_val = pbest_val[rows, g_idx].copy()
    half_start_val = None

    for t in range(cfg.iterations):
        r1 = draws[:, t, 0]
        r2 = draws[:, t, 1]
        vel = (
            cfg.inertia * vel
            + cfg.cognitive * r1 * (pbest_pos - pos)
            + cfg.social * r2 * (gbest_pos[:, None, :] - pos)
        )
        vel = np.clip(vel, -vmax, vmax)
        pos = pos + vel
        # reflect at the bounds (one bounce is enough given the velocity clamp)
        below = pos < lower
        above = pos > upper
        pos = np.where(below, 2.0 * lower - pos, pos)
        pos = np.where(above, 2.0 * upper - pos, pos)
        vel = np.where(below | above, -vel, vel)
        pos = np.clip(pos, lower, upper)

        vals = np.asarray(objective_batch(pos), dtype=float)
        improved = vals < pbest_val
        pbest_val = np.where(improved, vals, pbest_val)
        pbest_pos = np.where(improved[:, :, None], pos, pbest_pos)
        g_idx = np.argmin(pbest_val, axis=1)
        gbest_pos = pbest_pos[rows, g_idx].copy()
        gbest_val = pbest_val[rows, g_idx].copy()
        if t == cfg.iterations // 2:
            half_start_val = gbest_val.copy()

    if half_start_val is None:
        converged = np.zeros(m, dtype=bool)
    else:
        converged = np.abs(half_start_val - gbest_val) <= 1e-9 * (1.0 + np.abs(gbest_val))
    return gbest_pos, gbest_val, converged


def pso(objective, box: Box, cfg: PsoConfig) -> tuple[np.ndarray, float]:
    """Global-best PSO minimization over a box; degenerate dims stay fixed.

    ``objective`` maps an (m, d) matrix to (m,) values.
    """
    active = box.active
    base = box.lower.copy()
    if box.is_degenerate():
        return base, float(np.asarray(objective(base[None, :]), dtype=float)[0])

    def batch(p_tensor):
        m, p, _ = p_tensor.shape
        full = np.tile(base, (m * p, 1))
        full[:, active] = p_tensor.reshape(m * p, -1)
        return np.asarray(objective(full), dtype=float).reshape(m, p)

    best_pos, best_val, _ = pso_batch(
        batch, box.lower[active], box.upper[active], cfg, [derive_seed(cfg.seed, "pso")]
    )
    x = base.copy()
    x[active] = best_pos[0]
    return x, float(best_val[0])


def hypervolume(front, ref_point) -> float:
    """2-D hypervolume dominated by a front relative to a reference point.

    Points that do not dominate the reference point are excluded with a
    warning.
    """
    objs = front.objectives if isinstance(front, ParetoFront) else np.atleast_2d(np.asarray(front, dtype=float))
    if objs.size == 0:
        return 0.0
    if objs.shape[1] != 2:
        raise ValueError("hypervolume supports exactly two objectives")
    ref = np.asarray(ref_point, dtype=float)
    valid = np.all(objs <= ref, axis=1) & np.any(objs < ref, axis=1)
    if not np.all(valid):
        warnings.warn(f"excluded {np.count_nonzero(~valid)} points not dominating the reference")
        objs = objs[valid]
    if objs.shape[0] == 0:
        return 0.0
    fronts = non_dominated_sort(objs)
    pts = objs[fronts[0]]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    hv = 0.0
    prev_f2 = ref[1]
    for f1, f2 in pts:
        if f2 < prev_f2:
            hv += (ref[0] - f1) * (prev_f2 - f2)
            prev_f2 = f2
    return float(hv)


def generational_distance(objs, reference_set) -> float:
    """Mean Euclidean distance from each point to the closest reference point."""
    A = np.atleast_2d(np.asarray(objs, dtype=float))
    R = np.atleast_2d(np.asarray(reference_set, dtype=float))
    d2 = np.sum((A[:, None, :] - R[None, :, :]) ** 2, axis=-1)
    return float(np.mean(np.sqrt(d2.min(axis=1))))


def save_front(front: ParetoFront, path, design_names=None, objective_names=("f1", "f2")) -> None:
    """Persist a front as CSV: design columns, objective columns, metadata comments."""
    X = front.designs
    F = front.objectives
    if design_names is None:
        design_names = [f"x{i}" for i in range(X.shape[1])]
    objective_names = list(objective_names)[: F.shape[1]]
    if len(objective_names) != F.shape[1]:
        objective_names = [f"f{i + 1}" for i in range(F.shape[1])]
    lines = [
        f"# formulation={front.formulation}",
        f"# uncertainty={front.uncertainty_tag}",
        f"# seed={front.seed}",
        f"# evaluations={front.evaluation_budget}",
        ",".join(list(design_names) + objective_names),
    ]
    for x, f in zip(X, F):
        lines.append(",".join(f"{v:.17g}" for v in np.concatenate([x, f])))
    Path(path).write_text("\n".join(lines) + "\n")


def load_front(path, n_objectives: int = 2) -> ParetoFront:
    meta = {"formulation": "deterministic", "uncertainty": "none", "seed": "0", "evaluations": "0"}
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"no data rows in {path}")
    data = np.array(rows)
    X, F = data[:, :-n_objectives], data[:, -n_objectives:]
    individuals = tuple(Individual(x, f) for x, f in zip(X, F))
    return ParetoFront(
        individuals=individuals,
        formulation=meta["formulation"],
        uncertainty_tag=meta["uncertainty"],
        seed=int(meta["seed"]),
        evaluation_budget=int(meta["evaluations"]),
    )

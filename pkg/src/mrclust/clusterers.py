"""Sequential clustering algorithms and exhaustive optimum oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import UsageError
from .exact import FULL_EXPONENT_RANGE, ExactSums, exponent_range
from .metric import (ClusteringSolution, Dataset, WeightedPointSet, charge,
                     make_solution, nearest_points)

BRUTE_FORCE_LIMIT = 10**7


def gonzalez_kcenter(ds: Dataset, k: int, seed: int = 0, start: int | None = None) -> ClusteringSolution:
    """Farthest-point traversal; a 2-approximation for k-center."""
    n = ds.n
    if not 1 <= k <= n:
        raise UsageError(f"k={k} must lie in [1, n={n}]")
    if start is None:
        start = int(np.random.default_rng(seed).integers(n))
    everyone = np.arange(n)
    centers = [int(start)]
    d, _ = ds.nearest(everyone, centers)
    d[start] = -1.0
    for _ in range(k - 1):
        nxt = int(np.argmax(d))
        centers.append(nxt)
        d = np.minimum(d, ds.nearest(everyone, [nxt])[0])
        d[centers] = -1.0
    return make_solution(ds, centers, "kcenter")


@dataclass(frozen=True)
class LocalSearchConfig:
    improvement_factor: float = 0.999
    max_iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.improvement_factor < 1:
            raise UsageError("improvement_factor must lie in (0, 1)")


class _Points:
    """Distances among the points of a weighted set, addressed by local index."""

    def __init__(self, ds: Dataset, pts: np.ndarray):
        self.m = pts.size
        if ds.coords is not None:
            self.P = np.ascontiguousarray(ds.coords[pts])
            self.M = None
        else:
            self.P = None
            self.M = np.ascontiguousarray(ds.matrix[np.ix_(pts, pts)])

    def to_centers(self, slots):
        charge(self.m * len(slots))
        if self.M is not None:
            return self.M[:, slots]
        return _kernels.rows_to_points(self.P, np.arange(self.m), np.asarray(slots))

    def swap_costs(self, w, d1, a1, d2, u, k):
        charge(self.m)
        if self.M is not None:
            return _kernels.swap_costs_row(self.M[u], w, d1, a1, d2, k)
        return _kernels.swap_costs_euclid(self.P, w, d1, a1, d2, u, k)


def local_search_kmedian(ws: WeightedPointSet, ds: Dataset, k: int,
                         cfg: LocalSearchConfig = LocalSearchConfig(),
                         init=None) -> ClusteringSolution:
    """Single-swap local search for weighted k-median over the points of ``ws``.

    Candidates to add are visited in a seeded random cycle; for each one every
    possible drop is priced at once, and the best drop is taken if it cuts the
    cost below ``improvement_factor`` times the current cost. The search ends
    after a full cycle without an accepted swap or ``max_iterations`` swaps.
    """
    m = len(ws)
    if not 1 <= k <= m:
        raise UsageError(f"k={k} must lie in [1, |ws|={m}]")
    order = np.argsort(ws.points, kind="stable")
    pts = ws.points[order]
    w = ws.weights[order].astype(np.float64)
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        slots = np.sort(rng.choice(m, size=k, replace=False))
    else:
        init = np.unique(np.asarray(init, dtype=np.int64))
        if init.size != k or not np.all(np.isin(init, pts)):
            raise UsageError("init must be k distinct members of the weighted set")
        slots = np.searchsorted(pts, init)
    limit = cfg.max_iterations if cfg.max_iterations is not None else 10 * ds.n
    space = _Points(ds, pts)

    def state(slots):
        d1, a1, d2 = _kernels.two_nearest_from_rows(space.to_centers(slots))
        return d1, a1, d2, float(np.sum(w * d1))

    d1, a1, d2, cost = state(slots)
    is_center = np.zeros(m, dtype=bool)
    is_center[slots] = True
    cycle = rng.permutation(m)
    pos = 0
    idle = 0
    swaps = 0
    while idle < m - k and swaps < limit:
        u = int(cycle[pos])
        pos = (pos + 1) % m
        if is_center[u]:
            continue
        costs = space.swap_costs(w, d1, a1, d2, u, k)
        j = int(np.argmin(costs))
        if costs[j] < cfg.improvement_factor * cost:
            is_center[slots[j]] = False
            is_center[u] = True
            slots[j] = u
            slots = np.sort(slots)
            d1, a1, d2, cost = state(slots)
            idle = 0
            swaps += 1
        else:
            idle += 1
    return make_solution(ds, pts[slots], "weighted_kmedian",
                         WeightedPointSet(ws.points, ws.weights))


@dataclass(frozen=True)
class LloydConfig:
    max_iterations: int = 100
    convergence_tol: float = 1e-9
    seed: int = 0


@dataclass
class LloydRun:
    """Continuous iterates of Lloyd's method before snapping."""

    centers: np.ndarray
    history: list = field(default_factory=list)
    sse: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


def initial_centers(m: int, k: int, seed: int) -> np.ndarray:
    if not 1 <= k <= m:
        raise UsageError(f"k={k} must lie in [1, {m}]")
    return np.sort(np.random.default_rng(seed).choice(m, size=k, replace=False))


class LloydStep:
    """One machine's share of a Lloyd iteration: assignment plus exact partial sums."""

    def __init__(self, P, w, k, exp_range):
        self.P = P
        self.w = w
        self.k = k
        self.exp_range = exp_range

    def __call__(self, centers):
        d, lab = nearest_points(self.P, centers)
        charge(self.P.shape[0] * centers.shape[0])
        sums = ExactSums.of(self.P, lab, self.k, self.exp_range, self.w)
        counts = np.bincount(lab, weights=self.w, minlength=self.k)
        sse = ExactSums.of(d * d, np.zeros(d.size, dtype=np.int64), 1, FULL_EXPONENT_RANGE, self.w)
        return sums, counts, sse


def combine_step(parts, centers) -> tuple[np.ndarray, float]:
    """Merge machine partials (in the given order) into new centers and the SSE of ``centers``."""
    sums, counts, sse = parts[0]
    sums = _copy(sums)
    sse = _copy(sse)
    counts = counts.copy()
    for s, c, e in parts[1:]:
        sums += s
        counts += c
        sse += e
    totals = sums.totals()
    new = centers.copy()
    for j in range(centers.shape[0]):
        if counts[j] > 0:
            weight = int(counts[j])
            new[j] = [float(t / weight) for t in totals[j]]
    return new, float(sse.totals()[0][0])


def _copy(acc: ExactSums) -> ExactSums:
    out = ExactSums(acc.labels, acc.columns, (acc.lo, acc.hi))
    out.bins = acc.bins.copy()
    return out


def lloyd_iterate(step_parts, start: np.ndarray, cfg: LloydConfig) -> LloydRun:
    """Drive Lloyd's loop; ``step_parts(centers)`` returns the per-machine partials."""
    centers = start
    run = LloydRun(centers, [centers])
    for _ in range(cfg.max_iterations):
        new, sse = combine_step(step_parts(centers), centers)
        if np.array_equal(new, centers):
            run.sse.append(sse)
            break
        if run.sse and run.sse[-1] - sse <= cfg.convergence_tol * run.sse[-1]:
            run.sse.append(sse)
            break
        run.sse.append(sse)
        centers = new
        run.history.append(centers)
    run.centers = centers
    return run


def lloyd_run(ds: Dataset, k: int, cfg: LloydConfig = LloydConfig(), weights=None,
              init=None) -> LloydRun:
    if ds.coords is None:
        raise UsageError("Lloyd's method needs euclidean coordinates")
    P = ds.coords
    w = np.ones(ds.n) if weights is None else np.asarray(weights, dtype=np.float64)
    slots = initial_centers(ds.n, k, cfg.seed) if init is None else np.asarray(init)
    step = LloydStep(P, w, k, exponent_range(P))
    return lloyd_iterate(lambda c: [step(c)], P[slots].copy(), cfg)


def snap(ds: Dataset, centers: np.ndarray, candidates=None) -> np.ndarray:
    """Replace each continuous center by its nearest input point."""
    pool = np.arange(ds.n) if candidates is None else np.asarray(candidates)
    _, j = nearest_points(centers, ds.coords[pool])
    charge(centers.shape[0] * pool.size)
    return np.unique(pool[j])


def lloyd_kmedian(ds: Dataset, weights=None, k: int = 1, cfg: LloydConfig = LloydConfig(),
                  init=None) -> ClusteringSolution:
    """Lloyd's method on coordinates, reported as a discrete k-median solution."""
    run = lloyd_run(ds, k, cfg, weights, init)
    centers = snap(ds, run.centers)
    if weights is None:
        return make_solution(ds, centers, "kmedian")
    ws = WeightedPointSet(np.arange(ds.n), weights)
    return make_solution(ds, centers, "weighted_kmedian", ws)


def brute_force_opt(ds: Dataset, k: int, kind: str, weights: WeightedPointSet | None = None,
                    limit: int = BRUTE_FORCE_LIMIT) -> ClusteringSolution:
    """Optimal centers by trying every k-subset (of V, or of the weighted set)."""
    if weights is not None:
        scope, w = weights.points, weights.weights.astype(np.float64)
    else:
        scope, w = np.arange(ds.n), np.ones(ds.n)
    if not 1 <= k <= scope.size:
        raise UsageError(f"k={k} must lie in [1, {scope.size}]")
    if math.comb(scope.size, k) > limit:
        raise UsageError(f"C({scope.size}, {k}) subsets exceeds the limit of {limit}")
    order = np.argsort(scope)
    scope, w = scope[order], w[order]
    D = np.ascontiguousarray(ds.block(scope, scope))
    _, by_sum, _, by_max = _kernels.enumerate_subsets(D, w, k)
    best = by_max if kind == "kcenter" else by_sum
    return make_solution(ds, scope[best], kind, weights)

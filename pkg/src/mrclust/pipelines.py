"""MapReduce clustering pipelines built on the simulator.

Every pipeline finishes with one scan round that measures the returned centers
against all of V, so reported costs always refer to the full instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clusterers import (LloydConfig, LloydRun, LloydStep, LocalSearchConfig, gonzalez_kcenter,
                         initial_centers, lloyd_iterate, lloyd_run, local_search_kmedian, snap)
from .errors import UsageError
from .exact import exponent_range
from .metric import (ClusteringSolution, Dataset, WeightedPointSet, make_solution,
                     nearest_points, charge)
from .runtime import ClusterConfig, Job, JobTrace, KeyValue, key_seed, partition_arbitrary
from .sampling import SampleConfig, mr_iterative_sample

SUBROUTINES = ("localsearch", "lloyd")


@dataclass
class PipelineResult:
    solution: ClusteringSolution
    trace: JobTrace
    sample_size: int | None = None
    weights: WeightedPointSet | None = None
    lloyd: LloydRun | None = None


def _distance_words(ds: Dataset, rows: int, cols: int) -> int:
    """Words to ship a rows x cols block of distances, whatever the dataset kind."""
    return rows * cols


def _scan(job: Job, ds: Dataset, centers, kind: str) -> ClusteringSolution:
    centers = np.unique(np.asarray(centers, dtype=np.int64))
    pieces = np.array_split(np.arange(ds.n), job.cfg.fold(ds.n))

    def measure(key, values, seed):
        for ids in values:
            d, _ = ds.nearest(ids, centers)
            yield KeyValue(0, float(d.max() if kind == "kcenter" else d.sum()), 1)

    job.round([KeyValue(i, p, p.size + centers.size + _distance_words(ds, p.size, centers.size))
               for i, p in enumerate(pieces)], measure, label="scan")
    return make_solution(ds, centers, kind)


def _check_k(ds: Dataset, k: int):
    if not 1 <= k <= ds.n:
        raise UsageError(f"k={k} must lie in [1, n={ds.n}]")


def mapreduce_kcenter(ds: Dataset, k: int, epsilon: float, cluster: ClusterConfig) -> PipelineResult:
    """Sample, then run farthest-point traversal on the sample on one machine."""
    _check_k(ds, k)
    job = Job(cluster)
    outcome, _ = mr_iterative_sample(ds, SampleConfig(k, epsilon, cluster.seed), cluster, job)
    C = outcome.sample

    def solve(seed):
        if C.size <= k:
            return C
        sol = gonzalez_kcenter(ds.subset(C), k, seed)
        return C[list(sol.centers)]

    centers = job.single(solve, C.size + _distance_words(ds, C.size, C.size), "kcenter:cluster", k)
    return PipelineResult(_scan(job, ds, centers, "kcenter"), job.trace, int(C.size))


def _weighted_solve(sub: Dataset, weights: np.ndarray, k: int, algorithm: str, seed: int,
                    local_search: LocalSearchConfig | None, lloyd: LloydConfig | None):
    """Cluster a weighted point set given as its own dataset; returns local center indices."""
    m = sub.n
    if m <= k:
        return np.arange(m), None
    if algorithm == "localsearch":
        base = local_search or LocalSearchConfig()
        cfg = LocalSearchConfig(base.improvement_factor, base.max_iterations, seed)
        sol = local_search_kmedian(WeightedPointSet(np.arange(m), weights), sub, k, cfg)
        return np.asarray(sol.centers), None
    if algorithm == "lloyd":
        base = lloyd or LloydConfig()
        cfg = LloydConfig(base.max_iterations, base.convergence_tol, seed)
        run = lloyd_run(sub, k, cfg, weights=weights)
        return snap(sub, run.centers), run
    raise UsageError(f"unknown subroutine {algorithm!r}; expected one of {SUBROUTINES}")


def sample_weights(ds: Dataset, C: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Per member of C, how many points of ``ids`` outside C have it as nearest member."""
    outside = ids[~np.isin(ids, C)]
    counts = np.zeros(C.size, dtype=np.int64)
    if outside.size:
        _, near = ds.nearest(outside, C)
        counts += np.bincount(np.searchsorted(C, near), minlength=C.size)
    return counts


def mapreduce_kmedian(ds: Dataset, k: int, epsilon: float, cluster: ClusterConfig,
                      algorithm: str = "localsearch",
                      local_search: LocalSearchConfig | None = None,
                      lloyd: LloydConfig | None = None) -> PipelineResult:
    """Sample, weight each sampled point by the points it represents, cluster the weighted sample."""
    _check_k(ds, k)
    if algorithm not in SUBROUTINES:
        raise UsageError(f"unknown subroutine {algorithm!r}; expected one of {SUBROUTINES}")
    job = Job(cluster)
    n = ds.n
    outcome, _ = mr_iterative_sample(ds, SampleConfig(k, epsilon, cluster.seed), cluster, job)
    C = outcome.sample

    groups = cluster.fold(math.ceil(n ** (1 - epsilon)))
    pieces = partition_arbitrary(np.arange(n), groups, key_seed(cluster.seed, len(job.trace), 0))

    def count(key, values, seed):
        for ids in values:
            yield KeyValue(0, sample_weights(ds, C, ids), C.size)

    partial = job.round(
        [KeyValue(i, p, p.size + C.size + _distance_words(ds, p.size, C.size))
         for i, p in enumerate(pieces)],
        count, label="kmedian:weights")
    weights = np.sum([kv.value for kv in partial], axis=0) + 1
    box = {}

    def solve(seed):
        local, run = _weighted_solve(ds.subset(C), weights, k, algorithm, seed, local_search, lloyd)
        box["lloyd"] = run
        return C[local]

    centers = job.single(solve, 2 * C.size + _distance_words(ds, C.size, C.size), "kmedian:cluster", k)
    return PipelineResult(_scan(job, ds, centers, "kmedian"), job.trace, int(C.size),
                          WeightedPointSet(C, weights), box["lloyd"])


def default_parts(n: int, k: int) -> int:
    return max(1, math.ceil(math.sqrt(n / k)))


def mapreduce_divide_kmedian(ds: Dataset, k: int, ell: int | None, cluster: ClusterConfig,
                             algorithm: str = "localsearch",
                             local_search: LocalSearchConfig | None = None,
                             lloyd: LloydConfig | None = None) -> PipelineResult:
    """Cluster ``ell`` disjoint parts independently, then cluster the weighted union of their centers."""
    _check_k(ds, k)
    if algorithm not in SUBROUTINES:
        raise UsageError(f"unknown subroutine {algorithm!r}; expected one of {SUBROUTINES}")
    n = ds.n
    ell = default_parts(n, k) if ell is None else int(ell)
    if ell < 1:
        raise UsageError("ell must be positive")
    job = Job(cluster)
    parts = [np.sort(p) for p in partition_arbitrary(np.arange(n), ell, key_seed(cluster.seed, 0, ell))]
    if min(p.size for p in parts) < k:
        raise UsageError(f"a part of size {min(p.size for p in parts)} cannot hold k={k} centers")

    def solve_part(key, values, seed):
        for index, ids in values:
            sub = ds.subset(ids)
            local, _ = _weighted_solve(sub, np.ones(ids.size, dtype=np.int64), k, algorithm,
                                       key_seed(cluster.seed, 0, index), local_search, lloyd)
            centers = ids[local]
            w = sample_weights(ds, centers, ids) + 1
            yield KeyValue(0, (centers, w), 2 * centers.size)

    inputs = [KeyValue(i % cluster.machines, (i, p), p.size + _distance_words(ds, p.size, p.size))
              for i, p in enumerate(parts)]
    found = job.round(inputs, solve_part, label="divide:parts")
    C = np.concatenate([kv.value[0] for kv in found])
    W = np.concatenate([kv.value[1] for kv in found])
    order = np.argsort(C)
    C, W = C[order], W[order]
    box = {}

    def solve(seed):
        local, run = _weighted_solve(ds.subset(C), W, k, algorithm, seed, local_search, lloyd)
        box["lloyd"] = run
        return C[local]

    centers = job.single(solve, 2 * C.size + _distance_words(ds, C.size, C.size), "divide:merge", k)
    return PipelineResult(_scan(job, ds, centers, "kmedian"), job.trace, int(C.size),
                          WeightedPointSet(C, W), box["lloyd"])


def parallel_lloyd(ds: Dataset, k: int, cluster: ClusterConfig,
                   cfg: LloydConfig = LloydConfig()) -> PipelineResult:
    """Lloyd's method with points resident on machines; one round per iteration.

    Each machine assigns its points and emits exact per-center partial sums and
    weights; merging those before dividing makes the centers identical to the
    sequential run for any machine count.
    """
    if ds.coords is None:
        raise UsageError("Lloyd's method needs euclidean coordinates")
    _check_k(ds, k)
    job = Job(cluster)
    n, d = ds.n, ds.dim
    pieces = [np.sort(p) for p in
              partition_arbitrary(np.arange(n), cluster.fold(n), key_seed(cluster.seed, 0, 0))]
    exp_range = exponent_range(ds.coords)
    steps = [LloydStep(ds.coords[p], np.ones(p.size), k, exp_range) for p in pieces]
    start = ds.coords[initial_centers(n, k, cfg.seed)].copy()

    def step_parts(centers):
        def reduce(key, values, seed):
            yield KeyValue(0, steps[key](centers), k * (d + 1))

        out = job.round([KeyValue(i, None, p.size * d + k * d) for i, p in enumerate(pieces)],
                        reduce, label="lloyd:step")
        return [kv.value for kv in out]

    run = lloyd_iterate(step_parts, start, cfg)

    def nearest_input(key, values, seed):
        p = pieces[key]
        dist, j = nearest_points(run.centers, ds.coords[p])
        charge(k * p.size)
        yield KeyValue(0, (dist, p[j]), 2 * k)

    found = job.round([KeyValue(i, None, p.size * d + k * d) for i, p in enumerate(pieces)],
                      nearest_input, label="lloyd:snap")
    dist = np.stack([kv.value[0] for kv in found])
    ids = np.stack([kv.value[1] for kv in found])
    best = np.lexsort((ids, dist), axis=0)[0]
    centers = ids[best, np.arange(k)]
    return PipelineResult(_scan(job, ds, centers, "kmedian"), job.trace, None, None, run)


def sequential_baseline(ds: Dataset, k: int, cluster: ClusterConfig, algorithm: str,
                        local_search: LocalSearchConfig | None = None) -> PipelineResult:
    """Run a sequential algorithm as a single one-machine round so it gets a trace too."""
    _check_k(ds, k)
    job = Job(ClusterConfig(1, cluster.memory_cap_words, cluster.seed, cluster.deterministic_time))
    words = ds.n + _distance_words(ds, ds.n, ds.n)
    if algorithm == "gonzalez":
        sol = job.single(lambda seed: gonzalez_kcenter(ds, k, seed), words, "gonzalez", k)
    elif algorithm == "localsearch":
        base = local_search or LocalSearchConfig()

        def run(seed):
            cfg = LocalSearchConfig(base.improvement_factor, base.max_iterations, seed)
            return local_search_kmedian(WeightedPointSet.unit(np.arange(ds.n)), ds, k, cfg)

        sol = job.single(run, words, "localsearch", k)
        sol = make_solution(ds, sol.centers, "kmedian")
    else:
        raise UsageError(f"unknown sequential algorithm {algorithm!r}")
    return PipelineResult(sol, job.trace)

"""Adaptive sampling: pick a small set C that represents every point of V well.

Each round adds a random batch of points to the sample S, probes R with a
second random batch H, and uses the ``ceil(8 log2 n)``-th farthest probe as a
pivot: every remaining point closer to S than the pivot is considered covered
and leaves R. The loop stops once R is small enough, and C = S + R.

Coin flips are a pure function of (seed, iteration, stream, point id), so the
sequential and the MapReduce versions draw exactly the same sample no matter how
the points are spread over machines.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SamplingStalled, UsageError
from .metric import Dataset
from .runtime import ClusterConfig, Job, JobTrace, KeyValue, key_seed, partition_arbitrary

LOG_BASE = 2

_STREAM_S, _STREAM_H, _STREAM_H_RETRY = 0, 1, 2
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _splitmix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def point_coins(seed: int, iteration: int, stream: int, ids) -> np.ndarray:
    """Uniform [0, 1) draws keyed by point id; independent of call grouping."""
    ids = np.asarray(ids, dtype=np.int64).astype(np.uint64)
    h = _splitmix(np.uint64(seed & (2**64 - 1)))
    h = _splitmix(h ^ np.uint64(iteration))
    h = _splitmix(h ^ np.uint64(stream))
    with np.errstate(over="ignore"):
        z = _splitmix(h + ids * _GOLD)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def log_n(n: int) -> float:
    return math.log2(n) if n > 1 else 0.0


def loop_guard(n: int, k: int, epsilon: float) -> float:
    """|R| above this keeps the loop going."""
    return 4.0 / epsilon * k * n**epsilon * log_n(n)


def sample_probability(n: int, k: int, epsilon: float, r: int) -> float:
    return min(1.0, 9.0 * k * n**epsilon * log_n(n) / r)


def probe_probability(n: int, epsilon: float, r: int) -> float:
    return min(1.0, 4.0 * n**epsilon * log_n(n) / r)


def pivot_rank(n: int) -> int:
    return max(1, math.ceil(8 * log_n(n)))


@dataclass(frozen=True)
class SampleConfig:
    k: int
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("k must be positive")
        if not 0 < self.epsilon < 0.5:
            raise UsageError("epsilon must lie in (0, 0.5)")

    @property
    def max_iterations(self) -> int:
        return 10 * math.ceil(1 / self.epsilon)


@dataclass
class SampleOutcome:
    sample: np.ndarray
    iterations: int
    r_sizes: list[int] = field(default_factory=list)
    s_sizes: list[int] = field(default_factory=list)
    pivot_distances: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "r_size", "s_size"])
        for i, (r, s) in enumerate(zip(self.r_sizes, self.s_sizes)):
            w.writerow([i, r, s])
        return buf.getvalue()


def _ranked(H, dH, rank: int):
    order = np.lexsort((H, -dH))
    pos = order[min(rank, H.size) - 1]
    return int(H[pos]), float(dH[pos])


def select_pivot(ds: Dataset, H, S, n: int) -> int:
    """The ``ceil(8 log2 n)``-th farthest member of H from S (clamped to |H|)."""
    H = np.asarray(sorted(H) if isinstance(H, (set, frozenset)) else H, dtype=np.int64)
    S = np.asarray(sorted(S) if isinstance(S, (set, frozenset)) else S, dtype=np.int64)
    if H.size == 0 or S.size == 0:
        raise UsageError("select_pivot needs non-empty H and S")
    dH, _ = ds.nearest(H, S)
    _, d = _ranked(H, dH, pivot_rank(n))
    # probes tied at the pivot distance are interchangeable; report the smallest id
    return int(H[dH == d].min())


def _draw(cfg: SampleConfig, n: int, iteration: int, r_total: int, ids):
    """This iteration's S additions, probes, and fallback probes among ``ids``."""
    p_s = sample_probability(n, cfg.k, cfg.epsilon, r_total)
    p_h = probe_probability(n, cfg.epsilon, r_total)
    s_new = ids[point_coins(cfg.seed, iteration, _STREAM_S, ids) < p_s]
    probes = ids[point_coins(cfg.seed, iteration, _STREAM_H, ids) < p_h]
    retry = ids[point_coins(cfg.seed, iteration, _STREAM_H_RETRY, ids) < min(1.0, 2 * p_h)]
    return s_new, probes, retry


def _check(ds: Dataset, cfg: SampleConfig):
    if cfg.k > ds.n:
        raise UsageError(f"k={cfg.k} exceeds n={ds.n}")


def iterative_sample(ds: Dataset, cfg: SampleConfig) -> SampleOutcome:
    _check(ds, cfg)
    n = ds.n
    guard = loop_guard(n, cfg.k, cfg.epsilon)
    rank = pivot_rank(n)
    R = np.arange(n, dtype=np.int64)
    S = np.empty(0, dtype=np.int64)
    out = SampleOutcome(R, 0, [n], [0])
    while R.size > guard:
        out.iterations += 1
        if out.iterations > cfg.max_iterations:
            raise SamplingStalled(f"R still has {R.size} points after {cfg.max_iterations} iterations")
        s_new, H, retry = _draw(cfg, n, out.iterations, R.size, R)
        if H.size == 0:
            H = retry
        S = np.union1d(S, s_new)
        threshold = -np.inf
        keep = np.ones(R.size, dtype=bool)
        if S.size:
            dR, _ = ds.nearest(R, S)
            if H.size:
                threshold = _ranked(H, dR[np.searchsorted(R, H)], rank)[1]
                keep = dR >= threshold
        keep &= ~np.isin(R, S, assume_unique=True)
        R = R[keep]
        out.r_sizes.append(int(R.size))
        out.s_sizes.append(int(S.size))
        out.pivot_distances.append(threshold)
    out.sample = np.union1d(S, R)
    return out


def _words(ids) -> int:
    return max(1, len(ids))


def mr_iterative_sample(ds: Dataset, cfg: SampleConfig, cluster: ClusterConfig,
                        job: Job | None = None) -> tuple[SampleOutcome, JobTrace]:
    """The same loop as ``iterative_sample``, three simulated rounds per iteration.

    Rounds: (1) R split into ceil(|R|/n^eps) groups that flip the coins,
    (2) one machine gets H, S and their distances and picks the pivot,
    (3) R split into ceil(n^(1-eps)) groups, each filtering its points against S.
    Logical groups beyond the machine count are folded onto the machines.
    """
    _check(ds, cfg)
    job = job if job is not None else Job(cluster)
    n = ds.n
    guard = loop_guard(n, cfg.k, cfg.epsilon)
    rank = pivot_rank(n)
    R = np.arange(n, dtype=np.int64)
    S = np.empty(0, dtype=np.int64)
    out = SampleOutcome(R, 0, [n], [0])
    while R.size > guard:
        out.iterations += 1
        it = out.iterations
        if it > cfg.max_iterations:
            raise SamplingStalled(f"R still has {R.size} points after {cfg.max_iterations} iterations")
        r_total = R.size

        groups = cluster.fold(math.ceil(r_total / n**cfg.epsilon))
        pieces = partition_arbitrary(R, groups, key_seed(cfg.seed, it, 1))

        def flip(key, values, seed, it=it, r_total=r_total):
            ids = np.concatenate(values)
            s_new, probes, retry = _draw(cfg, n, it, r_total, ids)
            yield KeyValue(0, ("S", s_new), _words(s_new))
            yield KeyValue(0, ("H", probes), _words(probes))
            yield KeyValue(0, ("retry", retry), _words(retry))

        flipped = job.round([KeyValue(i, p, _words(p)) for i, p in enumerate(pieces)],
                            flip, label=f"sample:{it}:flip")
        parts = {"S": [], "H": [], "retry": []}
        for kv in flipped:
            tag, ids = kv.value
            parts[tag].append(ids)
        S = np.union1d(S, np.concatenate(parts["S"]))
        H = np.sort(np.concatenate(parts["H"]))
        if H.size == 0:
            H = np.sort(np.concatenate(parts["retry"]))

        threshold = -np.inf
        if S.size and H.size:
            def select(key, values, seed):
                probes, sample = values[0]
                dH, _ = ds.nearest(probes, sample)
                yield KeyValue(0, _ranked(probes, dH, rank)[1], 1)

            picked = job.round(
                [KeyValue(0, (H, S), H.size + S.size + H.size * S.size)],
                select, label=f"sample:{it}:select")
            threshold = picked[0].value

        groups = cluster.fold(math.ceil(n ** (1 - cfg.epsilon)))
        pieces = partition_arbitrary(R, groups, key_seed(cfg.seed, it, 2))

        def prune(key, values, seed, S=S, threshold=threshold):
            for ids in values:
                keep = np.ones(ids.size, dtype=bool)
                if S.size:
                    d, _ = ds.nearest(ids, S)
                    keep = d >= threshold
                keep &= ~np.isin(ids, S)
                kept = ids[keep]
                yield KeyValue(0, kept, _words(kept))

        per_piece = S.size + 1
        survivors = job.round(
            [KeyValue(i, p, p.size + per_piece + p.size * S.size) for i, p in enumerate(pieces)],
            prune, label=f"sample:{it}:prune")
        R = np.sort(np.concatenate([kv.value for kv in survivors]))
        out.r_sizes.append(int(R.size))
        out.s_sizes.append(int(S.size))
        out.pivot_distances.append(threshold)
    out.sample = np.union1d(S, R)
    return out, job.trace

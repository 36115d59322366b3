"""Point sets, distances and clustering objectives.

Two kinds of dataset exist: euclidean (a coordinate array) and explicit (a full
n x n distance matrix). Everything downstream talks to a ``Dataset`` through
``block``/``nearest`` so that algorithms do not care which kind they are given.

Ties are always broken towards the smallest point id.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import UsageError

KINDS = ("kcenter", "kmedian", "weighted_kmedian")

_CHUNK = 1 << 22


@dataclass
class WorkMeter:
    """Per-machine tally filled in while a reducer runs."""

    distance_evals: int = 0
    scratch_words: int = 0


_meter: ContextVar[WorkMeter | None] = ContextVar("mrclust_meter", default=None)


@contextmanager
def metering():
    meter = WorkMeter()
    token = _meter.set(meter)
    try:
        yield meter
    finally:
        _meter.reset(token)


def charge(evals: int) -> None:
    meter = _meter.get()
    if meter is not None:
        meter.distance_evals += int(evals)


def hold(words: int) -> None:
    """Record scratch memory a reducer keeps beyond its input and output."""
    meter = _meter.get()
    if meter is not None:
        meter.scratch_words = max(meter.scratch_words, int(words))


class Dataset:
    """Immutable point set V with its metric."""

    def __init__(self, coords=None, matrix=None):
        if (coords is None) == (matrix is None):
            raise UsageError("exactly one of coords or matrix is required")
        self.coords = None if coords is None else _frozen(coords)
        self.matrix = None if matrix is None else _frozen(matrix)

    @classmethod
    def euclidean(cls, coords) -> "Dataset":
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise UsageError("coordinates must be a non-empty n x d array")
        if not np.all(np.isfinite(coords)):
            raise UsageError("coordinates must be finite")
        return cls(coords=coords)

    @classmethod
    def explicit(cls, matrix, validate: bool = True, seed: int = 0) -> "Dataset":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise UsageError("distance matrix must be square and non-empty")
        if validate:
            check_metric(matrix, seed=seed)
        return cls(matrix=matrix)

    @property
    def kind(self) -> str:
        return "euclidean" if self.coords is not None else "explicit"

    @property
    def n(self) -> int:
        return len(self.coords) if self.coords is not None else len(self.matrix)

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else self.coords.shape[1]

    def __repr__(self):
        extra = f", dim={self.dim}" if self.coords is not None else ""
        return f"Dataset({self.kind}, n={self.n}{extra})"

    def ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise UsageError(f"point id out of range [0, {self.n})")
        return ids

    def distance(self, a: int, b: int) -> float:
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise UsageError(f"point id out of range [0, {self.n})")
        charge(1)
        if self.coords is not None:
            return float(_kernels.pair_distance(self.coords, int(a), int(b)))
        return float(self.matrix[a, b])

    def block(self, rows, cols) -> np.ndarray:
        """Distance matrix between two id lists."""
        rows, cols = self.ids(rows), self.ids(cols)
        charge(rows.size * cols.size)
        if self.coords is not None:
            return _kernels.rows_to_points(self.coords, rows, cols)
        return self.matrix[np.ix_(rows, cols)]

    def nearest(self, points, centers):
        """Distance from each point to ``centers`` and the id achieving it.

        ``centers`` may arrive in any order; ties go to the smallest id.
        """
        points = self.ids(points)
        centers = np.unique(self.ids(centers))
        if centers.size == 0:
            raise UsageError("center set is empty")
        charge(points.size * centers.size)
        if self.coords is not None:
            d, j = nearest_points(self.coords[points], self.coords[centers])
            return d, centers[j]
        d = np.empty(points.size)
        j = np.empty(points.size, dtype=np.int64)
        step = max(1, _CHUNK // centers.size)
        for lo in range(0, points.size, step):
            sub = self.matrix[np.ix_(points[lo:lo + step], centers)]
            arg = np.argmin(sub, axis=1)
            j[lo:lo + step] = arg
            d[lo:lo + step] = sub[np.arange(sub.shape[0]), arg]
        return d, centers[j]

    def subset(self, ids) -> "Dataset":
        ids = self.ids(ids)
        if self.coords is not None:
            return Dataset(coords=self.coords[ids])
        return Dataset(matrix=self.matrix[np.ix_(ids, ids)])


def nearest_points(P, C):
    """Nearest row of ``C`` for every row of ``P`` (raw coordinates)."""
    return _kernels.nearest_cols(np.ascontiguousarray(P), np.ascontiguousarray(C.T))


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def check_metric(matrix, seed: int = 0, exhaustive_limit: int = 1000, samples: int = 100_000):
    """Raise ``UsageError`` unless ``matrix`` is a metric.

    The triangle inequality is checked on every triple up to ``exhaustive_limit``
    points and on ``samples`` random triples above that.
    """
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise UsageError("distances must be finite and non-negative")
    if np.any(np.diag(m) != 0):
        raise UsageError("distance matrix must have a zero diagonal")
    if not np.array_equal(m, m.T):
        raise UsageError("distance matrix must be symmetric")
    tol = 1e-9 * max(float(m.max()), 1.0)
    if n <= exhaustive_limit:
        for b in range(n):
            if np.any(m[:, b, None] + m[None, b, :] < m - tol):
                raise UsageError(f"triangle inequality fails through point {b}")
    else:
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, samples))
        if np.any(m[a, b] + m[b, c] < m[a, c] - tol):
            raise UsageError("triangle inequality fails on a sampled triple")


@dataclass(frozen=True)
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weights).reshape(-1)
        if pts.shape != w.shape:
            raise UsageError("points and weights differ in length")
        if np.unique(pts).size != pts.size:
            raise UsageError("weighted points must be distinct")
        if w.size and (np.any(w < 1) or np.any(w != np.round(w))):
            raise UsageError("weights must be positive integers")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w.astype(np.int64))

    @classmethod
    def unit(cls, points) -> "WeightedPointSet":
        points = np.asarray(points, dtype=np.int64)
        return cls(points, np.ones(points.size, dtype=np.int64))

    def __len__(self):
        return self.points.size

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())


@dataclass(frozen=True)
class ClusteringSolution:
    centers: tuple
    assignment: np.ndarray = field(repr=False)
    objective: float
    objective_kind: str

    def to_csv(self) -> str:
        ids = " ".join(str(c) for c in self.centers)
        return f"center_ids;objective\n{ids};{self.objective!r}\n"


def distance(ds: Dataset, a: int, b: int) -> float:
    return ds.distance(a, b)


def dist_to_set(ds: Dataset, x: int, S) -> tuple[float, int]:
    S = np.asarray(list(S) if isinstance(S, (set, frozenset)) else S, dtype=np.int64)
    if S.size == 0:
        raise UsageError("dist_to_set needs a non-empty set")
    d, c = ds.nearest([x], S)
    return float(d[0]), int(c[0])


def _reduce(dists, kind, weights=None) -> float:
    if kind == "kcenter":
        return float(dists.max()) if dists.size else 0.0
    if kind == "kmedian":
        return float(np.sum(dists))
    return float(np.sum(weights.astype(np.float64) * dists))


def _scope(ds, kind, weights):
    if kind not in KINDS:
        raise UsageError(f"unknown objective kind {kind!r}")
    if weights is not None and kind != "weighted_kmedian":
        raise UsageError("weights only make sense for weighted_kmedian")
    if kind == "weighted_kmedian":
        if weights is None:
            raise UsageError("weighted_kmedian needs a WeightedPointSet")
        return weights.points, weights.weights
    return np.arange(ds.n), None


def evaluate(ds: Dataset, centers, kind: str, weights: WeightedPointSet | None = None) -> float:
    points, w = _scope(ds, kind, weights)
    dists, _ = ds.nearest(points, _as_ids(centers))
    return _reduce(dists, kind, w)


def make_solution(ds: Dataset, centers, kind: str,
                  weights: WeightedPointSet | None = None) -> ClusteringSolution:
    """Assign every point in scope to its nearest center and score the result."""
    points, w = _scope(ds, kind, weights)
    centers = np.unique(_as_ids(centers))
    dists, assigned = ds.nearest(points, centers)
    return ClusteringSolution(
        centers=tuple(int(c) for c in centers),
        assignment=assigned,
        objective=_reduce(dists, kind, w),
        objective_kind=kind,
    )


def _as_ids(centers) -> np.ndarray:
    if isinstance(centers, (set, frozenset)):
        centers = sorted(centers)
    centers = np.asarray(centers, dtype=np.int64).reshape(-1)
    if centers.size == 0:
        raise UsageError("center set is empty")
    return centers


def load_dataset(path, validate: bool = True) -> Dataset:
    """Read either file format; a two-number header means euclidean."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            body = np.loadtxt(fh, dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    try:
        dims = [int(h) for h in header]
    except ValueError:
        raise UsageError(f"{path}: line 1: header must be 'n d' or 'n'") from None
    if len(dims) == 2:
        n, d = dims
        if body.shape != (n, d):
            raise UsageError(f"{path}: expected {n} rows of {d} values, got {body.shape}")
        return Dataset.euclidean(body)
    if len(dims) == 1:
        (n,) = dims
        if body.shape != (n, n):
            raise UsageError(f"{path}: expected a {n}x{n} matrix, got {body.shape}")
        return Dataset.explicit(body, validate=validate)
    raise UsageError(f"{path}: line 1: header must be 'n d' or 'n'")


def save_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    if ds.coords is not None:
        header = f"{ds.n} {ds.dim}"
        body = ds.coords
    else:
        header = f"{ds.n}"
        body = ds.matrix
    np.savetxt(path, body, fmt="%.17g", header=header, comments="", encoding="utf-8")

"""Benchmark harness: run algorithms over seeded trials and tabulate cost and simulated time."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .clusterers import LloydConfig
from .datagen import DataGenConfig, generate
from .errors import UsageError
from .metric import Dataset, load_dataset
from .pipelines import (PipelineResult, mapreduce_divide_kmedian, mapreduce_kcenter,
                        mapreduce_kmedian, parallel_lloyd, sequential_baseline)
from .runtime import ClusterConfig, key_seed

log = logging.getLogger(__name__)

ALGORITHMS = ("parallel-lloyd", "divide-lloyd", "divide-localsearch", "sampling-lloyd",
              "sampling-localsearch", "localsearch", "gonzalez", "mr-kcenter")
KCENTER_ALGORITHMS = ("gonzalez", "mr-kcenter")
BASELINE = "parallel-lloyd"


class SuiteError(UsageError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str = "sampling-localsearch"
    n: int = 10_000
    k: int = 25
    epsilon: float = 0.1
    sigma: float = 0.1
    zipf_alpha: float = 0.0
    dim: int = 3
    machines: int = 100
    trials: int = 3
    seed: int = 0
    dataset: str | None = None
    deterministic_time: bool = False
    lloyd_max_iterations: int = 100
    lloyd_tol: float = 1e-9

    def __post_init__(self):
        if self.lloyd_max_iterations < 1 or self.lloyd_tol < 0:
            raise UsageError("Lloyd needs max iterations >= 1 and a tolerance >= 0")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")


@dataclass(frozen=True)
class ExperimentRow:
    algorithm: str
    n: int
    k: int
    alpha: float
    sigma: float
    epsilon: float
    mean_cost: float
    mean_relative_cost: float
    mean_sim_time_seconds: float
    rounds: int
    peak_machine_words: int
    sample_size: float


COLUMNS = [f.name for f in fields(ExperimentRow)]


@lru_cache(maxsize=4)
def _generated(n, k, alpha, sigma, dim, seed) -> Dataset:
    return generate(DataGenConfig(n=n, k_true=k, zipf_alpha=alpha, sigma=sigma, dim=dim, seed=seed))


@lru_cache(maxsize=2)
def _loaded(path) -> Dataset:
    return load_dataset(path)


def trial_dataset(spec: ExperimentSpec, trial: int) -> Dataset:
    if spec.dataset:
        ds = _loaded(str(spec.dataset))
        if spec.k > ds.n:
            raise UsageError(f"k={spec.k} exceeds the {ds.n} points in {spec.dataset}")
        return ds
    return _generated(spec.n, spec.k, spec.zipf_alpha, spec.sigma, spec.dim, spec.seed + trial)


def trial_seed(spec: ExperimentSpec, trial: int) -> int:
    return key_seed(spec.seed, trial, 0) & (2**63 - 1)


def run_algorithm(algorithm: str, ds: Dataset, k: int, epsilon: float,
                  cluster: ClusterConfig, lloyd: LloydConfig | None = None) -> PipelineResult:
    base = lloyd or LloydConfig()
    lloyd = LloydConfig(base.max_iterations, base.convergence_tol, cluster.seed)
    if algorithm == "parallel-lloyd":
        return parallel_lloyd(ds, k, cluster, lloyd)
    if algorithm == "divide-lloyd":
        return mapreduce_divide_kmedian(ds, k, None, cluster, "lloyd", lloyd=lloyd)
    if algorithm == "divide-localsearch":
        return mapreduce_divide_kmedian(ds, k, None, cluster, "localsearch")
    if algorithm == "sampling-lloyd":
        return mapreduce_kmedian(ds, k, epsilon, cluster, "lloyd", lloyd=lloyd)
    if algorithm == "sampling-localsearch":
        return mapreduce_kmedian(ds, k, epsilon, cluster, "localsearch")
    if algorithm == "mr-kcenter":
        return mapreduce_kcenter(ds, k, epsilon, cluster)
    if algorithm in ("localsearch", "gonzalez"):
        return sequential_baseline(ds, k, cluster, algorithm)
    raise UsageError(f"unknown algorithm {algorithm!r}")


_baseline_cache: dict = {}


def _run_trial(spec: ExperimentSpec, algorithm: str, trial: int) -> PipelineResult:
    ds = trial_dataset(spec, trial)
    cluster = ClusterConfig(machines=spec.machines, seed=trial_seed(spec, trial),
                            deterministic_time=spec.deterministic_time)
    lloyd = LloydConfig(spec.lloyd_max_iterations, spec.lloyd_tol)
    return run_algorithm(algorithm, ds, spec.k, spec.epsilon, cluster, lloyd)


def _baseline_key(spec: ExperimentSpec, trial: int):
    return (spec.dataset, spec.n, spec.k, spec.zipf_alpha, spec.sigma, spec.dim, spec.seed,
            spec.machines, spec.lloyd_max_iterations, spec.lloyd_tol, trial)


def _baseline_cost(spec: ExperimentSpec, trial: int) -> float:
    """Parallel-Lloyd cost on the same trial dataset; memoised across experiments."""
    key = _baseline_key(spec, trial)
    if key not in _baseline_cache:
        _baseline_cache[key] = _run_trial(spec, BASELINE, trial).solution.objective
    return _baseline_cache[key]


def run_experiment(spec: ExperimentSpec) -> ExperimentRow:
    """Average ``spec.trials`` seeded runs; trial t uses dataset seed ``seed + t``."""
    costs, ratios, times, rounds, peaks, samples = [], [], [], [], [], []
    n = spec.n
    for trial in range(spec.trials):
        log.info("%s n=%d trial %d", spec.algorithm, spec.n, trial)
        res = _run_trial(spec, spec.algorithm, trial)
        n = trial_dataset(spec, trial).n
        cost = res.solution.objective
        costs.append(cost)
        if spec.algorithm == BASELINE:
            _baseline_cache[_baseline_key(spec, trial)] = cost
            ratios.append(1.0)
        elif spec.algorithm not in KCENTER_ALGORITHMS:
            base = _baseline_cost(spec, trial)
            ratios.append(cost / base if base > 0 else math.nan)
        times.append(res.trace.total_time)
        rounds.append(len(res.trace))
        peaks.append(res.trace.peak_memory)
        if res.sample_size is not None:
            samples.append(res.sample_size)
    return ExperimentRow(
        algorithm=spec.algorithm, n=n, k=spec.k, alpha=spec.zipf_alpha, sigma=spec.sigma,
        epsilon=spec.epsilon,
        mean_cost=float(np.mean(costs)),
        mean_relative_cost=float(np.mean(ratios)) if ratios else math.nan,
        mean_sim_time_seconds=float(np.mean(times)),
        rounds=max(rounds),
        peak_machine_words=max(peaks),
        sample_size=float(np.mean(samples)) if samples else math.nan,
    )


_FIELD_TYPES = {"algorithm": str, "n": int, "k": int, "epsilon": float, "sigma": float,
                "zipf_alpha": float, "dim": int, "machines": int, "trials": int, "seed": int,
                "dataset": str, "deterministic_time": lambda v: v.lower() in ("1", "true", "yes"),
                "lloyd_max_iterations": int, "lloyd_tol": float}
_ALIASES = {"alpha": "zipf_alpha", "zipf-alpha": "zipf_alpha", "deterministic-time": "deterministic_time",
            "lloyd-max-iterations": "lloyd_max_iterations", "lloyd-tol": "lloyd_tol"}


def parse_suite(text: str, defaults: ExperimentSpec | None = None) -> list[ExperimentSpec]:
    """One experiment per line as ``key=value`` pairs; ``#`` starts a comment."""
    defaults = defaults or ExperimentSpec()
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        values = {}
        for token in line.split():
            key, sep, value = token.partition("=")
            key = _ALIASES.get(key, key)
            if not sep or key not in _FIELD_TYPES:
                raise SuiteError(f"line {lineno}: cannot parse {token!r}")
            try:
                values[key] = _FIELD_TYPES[key](value)
            except ValueError:
                raise SuiteError(f"line {lineno}: bad value for {key}: {value!r}") from None
        try:
            specs.append(replace(defaults, **values))
        except UsageError as exc:
            raise SuiteError(f"line {lineno}: {exc}") from None
    return specs


def read_suite(path, defaults: ExperimentSpec | None = None) -> list[ExperimentSpec]:
    return parse_suite(Path(path).read_text(encoding="utf-8"), defaults)


def format_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_cell(v) for v in asdict(row).values()])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def run_suite(specs) -> str:
    return format_rows(run_experiment(s) for s in specs)


def bundled_suite(name: str) -> Path:
    path = Path(__file__).parent / "suites" / name
    if not path.exists():
        raise UsageError(f"no bundled suite named {name!r}")
    return path

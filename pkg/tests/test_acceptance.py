"""One test per acceptance criterion; each prints a PASS/FAIL line (also echoed in the run summary)."""

import csv
import io
import math
from functools import lru_cache

import numpy as np

from mrclust import (ClusterConfig, Dataset, DataGenConfig, ExperimentSpec, LloydConfig,
                     MemoryViolation, SampleConfig, brute_force_opt, generate,
                     mapreduce_kcenter, mapreduce_kmedian, mr_iterative_sample,
                     parallel_lloyd, partition_arbitrary, run_experiment)
from mrclust.bench import format_rows, run_algorithm
from mrclust.clusterers import lloyd_kmedian, lloyd_run
from mrclust.cli import main as cli_main
from mrclust.sampling import log_n

from conftest import random_instance, report


# 1. approximation bounds against the exhaustive optimum

def small_instances(count=200):
    for seed in range(count):
        rng = np.random.default_rng(10_000 + seed)
        k = (2, 3, 4)[seed % 3]
        # C(n, 4) must stay under the exhaustive-search limit of 1e7 subsets
        n = int(rng.integers(50, 126 if k == 4 else 201))
        yield seed, random_instance(seed, n), k


def test_approximation_bounds():
    worst_center = worst_median = 0.0
    ratios = []
    violations = 0
    kinds = set()
    for seed, ds, k in small_instances():
        kinds.add(ds.kind)
        cluster = ClusterConfig(machines=10, seed=seed)
        center = mapreduce_kcenter(ds, k, 0.1, cluster).solution.objective
        median = mapreduce_kmedian(ds, k, 0.1, cluster).solution.objective
        opt_c = brute_force_opt(ds, k, "kcenter").objective
        opt_m = brute_force_opt(ds, k, "kmedian").objective
        worst_center = max(worst_center, center / opt_c)
        worst_median = max(worst_median, median / opt_m)
        ratios.append(median / opt_m)
        violations += (center > 10 * opt_c) + (median > 53 * opt_m)
    median_ratio = float(np.median(ratios))
    ok = violations == 0 and median_ratio <= 1.5 and kinds == {"euclidean", "explicit"}
    report(1, ok, f"200 instances, {violations} violations; worst k-center {worst_center:.3f}xOPT "
                  f"(bound 10), worst k-median {worst_median:.3f}xOPT (bound 53), "
                  f"median k-median ratio {median_ratio:.3f} (guard 1.5)")
    assert ok


# 2. the partition inequality for k-median

def test_partition_inequality():
    violations = 0
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(20_000 + seed)
        ell = (2, 4)[seed % 2]
        k = int(rng.integers(1, 4))
        n = int(rng.integers(4 * ell, 41))
        ds = random_instance(seed, n)
        full = brute_force_opt(ds, k, "kmedian").objective
        parts = partition_arbitrary(np.arange(n), ell, seed)
        total = sum(brute_force_opt(ds.subset(p), k, "kmedian").objective for p in parts)
        worst = max(worst, total / full if full else 0.0)
        violations += total > 2 * full + 1e-9
    ok = violations == 0
    report(2, ok, f"50 instances, {violations} violations; worst sum-of-parts/OPT {worst:.3f} (bound 2)")
    assert ok


# 3. sampling iterations, sample size and per-machine memory at n = 1e5

def test_sampling_bounds():
    n, k, eps = 100_000, 25, 0.1
    L = log_n(n)
    size_bound = 16 / eps * k * n**eps * L
    cap = int(64 / eps * k * n ** (2 * eps) * L**2)
    it_bound = math.ceil(1 / eps) + 2
    max_it = max_size = max_peak = max_rounds = 0
    failures = []
    shrink = []
    for seed in range(30):
        ds = Dataset.euclidean(np.random.default_rng(seed).random((n, 3)))
        try:
            out, trace = mr_iterative_sample(ds, SampleConfig(k, eps, seed),
                                             ClusterConfig(machines=100, memory_cap_words=cap, seed=seed))
        except MemoryViolation as exc:
            failures.append(f"seed {seed}: {exc}")
            continue
        max_it = max(max_it, out.iterations)
        max_size = max(max_size, out.sample.size)
        max_peak = max(max_peak, trace.peak_memory)
        max_rounds = max(max_rounds, len(trace))
        shrink += [b / a for a, b in zip(out.r_sizes, out.r_sizes[1:])]
        if out.iterations > it_bound or out.sample.size > size_bound or len(trace) > 3 * it_bound:
            failures.append(f"seed {seed}")
    shrink_ok = np.mean(np.array(shrink) <= 8 / n**eps) >= 0.95 if shrink else True
    ok = not failures and shrink_ok
    report(3, ok, f"30 seeds; max iterations {max_it} (bound {it_bound}), max |C| {max_size} "
                  f"(bound {size_bound:.0f}), max peak words {max_peak} (cap {cap}), "
                  f"max rounds {max_rounds}; failures: {failures or 'none'}")
    assert ok


# 4 and 5. desk-scale rerun of the small-n table, in deterministic-time mode

FIG_SIZES = (10_000, 40_000, 100_000)
FIG_ALGORITHMS = ("parallel-lloyd", "divide-lloyd", "divide-localsearch", "sampling-lloyd",
                  "sampling-localsearch", "localsearch")


@lru_cache(maxsize=None)
def figure_row(algorithm, n):
    return run_experiment(ExperimentSpec(algorithm=algorithm, n=n, k=25, sigma=0.1, zipf_alpha=0.0,
                                         epsilon=0.1, machines=100, trials=3,
                                         deterministic_time=True))


def test_relative_costs():
    lines, ok = [], True
    for n in FIG_SIZES:
        assert figure_row("parallel-lloyd", n).mean_relative_cost == 1.0
        for algorithm, lo, hi in (("sampling-localsearch", 0.95, 1.15), ("sampling-lloyd", 0.95, 1.25)):
            row = figure_row(algorithm, n)
            r = row.mean_relative_cost
            good = lo <= r <= hi
            ok &= good
            lines.append(f"{algorithm}@{n}={r:.4f}{'' if good else '(out)'} |C|={row.sample_size:.0f}")
    report(4, ok, "; ".join(lines))
    assert ok


def test_speed_ordering():
    n = 100_000
    base = figure_row("parallel-lloyd", n).mean_sim_time_seconds
    fast = {a: figure_row(a, n).mean_sim_time_seconds for a in ("sampling-lloyd", "sampling-localsearch")}
    first = all(t < base for t in fast.values())
    times = {a: figure_row(a, 40_000).mean_sim_time_seconds for a in FIG_ALGORITHMS}
    second = max(times, key=times.get) == "localsearch"
    ok = first and second
    report(5, ok, f"n=1e5 time (words): parallel-lloyd {base:.4g}, "
                  + ", ".join(f"{a} {t:.4g}" for a, t in fast.items())
                  + f" -> sampling faster: {first}; n=4e4 slowest is {max(times, key=times.get)} "
                  + f"({', '.join(f'{a} {t:.4g}' for a, t in times.items())})")
    assert ok


# 6. parallel Lloyd equals sequential Lloyd bit for bit

def test_parallel_lloyd_bit_identical():
    mismatches = []
    for seed in range(10):
        ds = generate(DataGenConfig(n=5_000, k_true=25, seed=seed))
        cfg = LloydConfig(seed=seed)
        seq_run = lloyd_run(ds, 25, cfg)
        seq = lloyd_kmedian(ds, k=25, cfg=cfg)
        for machines in (1, 7, 100):
            par = parallel_lloyd(ds, 25, ClusterConfig(machines=machines, seed=seed), cfg)
            same = (par.lloyd.centers.tobytes() == seq_run.centers.tobytes()
                    and len(par.lloyd.history) == len(seq_run.history)
                    and par.solution.centers == seq.centers
                    and par.solution.objective == seq.objective)
            if not same:
                mismatches.append((seed, machines))
    ok = not mismatches
    report(6, ok, f"10 seeds x machines {{1, 7, 100}}; mismatches: {mismatches or 'none'}")
    assert ok


# 7. determinism of every pipeline and of the CSV output

def test_determinism(tmp_path):
    ds = generate(DataGenConfig(n=20_000, k_true=5, seed=3))
    diffs = []
    for algorithm in FIG_ALGORITHMS + ("gonzalez", "mr-kcenter"):
        runs = [run_algorithm(algorithm, ds, 5, 0.1, ClusterConfig(machines=100, seed=11,
                                                                  deterministic_time=True))
                for _ in range(2)]
        a, b = runs
        if (a.solution.centers != b.solution.centers or a.solution.objective != b.solution.objective
                or a.solution.to_csv() != b.solution.to_csv()
                or a.trace.to_csv() != b.trace.to_csv()
                or [r.signature() for r in a.trace.rounds] != [r.signature() for r in b.trace.rounds]):
            diffs.append(algorithm)
    if len(list(csv.reader(io.StringIO(a.trace.to_csv())))) < 2:
        diffs.append("empty trace")
    suite = tmp_path / "d.suite"
    suite.write_text("algorithm=sampling-lloyd\nalgorithm=parallel-lloyd\nalgorithm=mr-kcenter\n")
    outputs = []
    for i in range(2):
        out = tmp_path / f"run{i}.csv"
        cli_main(["--suite", str(suite), "--n", "20000", "--k", "5", "--trials", "2",
                  "--deterministic-time", "--output", str(out)])
        outputs.append(out.read_bytes())
    if outputs[0] != outputs[1]:
        diffs.append("suite CSV")
    spec = ExperimentSpec(algorithm="divide-localsearch", n=5_000, k=5, trials=1, deterministic_time=True)
    if format_rows([run_experiment(spec)]) != format_rows([run_experiment(spec)]):
        diffs.append("experiment row")
    ok = not diffs
    report(7, ok, f"8 algorithms twice + suite CSV twice; differences: {diffs or 'none'}")
    assert ok

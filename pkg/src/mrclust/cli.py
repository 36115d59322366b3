"""Command-line entry point: ``mrclust --algorithm sampling-localsearch --n 10000``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .bench import ALGORITHMS, COLUMNS, ExperimentSpec, format_rows, read_suite, run_experiment
from .datagen import DataGenConfig, generate
from .errors import UsageError
from .metric import save_dataset


def build_parser() -> argparse.ArgumentParser:
    d = ExperimentSpec()
    p = argparse.ArgumentParser(prog="mrclust", description=__doc__)
    p.add_argument("--algorithm", choices=ALGORITHMS, default=d.algorithm)
    p.add_argument("--n", type=int, default=d.n, help="points to generate")
    p.add_argument("--k", type=int, default=d.k)
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--zipf-alpha", type=float, default=d.zipf_alpha)
    p.add_argument("--dim", type=int, default=d.dim)
    p.add_argument("--machines", type=int, default=d.machines)
    p.add_argument("--trials", type=int, default=d.trials)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--dataset", help="read points from a dataset file instead of generating them")
    p.add_argument("--suite", help="run every experiment listed in a suite file; "
                                   "flags above become the per-line defaults")
    p.add_argument("--output", help="write the CSV here instead of stdout")
    p.add_argument("--deterministic-time", action="store_true",
                   help="measure machine time in words touched instead of seconds")
    p.add_argument("--lloyd-max-iterations", type=int, default=d.lloyd_max_iterations,
                   help="iteration cap for Lloyd's method")
    p.add_argument("--lloyd-tol", type=float, default=d.lloyd_tol,
                   help="stop Lloyd once the relative drop in squared error is at most this")
    p.add_argument("--write-dataset", metavar="PATH",
                   help="only generate the dataset described by the flags and save it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    try:
        if args.write_dataset:
            ds = generate(DataGenConfig(n=args.n, k_true=args.k, zipf_alpha=args.zipf_alpha,
                                        sigma=args.sigma, dim=args.dim, seed=args.seed))
            save_dataset(ds, args.write_dataset)
            return 0
        names = {f.name for f in fields(ExperimentSpec)}
        defaults = ExperimentSpec(**{k: v for k, v in vars(args).items() if k in names})
        specs = read_suite(args.suite, defaults) if args.suite else [defaults]
        if args.output:
            out = Path(args.output).open("w", encoding="utf-8", newline="")
        else:
            out = sys.stdout
        try:
            out.write(",".join(COLUMNS) + "\n")
            out.flush()
            for spec in specs:
                row = run_experiment(spec)
                out.write(format_rows([row]).split("\n", 1)[1])
                out.flush()
        finally:
            if out is not sys.stdout:
                out.close()
    except (UsageError, OSError) as exc:
        print(f"mrclust: error: {exc}", file=sys.stderr)
        return 2
    return 0

"""A deterministic, single-process MapReduce simulator.

A round takes key-value pairs whose key is a machine address, groups them by
key, and runs a reducer once per machine. Each machine's input size (in words),
memory high-water mark and running time are recorded. Shuffle cost is not
modelled.

Words: one per point id, per weight, per coordinate and per stored distance.

With ``deterministic_time`` the per-machine time is replaced by the number of
words the machine touched (input + distance lookups + output), which makes the
whole trace reproducible.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from .errors import MemoryViolation, UsageError
from .metric import metering


@dataclass(frozen=True)
class KeyValue:
    key: int
    value: Any
    words: int = 1

    def __post_init__(self):
        if self.key < 0:
            raise UsageError("keys are machine addresses and must be >= 0")
        if self.words < 1:
            raise UsageError("a value occupies at least one word")


@dataclass(frozen=True)
class ClusterConfig:
    machines: int = 100
    memory_cap_words: int | None = None
    seed: int = 0
    deterministic_time: bool = False

    def __post_init__(self):
        if self.machines < 1:
            raise UsageError("need at least one machine")
        if self.memory_cap_words is not None and self.memory_cap_words < 1:
            raise UsageError("memory cap must be positive")

    def fold(self, logical_parts: int) -> int:
        """How many machines a partition into ``logical_parts`` pieces actually uses."""
        return max(1, min(int(logical_parts), self.machines))


@dataclass(frozen=True)
class MachineStats:
    machine: int
    input_words: int
    peak_words: int
    time_seconds: float


@dataclass
class RoundTrace:
    round_index: int
    machines: list[MachineStats]
    label: str = ""

    @property
    def max_machine_time(self) -> float:
        return max((m.time_seconds for m in self.machines), default=0.0)

    @property
    def max_machine_memory(self) -> int:
        return max((m.peak_words for m in self.machines), default=0)

    def signature(self):
        """Everything except wall-clock time."""
        return (self.round_index, self.label,
                tuple((m.machine, m.input_words, m.peak_words) for m in self.machines))


@dataclass
class JobTrace:
    rounds: list[RoundTrace] = field(default_factory=list)

    @property
    def total_time(self) -> float:
        return sum(r.max_machine_time for r in self.rounds)

    @property
    def peak_memory(self) -> int:
        return max((r.max_machine_memory for r in self.rounds), default=0)

    def __len__(self):
        return len(self.rounds)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "machine", "input_words", "peak_words", "time_seconds"])
        for r in self.rounds:
            for m in r.machines:
                w.writerow([r.round_index, m.machine, m.input_words, m.peak_words,
                            repr(m.time_seconds)])
        return buf.getvalue()


def key_seed(job_seed: int, round_index: int, key: int) -> int:
    """Seed handed to the reducer for ``key`` in ``round_index``."""
    seq = np.random.SeedSequence([job_seed & (2**64 - 1), round_index, key])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


Reducer = Callable[[int, list, int], Iterable[KeyValue]]


def run_round(cfg: ClusterConfig, inputs: Iterable[KeyValue], reducer: Reducer,
              round_index: int = 0, label: str = "") -> tuple[list[KeyValue], RoundTrace]:
    """Shuffle ``inputs`` by key and run ``reducer`` once per occupied machine.

    Output is the concatenation of each machine's emissions in key order.
    """
    groups: dict[int, list] = {}
    words: dict[int, int] = {}
    for kv in inputs:
        if kv.key >= cfg.machines:
            raise UsageError(f"key {kv.key} addresses a machine beyond {cfg.machines}")
        groups.setdefault(kv.key, []).append(kv.value)
        words[kv.key] = words.get(kv.key, 0) + kv.words

    cap = cfg.memory_cap_words
    outputs: list[KeyValue] = []
    stats = []
    for key in sorted(groups):
        in_words = words[key]
        if cap is not None and in_words > cap:
            raise MemoryViolation(round_index, key, in_words, cap)
        seed = key_seed(cfg.seed, round_index, key)
        start = time.perf_counter()
        with metering() as meter:
            emitted = list(reducer(key, groups[key], seed))
        elapsed = time.perf_counter() - start
        out_words = sum(kv.words for kv in emitted)
        peak = in_words + meter.scratch_words + out_words
        if cap is not None and peak > cap:
            raise MemoryViolation(round_index, key, peak, cap)
        if cfg.deterministic_time:
            elapsed = float(in_words + meter.distance_evals + out_words)
        stats.append(MachineStats(key, in_words, peak, elapsed))
        outputs.extend(emitted)
    return outputs, RoundTrace(round_index, stats, label)


class Job:
    """Runs successive rounds under one config and collects their traces."""

    def __init__(self, cfg: ClusterConfig):
        self.cfg = cfg
        self.trace = JobTrace()

    def round(self, inputs: Iterable[KeyValue], reducer: Reducer, label: str = "") -> list[KeyValue]:
        out, tr = run_round(self.cfg, inputs, reducer, len(self.trace.rounds), label)
        self.trace.rounds.append(tr)
        return out

    def single(self, fn: Callable[[int], Any], words: int, label: str = "", out_words: int = 1):
        """Run ``fn(seed)`` alone on machine 0 as one round and return its result."""
        box = []

        def reducer(key, values, seed):
            box.append(fn(seed))
            yield KeyValue(0, None, out_words)

        self.round([KeyValue(0, None, max(1, int(words)))], reducer, label)
        return box[0]


def partition_arbitrary(items, parts: int, seed: int) -> list:
    """Seeded shuffle, then split into ``parts`` pieces whose sizes differ by at most one."""
    if parts < 1:
        raise UsageError("parts must be >= 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(items))
    pieces = np.array_split(order, parts)
    if isinstance(items, np.ndarray):
        return [items[p] for p in pieces]
    return [[items[i] for i in p] for p in pieces]

"""Sampling-based MapReduce clustering (k-center, k-median) on a simulated cluster."""

from .bench import ExperimentRow, ExperimentSpec, run_experiment, run_suite
from .clusterers import (LloydConfig, LocalSearchConfig, brute_force_opt, gonzalez_kcenter,
                         lloyd_kmedian, local_search_kmedian)
from .datagen import DataGenConfig, generate
from .errors import MemoryViolation, SamplingStalled, UsageError
from .metric import (ClusteringSolution, Dataset, WeightedPointSet, dist_to_set, distance,
                     evaluate, load_dataset, save_dataset)
from .pipelines import (PipelineResult, mapreduce_divide_kmedian, mapreduce_kcenter,
                        mapreduce_kmedian, parallel_lloyd)
from .runtime import ClusterConfig, JobTrace, KeyValue, RoundTrace, partition_arbitrary, run_round
from .sampling import SampleConfig, SampleOutcome, iterative_sample, mr_iterative_sample, select_pivot

__version__ = "0.1.0"

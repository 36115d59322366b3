import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrclust import (ClusterConfig, Dataset, SampleConfig, SamplingStalled, UsageError,
                     iterative_sample, mr_iterative_sample, select_pivot)
from mrclust.sampling import loop_guard, pivot_rank, point_coins, sample_probability


def uniform(n, seed, dim=2):
    return Dataset.euclidean(np.random.default_rng(seed).random((n, dim)))


def test_pivot_rank_in_the_middle():
    # n=4 gives rank 16; H = 20 points at distances 20, 19, ..., 1 from S = {0}
    ds = Dataset.euclidean(np.arange(21, dtype=float))
    H = list(range(1, 21))
    assert select_pivot(ds, H, [0], 4) == 5  # 16th farthest of 20..1 is distance 5


def test_pivot_rank_clamps_to_h():
    ds = Dataset.euclidean(np.arange(10, dtype=float))
    assert select_pivot(ds, {3, 7, 9}, {0}, 4) == 3


def test_pivot_ties_go_to_smallest_id():
    ds = Dataset.euclidean(np.zeros(6))
    assert select_pivot(ds, {5, 2, 4}, {0}, 1000) == 2
    assert select_pivot(ds, [4, 5, 2], [4, 5, 2], 4) == 2


def test_pivot_needs_inputs():
    ds = Dataset.euclidean(np.arange(4.0))
    with pytest.raises(UsageError):
        select_pivot(ds, set(), {0}, 4)
    with pytest.raises(UsageError):
        select_pivot(ds, {1}, set(), 4)


def test_small_n_returns_everything():
    ds = uniform(20, 0)
    assert loop_guard(20, 2, 0.25) > 20
    out = iterative_sample(ds, SampleConfig(2, 0.25, seed=1))
    assert out.iterations == 0
    assert np.array_equal(out.sample, np.arange(20))


def test_config_validation():
    with pytest.raises(UsageError):
        SampleConfig(0, 0.1)
    with pytest.raises(UsageError):
        SampleConfig(2, 0.5)
    with pytest.raises(UsageError):
        iterative_sample(uniform(3, 0), SampleConfig(5, 0.1))


def test_coins_ignore_grouping():
    ids = np.arange(1000)
    whole = point_coins(5, 2, 0, ids)
    split = np.concatenate([point_coins(5, 2, 0, ids[:300]), point_coins(5, 2, 0, ids[300:])])
    assert np.array_equal(whole, split)
    assert 0.45 < whole.mean() < 0.55
    assert not np.array_equal(whole, point_coins(5, 2, 1, ids))


def test_probability_is_clamped():
    assert sample_probability(100, 25, 0.1, 10) == 1.0


def replay(ds, cfg):
    """Re-run the loop while recording what each iteration removed."""
    from mrclust.sampling import _draw, _ranked
    n = ds.n
    R = np.arange(n)
    S = np.empty(0, dtype=np.int64)
    it = 0
    steps = []
    while R.size > loop_guard(n, cfg.k, cfg.epsilon):
        it += 1
        s_new, H, retry = _draw(cfg, n, it, R.size, R)
        if H.size == 0:
            H = retry
        S = np.union1d(S, s_new)
        d, _ = ds.nearest(R, S)
        pivot = _ranked(H, d[np.searchsorted(R, H)], pivot_rank(n))[1]
        keep = (d >= pivot) & ~np.isin(R, S)
        steps.append((R, S, d, pivot, keep))
        R = R[keep]
    return steps


def test_removed_points_are_strictly_closer_than_pivot():
    ds = uniform(4000, 3)
    cfg = SampleConfig(1, 0.2, seed=3)
    steps = replay(ds, cfg)
    assert steps
    pruned = 0
    for R, S, d, pivot, keep in steps:
        gone = R[~keep]
        outside = ~np.isin(gone, S)
        assert np.all(d[~keep][outside] < pivot)
        pruned += int(outside.sum())
        assert not np.any(np.isin(R[keep], S))
    assert pruned > 0
    out = iterative_sample(ds, cfg)
    assert out.iterations == len(steps)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([1, 2]), st.sampled_from([0.15, 0.2]))
def test_sample_invariants(seed, k, eps):
    ds = uniform(3000, seed % 1000)
    out = iterative_sample(ds, SampleConfig(k, eps, seed))
    guard = loop_guard(ds.n, k, eps)
    assert out.r_sizes[-1] <= guard or out.iterations == 0
    assert all(b < a for a, b in zip(out.r_sizes, out.r_sizes[1:]))
    assert np.array_equal(out.sample, np.unique(out.sample))
    assert len(out.r_sizes) == out.iterations + 1


@pytest.mark.parametrize("machines", [1, 7, 100])
def test_mapreduce_draws_the_same_sample(machines):
    ds = uniform(5000, 11)
    cfg = SampleConfig(1, 0.2, seed=11)
    seq = iterative_sample(ds, cfg)
    mr, trace = mr_iterative_sample(ds, cfg, ClusterConfig(machines=machines))
    assert seq.iterations >= 1
    assert np.array_equal(seq.sample, mr.sample)
    assert seq.r_sizes == mr.r_sizes
    assert len(trace) <= 3 * seq.iterations


def test_explicit_metric_sampling_matches():
    rng = np.random.default_rng(4)
    pts = rng.random((2500, 2))
    ds_e = Dataset.euclidean(pts)
    ds_m = Dataset.explicit(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)), validate=False)
    cfg = SampleConfig(1, 0.2, seed=4)
    a = iterative_sample(ds_e, cfg)
    b = iterative_sample(ds_m, cfg)
    assert a.iterations >= 1
    assert np.array_equal(a.sample, b.sample)


def test_coincident_points_still_finish():
    # nothing is strictly closer than the pivot, so only sampled points leave R
    ds = Dataset.euclidean(np.zeros((4000, 1)))
    out = iterative_sample(ds, SampleConfig(1, 0.2, seed=0))
    assert all(b < a for a, b in zip(out.r_sizes, out.r_sizes[1:]))


def test_stall_is_reported(monkeypatch):
    import mrclust.sampling as sampling
    empty = np.empty(0, dtype=np.int64)
    monkeypatch.setattr(sampling, "_draw", lambda cfg, n, it, r, ids: (empty, empty, empty))
    with pytest.raises(SamplingStalled):
        iterative_sample(uniform(4000, 0), SampleConfig(1, 0.2))


def test_outcome_csv():
    out = iterative_sample(uniform(4000, 2), SampleConfig(1, 0.2, seed=2))
    lines = out.to_csv().splitlines()
    assert lines[0] == "iteration,r_size,s_size"
    assert lines[1] == "0,4000,0"
    assert len(lines) == out.iterations + 2


def test_max_iterations():
    assert SampleConfig(3, 0.1).max_iterations == 10 * math.ceil(1 / 0.1)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from histopart.keyspace import gen_adversarial, gen_skewed, gen_uniform
from histopart.partitioner import PartitionerConfig, run_histogram_partitioning
from histopart.sorter import SortOutcome, destinations, exchange_and_sort, verify_sorted


def _perfect_splitters(data):
    n = data.N // data.p
    return data.oracle.keys_of_ranks(np.arange(1, data.p) * n)


def test_sorted_blocks_no_exchange():
    data = gen_skewed(64, 4, 0, "sorted_blocks")
    outcome = exchange_and_sort(data, _perfect_splitters(data))
    assert outcome.exchange_volume == 0
    assert outcome.max_load == 16
    assert outcome.globally_sorted and verify_sorted(outcome, data.oracle)


def test_bucket_rule_splitter_goes_left():
    data = gen_uniform(16, 4, 0)
    s = _perfect_splitters(data)
    assert destinations(s, s).tolist() == [0, 1, 2]
    assert destinations(data.oracle.keys_of_ranks([5]), s).tolist() == [1]


def test_end_to_end_histopart():
    data = gen_uniform(2 ** 16, 64, 3)
    result = run_histogram_partitioning(data, PartitionerConfig(seed=3))
    outcome = exchange_and_sort(data, result.splitter_keys)
    assert verify_sorted(outcome, data.oracle)
    assert outcome.max_load <= 2 * data.N // data.p
    assert [b.size for b in outcome.buckets] == result.bucket_sizes.tolist()


def test_swapped_keys_detected():
    data = gen_uniform(64, 4, 1)
    outcome = exchange_and_sort(data, _perfect_splitters(data))
    bad = [b.copy() for b in outcome.buckets]
    bad[0][[0, 1]] = bad[0][[1, 0]]
    assert not verify_sorted(SortOutcome(bad, outcome.max_load, outcome.exchange_volume,
                                         outcome.globally_sorted), data.oracle)


def test_empty_bucket_allowed():
    data = gen_uniform(16, 4, 2)
    splitters = data.oracle.keys_of_ranks([4, 4 + 0, 12])
    outcome = exchange_and_sort(data, splitters)
    assert [b.size for b in outcome.buckets] == [4, 0, 8, 4]
    assert verify_sorted(outcome, data.oracle)


def test_unsorted_splitters_rejected():
    data = gen_uniform(16, 4, 0)
    s = _perfect_splitters(data)
    with pytest.raises(ValueError):
        exchange_and_sort(data, s[::-1])
    with pytest.raises(ValueError):
        exchange_and_sort(data, s[:2])


@given(st.integers(0, 10 ** 6), st.sampled_from([(2, 8), (8, 16), (16, 4)]))
@settings(max_examples=30, deadline=None)
def test_permutation_preserved(seed, shape):
    p, n = shape
    data = gen_adversarial(p * n, p, 2 if n % 2 == 0 and p % 2 == 0 else 1, seed)
    rng = np.random.default_rng(seed)
    ranks = np.sort(rng.choice(np.arange(1, p * n + 1), p - 1, replace=False))
    outcome = exchange_and_sort(data, data.oracle.keys_of_ranks(ranks))
    assert np.array_equal(np.sort(outcome.concatenated()), np.sort(data.keys_by_processor.ravel()))
    assert verify_sorted(outcome, data.oracle)

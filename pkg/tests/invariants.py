"""Round-by-round invariant checks shared by the partitioner and acceptance tests."""
import numpy as np

from histopart.partitioner import gamma_bound, target_windows, verify_balance


def assert_run_invariants(result, data, epsilon):
    N, p = data.N, data.p
    rounds = result.per_round
    for prev, cur in zip(rounds, rounds[1:]):
        assert np.all(prev.lower <= cur.lower), "lower bounds must not decrease"
        assert np.all(prev.upper >= cur.upper), "upper bounds must not increase"
        assert cur.gamma.is_subset_of(prev.gamma), "gamma must be nested"
    for rec in rounds:
        assert np.all(rec.lower < rec.upper)
        assert rec.gamma_bound_ok
        assert rec.gamma_length <= gamma_bound(rec.unachieved_at_start, N, p, epsilon)
        # histogram ranks equal the oracle's ranks of the sampled keys
        keys = data.oracle.keys_of_ranks(rec.sampled_ranks)
        assert np.array_equal(data.oracle.ranks(keys), rec.sampled_ranks)
        assert np.all(rec.gamma.contains(rec.sampled_ranks))
    achieved = result.splitter_ranks >= 0
    lo, hi = target_windows(N, p, epsilon)
    r = result.splitter_ranks[achieved]
    assert np.all((lo[achieved] <= r) & (r <= hi[achieved]))
    if achieved.any():
        assert np.array_equal(data.oracle.ranks(result.splitter_keys[achieved]), r)
    if result.success:
        ok, max_bucket = verify_balance(result, data.oracle, epsilon)
        assert ok
        assert max_bucket <= (1 + epsilon) * N / p
        assert result.bucket_sizes.sum() == N
        assert result.balance_factor <= 1 + epsilon

"""Exit criteria. Each test prints one ``[PASS]/[FAIL] criterion N`` line."""
import csv
import io
import math
import time

import numpy as np
import pytest

from histopart.core_math import (RunsModel, runs_enumeration_oracle, runs_expectation,
                                 runs_monte_carlo, runs_variance)
from histopart.experiments import ExperimentSpec, rows_to_csv, sweep
from histopart.keyspace import audit_adversarial, gen_adversarial, gen_uniform
from histopart.partitioner import (PartitionerConfig, run_histogram_partitioning, run_sample_sort,
                                   verify_balance)
from histopart.sorter import exchange_and_sort, verify_sorted

from invariants import assert_run_invariants

SWEEP_P = (64, 256, 1024, 4096)
SWEEP_SEEDS = range(50)
KEYS_PER_PROC = 256


@pytest.fixture(scope="module")
def main_sweep():
    """histopart, eps = 1, over SWEEP_P x 50 seeds on uniform inputs."""
    runs = {p: [] for p in SWEEP_P}
    start = time.perf_counter()
    for p in SWEEP_P:
        N = p * KEYS_PER_PROC
        for seed in SWEEP_SEEDS:
            data = gen_uniform(N, p, seed)
            result = run_histogram_partitioning(data, PartitionerConfig(epsilon=1.0, seed=seed))
            ok, max_bucket = verify_balance(result, data.oracle, 1.0) if result.success \
                else (False, -1)
            runs[p].append({
                "success": result.success,
                "balanced": ok and max_bucket <= 2 * N // p,
                "rounds": result.rounds,
                "volume": result.total_sample_volume,
                "fallback": result.fallback_used,
                "gamma_fail": result.gamma_bound_checks[1],
                "gamma_checks": len(result.per_round),
                "kappa": result.kappa,
            })
    return runs, time.perf_counter() - start


def test_criterion_1_balance(main_sweep, criterion):
    runs, elapsed = main_sweep
    successes = [r for rs in runs.values() for r in rs if r["success"]]
    all_balanced = all(r["balanced"] for r in successes)
    passed = all_balanced and len(successes) > 0 and elapsed < 60
    criterion(1, passed, f"{len(successes)} successful runs over p={SWEEP_P}, "
                         f"all 2-balanced={all_balanced}, sweep time {elapsed:.1f}s (< 60s)")
    assert passed


def test_criterion_2_rounds(main_sweep, criterion):
    runs, _ = main_sweep
    details, passed = [], True
    total = sum(len(rs) for rs in runs.values())
    fallbacks = sum(r["fallback"] for rs in runs.values() for r in rs)
    for p, rs in runs.items():
        rounds = np.array([r["rounds"] for r in rs])
        med, p95 = float(np.median(rounds)), float(np.percentile(rounds, 95))
        passed &= med <= 5 and p95 <= 8
        details.append(f"p={p}: median {med:g}, p95 {p95:g}")
    passed &= fallbacks / total < 0.01
    criterion(2, passed, "; ".join(details) + f"; fallback {fallbacks}/{total}")
    assert passed


def test_criterion_3_volume(main_sweep, criterion):
    runs, _ = main_sweep
    details, passed = [], True
    for p, rs in runs.items():
        ratios = np.array([r["volume"] / p for r in rs])
        frac = float(np.mean(ratios <= 12))
        passed &= frac >= 0.95
        details.append(f"p={p}: {frac:.0%} <= 12p, observed max constant {ratios.max():.3f}, "
                       f"kappa {max(r['kappa'] for r in rs):.2f}")
    criterion(3, passed, "; ".join(details))
    assert passed


def test_criterion_4_gamma_bound(main_sweep, criterion, gamma_tally):
    runs, _ = main_sweep
    sweep_checks = sum(r["gamma_checks"] for rs in runs.values() for r in rs)
    sweep_fail = sum(r["gamma_fail"] for rs in runs.values() for r in rs)
    # adversarial and uniform layouts, several eps, run through the full invariant checker
    extra = 0
    for seed in range(10):
        for eps in (0.5, 1.0, 2.0):
            for data in (gen_adversarial(2 ** 14, 64, 8, seed), gen_uniform(2 ** 12, 64, seed)):
                result = run_histogram_partitioning(data, PartitionerConfig(epsilon=eps, seed=seed))
                assert_run_invariants(result, data, eps)
                extra += len(result.per_round)
    passed = sweep_fail == 0 and gamma_tally["violations"] == 0
    criterion(4, passed, f"{sweep_checks + extra} rounds checked here, {sweep_fail} violations; "
                         f"suite tally so far {gamma_tally['checks']} checks, "
                         f"{gamma_tally['violations']} violations")
    assert passed


def test_criterion_5_one_round_contrast(criterion):
    p = 1024
    N = p * KEYS_PER_PROC
    big = math.ceil(3 * p * math.log(p))
    wins_big = wins_small = 0
    seeds = range(100)
    for seed in seeds:
        data = gen_uniform(N, p, seed)
        wins_big += run_sample_sort(data, big, 1.0, seed).success
        wins_small += run_sample_sort(data, p, 1.0, seed).success
    rate_big, rate_small = wins_big / len(seeds), wins_small / len(seeds)
    passed = rate_big >= 0.95 and rate_small <= 0.05
    criterion(5, passed, f"S=ceil(3p ln p)={big}: success {rate_big:.0%} (>= 95%); "
                         f"S=p={p}: success {rate_small:.0%} (<= 5%)")
    assert passed


def test_criterion_6_runs_statistics(criterion):
    checked = 0
    exact = True
    for m in range(1, 13):
        for m1 in range(1, m + 1):
            for k in range(1, m1 + 1):
                model = RunsModel(m1, m - m1, k)
                mean, var = runs_enumeration_oracle(model)
                exact &= runs_expectation(model, exact=True) == mean
                exact &= runs_variance(model, exact=True) == var
                checked += 1
    mc = []
    for k in (5, 20):
        model = RunsModel(900, 100, k)
        trials = 50_000
        mean, _ = runs_monte_carlo(model, trials, seed=k)
        se = math.sqrt(runs_variance(model) / trials)
        z = abs(mean - runs_expectation(model)) / se
        mc.append((k, z))
    passed = exact and all(z <= 3 for _, z in mc)
    criterion(6, passed, f"{checked} (m1,m2,k) cases exact={exact}; Monte Carlo z-scores "
                         + ", ".join(f"k={k}: {z:.2f}" for k, z in mc) + " (<= 3)")
    assert passed


def test_criterion_7_layout_invariance(criterion):
    p, N = 256, 256 * KEYS_PER_PROC
    same = 0
    pairs = 20
    for seed in range(pairs):
        cfg = PartitionerConfig(seed=seed)
        uni = run_histogram_partitioning(gen_uniform(N, p, seed), cfg)
        adv = run_histogram_partitioning(gen_adversarial(N, p, None, seed + 1000), cfg)
        identical = (uni.rounds == adv.rounds
                     and np.array_equal(uni.splitter_ranks, adv.splitter_ranks)
                     and all(np.array_equal(a.sampled_ranks, b.sampled_ranks)
                             for a, b in zip(uni.per_round, adv.per_round)))
        same += identical
    passed = same == pairs
    criterion(7, passed, f"{same}/{pairs} uniform vs adversarial pairs identical")
    assert passed


def test_criterion_8_end_to_end_sort(criterion):
    p, N = 256, 2 ** 16
    good = 0
    runs = 20
    for seed in range(runs):
        data = gen_uniform(N, p, seed)
        result = run_histogram_partitioning(data, PartitionerConfig(seed=seed))
        outcome = exchange_and_sort(data, result.splitter_keys)
        good += (outcome.globally_sorted and verify_sorted(outcome, data.oracle)
                 and outcome.max_load <= 2 * N // p)
    passed = good == runs
    criterion(8, passed, f"{good}/{runs} runs sorted with max_load <= 2N/p at p={p}, N={N}")
    assert passed


def test_criterion_9_adversarial_audit(criterion):
    N, p, C = 4096, 64, 8
    ok = 0
    for seed in range(20):
        data = gen_adversarial(N, p, C, seed)
        report = audit_adversarial(data, C)
        ok += report["pass"] and all(row.size == N // p for row in data.keys_by_processor)
    passed = ok == 20
    criterion(9, passed, f"{ok}/20 seeds: one subinterval per (processor, part), N/p keys each")
    assert passed


def test_criterion_10_determinism(criterion):
    outputs = []
    for algo in ("histopart", "hss_fixed", "sample_sort"):
        spec = ExperimentSpec(algorithm=algo, p_list=(64, 256), trials=10, base_seed=3,
                              workload="adversarial")
        first = rows_to_csv(sweep(spec), include_wall_time=False)
        second = rows_to_csv(sweep(spec), include_wall_time=False)
        outputs.append(first == second)
        assert len(list(csv.DictReader(io.StringIO(first)))) == 20
    passed = all(outputs)
    criterion(10, passed, "repeated sweeps give identical CSV (wall_time excluded) for "
                          "histopart, hss_fixed, sample_sort")
    assert passed

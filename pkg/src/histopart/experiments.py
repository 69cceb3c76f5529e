"""Seeded experiment sweeps producing one row per (p, trial)."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field, fields

from .keyspace import GlobalInput, make_input
from .partitioner import (PartitionerConfig, PartitionResult, run_histogram_partitioning,
                          run_hss_fixed, run_sample_sort, verify_balance)
from .sorter import exchange_and_sort, verify_sorted

ALGORITHMS = ("histopart", "hss_fixed", "sample_sort")


def default_sample_size(p: int) -> int:
    return math.ceil(3 * p * math.log(p))


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str = "histopart"
    p_list: tuple[int, ...] = (64,)
    keys_per_proc: int = 256
    epsilon: float = 1.0
    c: float = 3.0
    sample_size: int | None = None      # sample_sort only; default ceil(3 p ln p)
    budget: int | None = None           # hss_fixed per-round budget; default p
    trials: int = 1
    base_seed: int = 0
    workload: str = "uniform"
    C: int | None = None
    count_broadcast: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.p_list or any(p < 2 for p in self.p_list):
            raise ValueError("every p must be >= 2")
        if self.keys_per_proc < 1:
            raise ValueError("keys_per_proc must be >= 1")

    def seeds(self):
        return [self.base_seed + t for t in range(self.trials)]


@dataclass
class ResultRow:
    algorithm: str
    p: int
    N: int
    seed: int
    rounds: int
    total_sample_volume: int
    balance_factor: float
    success: bool
    max_h: int
    wall_time: float


ROW_FIELDS = [f.name for f in fields(ResultRow)]
SORT_FIELDS = ROW_FIELDS + ["max_load", "exchange_volume", "globally_sorted"]


def run_algorithm(spec: ExperimentSpec, data: GlobalInput, seed: int) -> PartitionResult:
    if spec.algorithm == "histopart":
        config = PartitionerConfig(epsilon=spec.epsilon, c=spec.c, seed=seed,
                                   count_broadcast=spec.count_broadcast)
        return run_histogram_partitioning(data, config)
    if spec.algorithm == "hss_fixed":
        return run_hss_fixed(data, spec.budget, spec.epsilon, seed,
                             count_broadcast=spec.count_broadcast)
    size = spec.sample_size or default_sample_size(data.p)
    return run_sample_sort(data, size, spec.epsilon, seed, spec.count_broadcast)


def run_trial(spec: ExperimentSpec, p: int, seed: int, sort: bool = False):
    """One (p, seed) point; returns (row dict, PartitionResult, GlobalInput)."""
    N = p * spec.keys_per_proc
    data = make_input(spec.workload, N, p, seed, spec.C)
    start = time.perf_counter()
    result = run_algorithm(spec, data, seed)
    success = result.success and verify_balance(result, data.oracle, spec.epsilon)[0]
    row = asdict(ResultRow(spec.algorithm, p, N, seed, result.rounds,
                           result.total_sample_volume, result.balance_factor, success,
                           result.ledger.max_h, 0.0))
    if sort:
        if result.success:
            outcome = exchange_and_sort(data, result.splitter_keys)
            row.update(max_load=outcome.max_load, exchange_volume=outcome.exchange_volume,
                       globally_sorted=outcome.globally_sorted
                       and verify_sorted(outcome, data.oracle))
        else:
            row.update(max_load=-1, exchange_volume=-1, globally_sorted=False)
    row["wall_time"] = round(time.perf_counter() - start, 6)
    return row, result, data


def sweep(spec: ExperimentSpec, sort: bool = False, keep_results: bool = False):
    """All rows ordered by (p, trial). With ``keep_results`` also returns reports."""
    rows, reports = [], []
    for p in spec.p_list:
        for seed in spec.seeds():
            row, result, _ = run_trial(spec, p, seed, sort=sort)
            rows.append(row)
            if keep_results:
                reports.append(result)
    return (rows, reports) if keep_results else rows


def rows_to_csv(rows, columns=None, include_wall_time: bool = True) -> str:
    columns = list(columns or (SORT_FIELDS if rows and "max_load" in rows[0] else ROW_FIELDS))
    if not include_wall_time:
        columns = [c for c in columns if c != "wall_time"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def summarize(rows) -> dict:
    """Per-p medians, 95th percentiles and volume constants."""
    import numpy as np

    out = {}
    for p in sorted({r["p"] for r in rows}):
        sel = [r for r in rows if r["p"] == p]
        rounds = np.array([r["rounds"] for r in sel])
        volume = np.array([r["total_sample_volume"] / p for r in sel])
        out[p] = {
            "trials": len(sel),
            "success_rate": float(np.mean([r["success"] for r in sel])),
            "median_rounds": float(np.median(rounds)),
            "p95_rounds": float(np.percentile(rounds, 95)),
            "max_volume_over_p": float(volume.max()),
            "p95_volume_over_p": float(np.percentile(volume, 95)),
        }
    return out

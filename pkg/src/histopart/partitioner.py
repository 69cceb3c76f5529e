"""Splitter selection by repeated sampling and histogramming.

Three partitioners share one round structure (sample inside the gamma set,
gather, reduce a histogram of global ranks, tighten splitter bounds):

* :func:`run_histogram_partitioning` samples each key of gamma with
  probability ``c * p / (|gamma| * log* p)``, i.e. about ``c p / log* p``
  samples per round.
* :func:`run_hss_fixed` targets a fixed expected budget per round.
* :func:`run_sample_sort` does a single round at a fixed total sample size.

Splitter ``j`` (1 <= j <= p-1) is achieved once some sampled key has a rank
in ``[j N/p, j N/p + eps N/p]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bsp import BSPHarness, CostLedger
from .core_math import log_star
from .keyspace import GlobalInput, RankOracle, mix_seed, splitmix64

FALLBACK_MODES = ("oversample", "fail")


class PartitionError(RuntimeError):
    """Raised when a partitioner exhausts its round cap without a fallback."""


@dataclass(frozen=True)
class PartitionerConfig:
    epsilon: float = 1.0
    c: float = 3.0
    max_rounds_cap: int | None = None     # None -> 10 + 10 * log* p
    fallback: str = "oversample"
    count_broadcast: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.max_rounds_cap is not None and self.max_rounds_cap < 1:
            raise ValueError("max_rounds_cap must be >= 1")
        if self.fallback not in FALLBACK_MODES:
            raise ValueError(f"fallback must be one of {FALLBACK_MODES}")

    def round_cap(self, p: int) -> int:
        if self.max_rounds_cap is not None:
            return self.max_rounds_cap
        return 10 + 10 * log_star(p)


@dataclass
class SplitterState:
    """Rank bounds for splitters 1..p-1 (index j-1 in every array).

    ``lower``/``upper`` are ranks of sampled keys (or the sentinels 0 and
    N+1) strictly bracketing each splitter's target window.
    """

    N: int
    p: int
    lower: np.ndarray
    upper: np.ndarray
    achieved: np.ndarray
    achieved_rank: np.ndarray
    achieved_key: np.ndarray

    @classmethod
    def initial(cls, N: int, p: int) -> "SplitterState":
        k = p - 1
        return cls(N, p,
                   lower=np.zeros(k, dtype=np.int64),
                   upper=np.full(k, N + 1, dtype=np.int64),
                   achieved=np.zeros(k, dtype=bool),
                   achieved_rank=np.full(k, -1, dtype=np.int64),
                   achieved_key=np.zeros(k, dtype=np.uint64))

    def copy(self) -> "SplitterState":
        return SplitterState(self.N, self.p, self.lower.copy(), self.upper.copy(),
                             self.achieved.copy(), self.achieved_rank.copy(),
                             self.achieved_key.copy())

    @property
    def unachieved(self) -> np.ndarray:
        """Splitter indices (1-based) still to be found."""
        return np.flatnonzero(~self.achieved) + 1

    @property
    def done(self) -> bool:
        return bool(self.achieved.all())


@dataclass(frozen=True)
class GammaSet:
    """Disjoint sorted half-open rank intervals ``[starts[i], stops[i])``."""

    starts: np.ndarray
    stops: np.ndarray

    @property
    def total_length(self) -> int:
        return int((self.stops - self.starts).sum())

    def __len__(self) -> int:
        return int(self.starts.size)

    def ranks(self) -> np.ndarray:
        """All ranks in the set, ascending."""
        if not len(self):
            return np.empty(0, dtype=np.int64)
        lengths = self.stops - self.starts
        offsets = np.repeat(self.starts - np.concatenate(([0], np.cumsum(lengths)[:-1])),
                            lengths)
        return np.arange(lengths.sum(), dtype=np.int64) + offsets

    def contains(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks)
        idx = np.searchsorted(self.starts, ranks, side="right") - 1
        ok = idx >= 0
        safe = np.maximum(idx, 0)
        return ok & (ranks < self.stops[safe]) if len(self) else np.zeros(ranks.shape, bool)

    def is_subset_of(self, other: "GammaSet") -> bool:
        if not len(self):
            return True
        if not len(other):
            return False
        idx = np.searchsorted(other.starts, self.starts, side="right") - 1
        if np.any(idx < 0):
            return False
        return bool(np.all(self.stops <= other.stops[idx]))


def target_windows(N: int, p: int, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive rank windows ``[j N/p, j N/p + eps N/p]`` for j = 1..p-1."""
    n = N // p
    lo = np.arange(1, p, dtype=np.int64) * n
    return lo, lo + epsilon * n


def gamma_bound(k: int, N: int, p: int, epsilon: float) -> float:
    """Upper bound on |gamma| with k unachieved splitters.

    3kN/p for eps <= 1. For wider windows a gap of sampled ranks around u
    unachieved windows spans at most (u + 1 + eps) N/p ranks, hence (2+eps).
    """
    return max(3.0, 2.0 + epsilon) * k * N / p


def check_gamma_bound(gamma: GammaSet, state: SplitterState, epsilon: float) -> bool:
    k = int((~state.achieved).sum())
    return gamma.total_length <= gamma_bound(k, state.N, state.p, epsilon)


def per_key_probability(gamma: GammaSet, p: int, config: PartitionerConfig) -> float:
    """min(1, c p / (|gamma| log* p)); clamps to 1 when log* p is 0."""
    size = gamma.total_length
    if size <= 0:
        raise ValueError("cannot sample from an empty gamma set")
    ls = log_star(p)
    if ls == 0:
        return 1.0
    return min(1.0, config.c * p / (size * ls))


def _uniforms(seed: int, round_index: int, ranks: np.ndarray) -> np.ndarray:
    base = np.uint64(mix_seed(seed, round_index))
    bits = splitmix64(ranks.astype(np.uint64) ^ base)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def sample_ranks(gamma: GammaSet, q: float, round_index: int, seed: int) -> np.ndarray:
    """Ranks in gamma selected with probability q.

    Whether rank r is selected depends only on (seed, round_index, r), never
    on which processor holds it.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"sampling probability must lie in (0, 1], got {q}")
    ranks = gamma.ranks()
    if q >= 1.0:
        return ranks
    return ranks[_uniforms(seed, round_index, ranks) < q]


def sample_round(data: GlobalInput, gamma: GammaSet, q: float, round_index: int,
                 seed: int) -> list[np.ndarray]:
    """Per-processor local samples (key arrays) for one round."""
    picked = sample_ranks(gamma, q, round_index, seed)
    owners = data.owner_of_rank[picked]
    order = np.argsort(owners, kind="stable")
    bounds = np.cumsum(np.bincount(owners, minlength=data.p))[:-1]
    keys = data.universe[picked[order] - 1]
    return np.split(keys, bounds)


def update_bounds(state: SplitterState, histogram_keys: np.ndarray,
                  histogram_ranks: np.ndarray, epsilon: float) -> SplitterState:
    """Tighten bounds of unachieved splitters from a (key, global rank) histogram.

    A splitter whose window contains a histogram rank becomes achieved with
    the smallest such rank.
    """
    new = state.copy()
    if histogram_ranks.size == 0:
        return new
    order = np.argsort(histogram_ranks, kind="stable")
    h = np.asarray(histogram_ranks)[order]
    hk = np.asarray(histogram_keys, dtype=np.uint64)[order]
    lo, hi = target_windows(state.N, state.p, epsilon)
    open_ = ~state.achieved

    below = np.searchsorted(h, lo, side="left")      # count of ranks < lo
    above = np.searchsorted(h, hi, side="right")     # index of first rank > hi
    hit = open_ & (above > below)
    if hit.any():
        new.achieved[hit] = True
        new.achieved_rank[hit] = h[below[hit]]
        new.achieved_key[hit] = hk[below[hit]]

    has_below = open_ & (below > 0)
    new.lower[has_below] = np.maximum(state.lower[has_below], h[below[has_below] - 1])
    has_above = open_ & (above < h.size)
    new.upper[has_above] = np.minimum(state.upper[has_above], h[above[has_above]])
    return new


def compute_gamma(state: SplitterState) -> GammaSet:
    """Union of the open rank intervals (lower, upper) of unachieved splitters."""
    idx = np.flatnonzero(~state.achieved)
    if idx.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return GammaSet(empty, empty)
    starts = state.lower[idx] + 1
    stops = state.upper[idx]
    keep = stops > starts
    starts, stops = starts[keep], stops[keep]
    order = np.argsort(starts, kind="stable")
    starts, stops = starts[order], stops[order]
    # merge overlapping or touching intervals
    run_max = np.maximum.accumulate(stops)
    new_group = np.ones(starts.size, dtype=bool)
    new_group[1:] = starts[1:] > run_max[:-1]
    merged_starts = starts[new_group]
    merged_stops = np.maximum.reduceat(stops, np.flatnonzero(new_group))
    return GammaSet(merged_starts.astype(np.int64), merged_stops.astype(np.int64))


@dataclass
class RoundRecord:
    index: int
    unachieved_at_start: int
    gamma_length: int
    gamma_intervals: int
    probability: float
    samples: int
    newly_achieved: int
    gamma_bound_ok: bool
    fallback: bool
    sampled_ranks: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    gamma: GammaSet = field(repr=False)

    def to_json(self) -> dict:
        return {"index": self.index, "unachieved_at_start": self.unachieved_at_start,
                "gamma_length": self.gamma_length, "gamma_intervals": self.gamma_intervals,
                "probability": self.probability, "samples": self.samples,
                "newly_achieved": self.newly_achieved, "gamma_bound_ok": self.gamma_bound_ok,
                "fallback": self.fallback}


@dataclass
class PartitionResult:
    algorithm: str
    N: int
    p: int
    epsilon: float
    success: bool
    splitter_ranks: np.ndarray
    splitter_keys: np.ndarray
    bucket_sizes: np.ndarray
    balance_factor: float
    ledger: CostLedger
    per_round: list[RoundRecord]
    fallback_used: bool = False
    config: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.ledger.rounds

    @property
    def total_sample_volume(self) -> int:
        return self.ledger.total_sample_volume

    @property
    def achieved(self) -> np.ndarray:
        return self.splitter_ranks >= 0

    @property
    def gamma_bound_checks(self) -> tuple[int, int]:
        ok = sum(r.gamma_bound_ok for r in self.per_round)
        return ok, len(self.per_round) - ok

    @property
    def kappa(self) -> float:
        """Largest per-superstep volume divided by p."""
        return max((s.volume for s in self.ledger.supersteps), default=0) / self.p

    def report(self) -> dict:
        passed, failed = self.gamma_bound_checks
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "N": self.N,
            "p": self.p,
            "success": self.success,
            "rounds": self.rounds,
            "total_sample_volume": self.total_sample_volume,
            "per_round": [r.to_json() for r in self.per_round],
            "splitter_ranks": [int(r) for r in self.splitter_ranks],
            "balance_factor": self.balance_factor,
            "fallback_used": self.fallback_used,
            "kappa": self.kappa,
            "lemma1_checks": {"pass": passed, "fail": failed},
            "ledger": self.ledger.to_json(),
        }


def _bucket_sizes(ranks: np.ndarray, N: int) -> np.ndarray:
    return np.diff(np.concatenate(([0], ranks, [N])))


def _finish(algorithm: str, state: SplitterState, epsilon: float, ledger: CostLedger,
            rounds: list[RoundRecord], fallback_used: bool, config: dict) -> PartitionResult:
    N, p = state.N, state.p
    success = state.done
    ranks = np.where(state.achieved, state.achieved_rank, -1)
    if success:
        sizes = _bucket_sizes(ranks, N)
        balance = float(sizes.max() / (N / p))
    else:
        sizes = np.empty(0, dtype=np.int64)
        balance = math.nan
    return PartitionResult(algorithm, N, p, epsilon, success, ranks,
                           state.achieved_key.copy(), sizes, balance, ledger, rounds,
                           fallback_used, config)


def _histogram_round(bsp: BSPHarness, data: GlobalInput, state: SplitterState,
                     gamma: GammaSet, q: float, round_index: int, seed: int, epsilon: float,
                     count_broadcast: bool, fallback: bool) -> tuple[SplitterState, GammaSet,
                                                                      RoundRecord]:
    bound_ok = check_gamma_bound(gamma, state, epsilon)
    k = int((~state.achieved).sum())
    local = sample_round(data, gamma, q, round_index, seed)
    sample = bsp.gather_samples(local)
    ranks = bsp.reduce_histogram(sample)
    new_state = update_bounds(state, sample, ranks, epsilon)
    new_gamma = compute_gamma(new_state)
    newly = int(new_state.achieved.sum() - state.achieved.sum())
    if count_broadcast:
        if new_state.done:
            bsp.broadcast_state(data.p - 1)
        else:
            bsp.broadcast_state(newly + 2 * len(new_gamma))
    bsp.close_superstep()
    record = RoundRecord(round_index, k, gamma.total_length, len(gamma), q, int(sample.size),
                         newly, bound_ok, fallback, ranks,
                         state.lower.copy(), state.upper.copy(), gamma)
    return new_state, new_gamma, record


def _iterate(algorithm: str, data: GlobalInput, epsilon: float, seed: int, cap: int,
             probability: Callable[[GammaSet], float], fallback: str, count_broadcast: bool,
             config: dict) -> PartitionResult:
    N, p = data.N, data.p
    bsp = BSPHarness(data)
    state = SplitterState.initial(N, p)
    gamma = compute_gamma(state)
    rounds: list[RoundRecord] = []
    while not state.done and len(rounds) < cap:
        q = probability(gamma)
        state, gamma, rec = _histogram_round(bsp, data, state, gamma, q, len(rounds), seed,
                                             epsilon, count_broadcast, False)
        rounds.append(rec)

    fallback_used = False
    if not state.done:
        if fallback == "fail":
            raise PartitionError(f"{algorithm}: {int((~state.achieved).sum())} splitters "
                                 f"unachieved after {cap} rounds")
        fallback_used = True
        # sample-sort density on the residual gamma; q = 1 afterwards is exhaustive
        q = min(1.0, 3.0 * math.log(p) * p / gamma.total_length)
        while not state.done:
            state, gamma, rec = _histogram_round(bsp, data, state, gamma, q, len(rounds),
                                                 seed, epsilon, count_broadcast, True)
            rounds.append(rec)
            q = 1.0
    return _finish(algorithm, state, epsilon, bsp.ledger, rounds, fallback_used, config)


def run_histogram_partitioning(data: GlobalInput,
                               config: PartitionerConfig | None = None) -> PartitionResult:
    """Sample about c p / log* p keys per round until every splitter is achieved."""
    config = config or PartitionerConfig()
    return _iterate("histopart", data, config.epsilon, config.seed, config.round_cap(data.p),
                    lambda g: per_key_probability(g, data.p, config), config.fallback,
                    config.count_broadcast, asdict(config))


def run_hss_fixed(data: GlobalInput, per_round_budget: int | None = None,
                  epsilon: float = 1.0, seed: int = 0, cap: int | None = None,
                  count_broadcast: bool = True) -> PartitionResult:
    """Same loop with q = min(1, budget / |gamma|); raises PartitionError at the cap."""
    budget = data.p if per_round_budget is None else per_round_budget
    if budget < 1:
        raise ValueError("per-round budget must be >= 1")
    if cap is None:
        cap = 10 + 10 * log_star(data.p)
    config = {"per_round_budget": budget, "epsilon": epsilon, "seed": seed, "cap": cap,
              "count_broadcast": count_broadcast}
    return _iterate("hss_fixed", data, epsilon, seed, cap,
                    lambda g: min(1.0, budget / g.total_length), "fail", count_broadcast, config)


def run_sample_sort(data: GlobalInput, total_samples: int, epsilon: float = 1.0,
                    seed: int = 0, count_broadcast: bool = True) -> PartitionResult:
    """One round: sample each key with probability S/N and histogram once.

    Never raises on a miss; ``success`` is False and unachieved splitters
    carry rank -1.
    """
    N, p = data.N, data.p
    if total_samples < p - 1:
        raise ValueError(f"need at least p-1={p - 1} samples, got {total_samples}")
    config = {"total_samples": total_samples, "epsilon": epsilon, "seed": seed,
              "count_broadcast": count_broadcast}
    bsp = BSPHarness(data)
    state = SplitterState.initial(N, p)
    gamma = compute_gamma(state)
    q = min(1.0, total_samples / N)
    state, _, rec = _histogram_round(bsp, data, state, gamma, q, 0, seed, epsilon,
                                     count_broadcast, False)
    return _finish("sample_sort", state, epsilon, bsp.ledger, [rec], False, config)


def verify_balance(result: PartitionResult, oracle: RankOracle | None = None,
                   epsilon: float | None = None) -> tuple[bool, int]:
    """True iff every bucket (rank gap, with s_0 = 0 and s_p = N) is <= (1+eps) N/p.

    With an oracle, splitter keys are checked against their recorded ranks.
    """
    eps = result.epsilon if epsilon is None else epsilon
    ranks = np.asarray(result.splitter_ranks, dtype=np.int64)
    if ranks.size != result.p - 1 or np.any(ranks < 0):
        return False, -1
    if np.any(np.diff(ranks) < 0):
        raise ValueError("splitter ranks must be sorted")
    if oracle is not None and not np.array_equal(oracle.ranks(result.splitter_keys), ranks):
        return False, -1
    sizes = _bucket_sizes(ranks, result.N)
    max_bucket = int(sizes.max())
    return bool(max_bucket <= (1 + eps) * result.N / result.p), max_bucket


def verify_splitter_ranks(ranks, N: int, p: int, epsilon: float = 1.0) -> tuple[bool, int]:
    """:func:`verify_balance` on bare splitter ranks."""
    ranks = np.asarray(ranks, dtype=np.int64)
    sizes = _bucket_sizes(ranks, N)
    max_bucket = int(sizes.max())
    return bool(max_bucket <= (1 + epsilon) * N / p), max_bucket

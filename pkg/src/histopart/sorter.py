"""Route keys by splitters, sort buckets locally, check the result."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .keyspace import GlobalInput, RankOracle


@dataclass
class SortOutcome:
    buckets: list[np.ndarray]
    max_load: int
    exchange_volume: int
    globally_sorted: bool

    def concatenated(self) -> np.ndarray:
        if not self.buckets:
            return np.empty(0, dtype=np.uint64)
        return np.concatenate(self.buckets)

    def to_json(self) -> dict:
        return {"max_load": self.max_load, "exchange_volume": self.exchange_volume,
                "globally_sorted": self.globally_sorted}


def destinations(keys: np.ndarray, splitter_keys: np.ndarray) -> np.ndarray:
    """Bucket i receives keys with s_{i-1} < key <= s_i."""
    return np.searchsorted(splitter_keys, keys, side="left")


def exchange_and_sort(data: GlobalInput, splitter_keys) -> SortOutcome:
    splitters = np.asarray(splitter_keys, dtype=np.uint64)
    if splitters.size != data.p - 1:
        raise ValueError(f"expected {data.p - 1} splitters, got {splitters.size}")
    if np.any(splitters[1:] < splitters[:-1]):
        raise ValueError("splitter keys must be sorted")
    keys = data.keys_by_processor
    dest = destinations(keys, splitters)
    origin = np.arange(data.p)[:, None]
    moved = int(np.count_nonzero(dest != origin))

    flat_keys = keys.ravel()
    flat_dest = dest.ravel()
    order = np.lexsort((flat_keys, flat_dest))
    counts = np.bincount(flat_dest, minlength=data.p)
    buckets = np.split(flat_keys[order], np.cumsum(counts)[:-1])

    out = np.concatenate(buckets)
    ordered = bool(np.all(out[1:] > out[:-1])) if out.size > 1 else True
    return SortOutcome(buckets, int(counts.max()), moved, ordered)


def verify_sorted(outcome: SortOutcome, oracle: RankOracle) -> bool:
    """True iff the buckets concatenate to the oracle's sorted key sequence."""
    return bool(np.array_equal(outcome.concatenated(), oracle.sorted_keys))

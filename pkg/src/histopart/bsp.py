"""Superstep engine with a communication ledger.

Processor 0 acts as the coordinator: samples are gathered to it, local
histograms are reduced to it and bound updates are broadcast from it. Costs
are counted in keys/entries. A superstep groups one gather, one reduction
and the broadcasts that follow it.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .keyspace import GlobalInput

COORDINATOR = 0


@dataclass(frozen=True)
class SuperstepRecord:
    index: int
    samples_gathered: int
    histogram_entries: int
    broadcast_entries: int
    h: int

    @property
    def volume(self) -> int:
        return self.samples_gathered + self.histogram_entries + self.broadcast_entries

    def to_json(self) -> dict:
        return {"index": self.index, "samples": self.samples_gathered,
                "histogram": self.histogram_entries, "broadcast": self.broadcast_entries,
                "h": self.h}


@dataclass
class CostLedger:
    supersteps: list[SuperstepRecord] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.supersteps)

    @property
    def total_sample_volume(self) -> int:
        return sum(s.samples_gathered for s in self.supersteps)

    @property
    def max_h(self) -> int:
        return max((s.h for s in self.supersteps), default=0)

    def to_json(self) -> dict:
        return {"rounds": self.rounds, "total_sample_volume": self.total_sample_volume,
                "supersteps": [s.to_json() for s in self.supersteps]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class BSPHarness:
    """Simulated all-to-one / one-to-all collectives over a :class:`GlobalInput`."""

    def __init__(self, data: GlobalInput):
        self.data = data
        self.ledger = CostLedger()
        self._reset_counters()

    def _reset_counters(self):
        self._samples = 0
        self._remote_samples = 0
        self._histogram = 0
        self._broadcast = 0

    def gather_samples(self, local_samples) -> np.ndarray:
        """Concatenate per-processor samples at the coordinator, sorted by key.

        Raises ``ValueError`` if the same key arrives twice.
        """
        parts = [np.asarray(s, dtype=np.uint64) for s in local_samples]
        combined = np.sort(np.concatenate(parts)) if parts else np.empty(0, dtype=np.uint64)
        if combined.size > 1 and np.any(combined[1:] == combined[:-1]):
            raise ValueError("duplicate key in gathered sample; keys must be distinct")
        remote = combined.size - (parts[COORDINATOR].size if parts else 0)
        self._samples += int(combined.size)
        self._remote_samples += int(remote)
        return combined

    def reduce_histogram(self, sample: np.ndarray) -> np.ndarray:
        """Global ranks of a sorted ``sample``: the sum of all local histograms.

        Each processor's local histogram is kept in gap form: entry ``g`` counts
        its keys in ``(sample[g-1], sample[g]]``, so its local rank of
        ``sample[j]`` is the prefix sum up to ``j``. Gap vectors are reduced
        by summation and the prefix sum of the total gives the global ranks.
        """
        sample = np.asarray(sample, dtype=np.uint64)
        self._histogram += int(sample.size)
        if not sample.size:
            return np.zeros(0, dtype=np.int64)
        if np.any(sample[1:] < sample[:-1]):
            raise ValueError("sample must be sorted")
        gaps = np.searchsorted(sample, self.data.sorted_local_keys, side="left")
        # bincount over every processor's gap indices == elementwise sum of local gap counts
        total = np.bincount(gaps.ravel(), minlength=sample.size + 1)
        return np.cumsum(total[:sample.size]).astype(np.int64)

    def local_histograms(self, sample: np.ndarray) -> np.ndarray:
        """(p, len(sample)) matrix of local ranks; no ledger effect."""
        sample = np.asarray(sample, dtype=np.uint64)
        return np.stack([np.searchsorted(row, sample, side="right")
                         for row in self.data.sorted_local_keys])

    def broadcast_state(self, payload_entries: int):
        if payload_entries < 0:
            raise ValueError("broadcast payload must be nonnegative")
        self._broadcast += int(payload_entries)

    def close_superstep(self) -> SuperstepRecord:
        # coordinator traffic: remote samples in, histogram entries in, broadcast out
        h = self._remote_samples + self._histogram + self._broadcast
        record = SuperstepRecord(index=self.ledger.rounds, samples_gathered=self._samples,
                                 histogram_entries=self._histogram,
                                 broadcast_entries=self._broadcast, h=h)
        self.ledger.supersteps.append(record)
        self._reset_counters()
        return record

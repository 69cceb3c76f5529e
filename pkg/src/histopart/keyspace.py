"""Distributed inputs and rank oracles.

Keys are distinct and only their order matters. Internally every key is
identified with its global rank ``1..N``; the stored key values are an
order-isomorphic image of the ranks in ``uint64``. For a given ``N`` the
default key universe is fixed, so different layouts of the same ``N`` hold
exactly the same keys.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

_MASK64 = (1 << 64) - 1
_JITTER_BITS = 20


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised SplitMix64 finaliser on ``uint64`` arrays (wraps mod 2^64)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit value (order sensitive)."""
    state = 0
    for part in parts:
        state = int(splitmix64(np.uint64((state ^ (part & _MASK64)) & _MASK64)))
    return state


def default_universe(N: int) -> np.ndarray:
    """Strictly increasing uint64 keys for ranks 1..N.

    key(r) = r * 2^20 + (hash(r) mod 2^20), which is strictly increasing in r.
    """
    if N < 1 or N >= 1 << (64 - _JITTER_BITS - 1):
        raise ValueError(f"N={N} outside the supported range")
    ranks = np.arange(1, N + 1, dtype=np.uint64)
    jitter = splitmix64(ranks) & np.uint64((1 << _JITTER_BITS) - 1)
    return (ranks << np.uint64(_JITTER_BITS)) | jitter


@dataclass(frozen=True)
class RankOracle:
    """Global rank <-> key bijection over a sorted key universe."""

    sorted_keys: np.ndarray

    @property
    def N(self) -> int:
        return int(self.sorted_keys.size)

    def rank(self, key) -> int:
        idx = int(np.searchsorted(self.sorted_keys, np.uint64(key), side="left"))
        if idx >= self.N or int(self.sorted_keys[idx]) != int(key):
            raise KeyError(f"key {key} is not in the input")
        return idx + 1

    def ranks(self, keys) -> np.ndarray:
        """Vectorised :meth:`rank`; every key must exist."""
        keys = np.asarray(keys, dtype=np.uint64)
        idx = np.searchsorted(self.sorted_keys, keys, side="left")
        if keys.size and (np.any(idx >= self.N)
                          or np.any(self.sorted_keys[np.minimum(idx, self.N - 1)] != keys)):
            raise KeyError("some keys are not in the input")
        return idx.astype(np.int64) + 1

    def key_of_rank(self, r: int):
        if not 1 <= r <= self.N:
            raise IndexError(f"rank {r} outside 1..{self.N}")
        return self.sorted_keys[r - 1]

    def keys_of_ranks(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        if ranks.size and (ranks.min() < 1 or ranks.max() > self.N):
            raise IndexError("rank outside 1..N")
        return self.sorted_keys[ranks - 1]


@dataclass(frozen=True)
class GlobalInput:
    """N distinct keys spread over p simulated processors, N/p each.

    ``ranks_by_processor[i]`` lists the global ranks held by processor ``i``
    in its local storage order; ``keys_by_processor`` is the same layout in
    key values.
    """

    N: int
    p: int
    ranks_by_processor: np.ndarray
    universe: np.ndarray
    layout_tag: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        ranks = self.ranks_by_processor
        if self.p < 1 or self.N % self.p:
            raise ValueError(f"p={self.p} must divide N={self.N}")
        if ranks.shape != (self.p, self.N // self.p):
            raise ValueError(f"layout shape {ranks.shape} != ({self.p}, {self.N // self.p})")
        if self.universe.shape != (self.N,) or np.any(np.diff(self.universe) <= 0):
            raise ValueError("key universe must be N strictly increasing keys")
        seen = np.zeros(self.N + 1, dtype=bool)
        flat = ranks.ravel()
        if flat.min() < 1 or flat.max() > self.N:
            raise ValueError("ranks outside 1..N")
        seen[flat] = True
        if not seen[1:].all():
            raise ValueError("layout is not a permutation of 1..N (duplicate or missing keys)")

        owner = np.empty(self.N + 1, dtype=np.int64)
        owner[0] = -1
        owner[ranks] = np.arange(self.p)[:, None]
        keys = self.universe[ranks - 1]
        sorted_local = np.sort(keys, axis=1)
        for arr in (ranks, owner, keys, sorted_local, self.universe):
            arr.setflags(write=False)
        object.__setattr__(self, "_owner", owner)
        object.__setattr__(self, "_keys", keys)
        object.__setattr__(self, "_sorted_local", sorted_local)
        object.__setattr__(self, "_oracle", RankOracle(self.universe))

    @property
    def n_local(self) -> int:
        return self.N // self.p

    @property
    def keys_by_processor(self) -> np.ndarray:
        return self._keys

    @property
    def sorted_local_keys(self) -> np.ndarray:
        """Each processor's keys in ascending order (rows)."""
        return self._sorted_local

    @property
    def owner_of_rank(self) -> np.ndarray:
        """``owner_of_rank[r]`` is the processor holding rank ``r`` (index 0 unused)."""
        return self._owner

    @property
    def oracle(self) -> RankOracle:
        return self._oracle

    def local_rank(self, proc: int, key) -> int:
        """Number of keys on ``proc`` that are <= ``key``."""
        return int(np.searchsorted(self._sorted_local[proc], np.uint64(key), side="right"))

    def manifest(self) -> dict[str, Any]:
        return {"N": self.N, "p": self.p, **self.layout_tag}


def rank(oracle: RankOracle, key) -> int:
    return oracle.rank(key)


def key_of_rank(oracle: RankOracle, r: int):
    return oracle.key_of_rank(r)


def local_rank(data: GlobalInput, proc: int, key) -> int:
    return data.local_rank(proc, key)


def _check_divisible(N: int, p: int):
    if p < 2:
        raise ValueError(f"need at least 2 processors, got p={p}")
    if N < p or N % p:
        raise ValueError(f"p={p} must divide N={N}")


def gen_uniform(N: int, p: int, seed: int, universe: np.ndarray | None = None) -> GlobalInput:
    """Random permutation of the key universe dealt into p equal local sequences."""
    _check_divisible(N, p)
    rng = np.random.default_rng(seed)
    ranks = rng.permutation(np.arange(1, N + 1, dtype=np.int64)).reshape(p, N // p)
    return GlobalInput(N, p, ranks, default_universe(N) if universe is None else universe,
                       {"generator": "uniform", "seed": seed})


def default_parts(N: int, p: int) -> int:
    """Largest divisor C of p with C <= floor(sqrt(p)) and pC | N."""
    for C in range(math.isqrt(p), 0, -1):
        if p % C == 0 and N % (p * C) == 0:
            return C
    raise ValueError(f"no valid part count for N={N}, p={p}")


def gen_adversarial(N: int, p: int, C: int | None, seed: int,
                    universe: np.ndarray | None = None) -> GlobalInput:
    """Three-level adversarial layout.

    The sorted order is cut into p intervals, grouped into C parts of p/C
    consecutive intervals; each interval is cut into C subintervals of
    N/(pC) keys. Within each part the p subintervals go to the p processors
    through a uniform random bijection, so every processor receives exactly
    one subinterval of every part.
    """
    _check_divisible(N, p)
    if C is None:
        C = default_parts(N, p)
    if C < 1 or p % C:
        raise ValueError(f"C={C} must divide p={p}")
    if N % (p * C):
        raise ValueError(f"p*C={p * C} must divide N={N}")
    rng = np.random.default_rng(seed)
    sub_len = N // (p * C)
    # assignment[part, s] = processor receiving subinterval s of that part
    assignment = np.stack([rng.permutation(p) for _ in range(C)])
    ranks = np.empty((p, N // p), dtype=np.int64)
    offsets = np.arange(sub_len, dtype=np.int64)
    for part in range(C):
        part_start = part * (N // C)
        for s in range(p):
            proc = assignment[part, s]
            first = part_start + s * sub_len + 1
            ranks[proc, part * sub_len:(part + 1) * sub_len] = first + offsets
    tag = {"generator": "adversarial", "seed": seed, "C": C,
           "assignment": assignment.tolist()}
    return GlobalInput(N, p, ranks, default_universe(N) if universe is None else universe, tag)


def gen_skewed(N: int, p: int, seed: int, mode: str = "sorted_blocks") -> GlobalInput:
    """Stress layouts.

    ``sorted_blocks``: processor i holds ranks i*N/p+1 .. (i+1)*N/p.
    ``zipf_gaps``: keys are partial sums of Zipf-distributed gaps, dealt at random.
    """
    _check_divisible(N, p)
    if mode == "sorted_blocks":
        ranks = np.arange(1, N + 1, dtype=np.int64).reshape(p, N // p)
        return GlobalInput(N, p, ranks, default_universe(N),
                           {"generator": "skewed", "mode": mode, "seed": seed})
    if mode == "zipf_gaps":
        rng = np.random.default_rng(seed)
        gaps = np.minimum(rng.zipf(1.5, size=N), 1 << 32).astype(np.uint64)
        universe = np.cumsum(gaps, dtype=np.uint64)
        ranks = rng.permutation(np.arange(1, N + 1, dtype=np.int64)).reshape(p, N // p)
        return GlobalInput(N, p, ranks, universe,
                           {"generator": "skewed", "mode": mode, "seed": seed})
    raise ValueError(f"unknown skew mode {mode!r}")


def make_input(workload: str, N: int, p: int, seed: int, C: int | None = None) -> GlobalInput:
    """Build an input from a workload name: uniform, adversarial, skewed:<mode>."""
    if workload == "uniform":
        return gen_uniform(N, p, seed)
    if workload == "adversarial":
        return gen_adversarial(N, p, C, seed)
    if workload.startswith("skewed"):
        _, _, mode = workload.partition(":")
        return gen_skewed(N, p, seed, mode or "sorted_blocks")
    raise ValueError(f"unknown workload {workload!r}")


def audit_adversarial(data: GlobalInput, C: int) -> dict[str, Any]:
    """Check the adversarial layout's structure from the ranks alone."""
    N, p = data.N, data.p
    sub_len = N // (p * C)
    per_proc_ok = bool(np.all([row.size == N // p for row in data.ranks_by_processor]))
    subinterval = (data.ranks_by_processor - 1) // sub_len       # global subinterval id
    part = (data.ranks_by_processor - 1) // (N // C)
    one_per_pair = True
    complete = True
    for proc in range(p):
        subs = subinterval[proc]
        parts = part[proc]
        for c in range(C):
            ids = np.unique(subs[parts == c])
            if ids.size != 1:
                one_per_pair = False
                continue
            if np.count_nonzero(subs == ids[0]) != sub_len:
                complete = False
    return {
        "N": N, "p": p, "C": C,
        "subinterval_length": sub_len,
        "one_subinterval_per_processor_part": one_per_pair,
        "subintervals_complete": complete,
        "keys_per_processor": per_proc_ok,
        "pass": one_per_pair and complete and per_proc_ok,
    }


def dump_input(data: GlobalInput, directory) -> Path:
    """Write ``proc_<i>.txt`` (one decimal key per line) and ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, row in enumerate(data.keys_by_processor):
        (directory / f"proc_{i}.txt").write_text("".join(f"{int(k)}\n" for k in row))
    manifest = data.manifest()
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return directory


def load_input(directory) -> GlobalInput:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    N, p = int(manifest.pop("N")), int(manifest.pop("p"))
    rows = []
    for i in range(p):
        text = (directory / f"proc_{i}.txt").read_text().split()
        rows.append(np.array([int(t) for t in text], dtype=np.uint64))
    keys = np.stack(rows)
    universe = np.sort(keys.ravel())
    ranks = np.searchsorted(universe, keys).astype(np.int64) + 1
    return GlobalInput(N, p, ranks, universe, manifest)

"""Iterated logarithm, falling factorials and run-count statistics.

The run statistics describe random arrangements of ``m1`` elements of kind
``a`` and ``m2`` elements of kind ``b``: how many maximal blocks of ``a``'s
have length at least ``k``. Closed forms (Mood's formulas) are checked
against an exhaustive enumeration oracle and a seeded Monte Carlo sampler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

ENUMERATION_LIMIT = 20


def log_star(x) -> int:
    """Iterated natural logarithm.

    ``log_star(x) = 0`` for ``x <= 1`` and ``1 + log_star(ln x)`` otherwise.
    ``mpmath.mpf`` arguments are iterated in mpmath so values beyond the float
    range (e.g. ``e↑↑4``) are handled.
    """
    try:
        import mpmath
    except ImportError:  # pragma: no cover
        mpmath = None

    if mpmath is not None and isinstance(x, mpmath.mpf):
        if not mpmath.isfinite(x) or x <= 0:
            raise ValueError(f"log_star needs a positive finite value, got {x}")
        log = mpmath.log
    else:
        if isinstance(x, bool):
            raise TypeError("log_star does not accept booleans")
        if isinstance(x, int):
            if x <= 0:
                raise ValueError(f"log_star needs a positive value, got {x}")
        else:
            x = float(x)
            if not math.isfinite(x) or x <= 0:
                raise ValueError(f"log_star needs a positive finite value, got {x}")
        log = math.log

    count = 0
    while x > 1:
        x = log(x)
        count += 1
    return count


def falling_factorial(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1), with n^(0) = 1 and 0 whenever k > n."""
    if n < 0 or k < 0:
        raise ValueError(f"falling_factorial needs nonnegative arguments, got ({n}, {k})")
    # math.perm is exact (big ints) and already returns 0 for k > n
    return math.perm(n, k)


@dataclass(frozen=True)
class RunsModel:
    """Random arrangement of ``m1`` a's and ``m2`` b's; count a-runs of length >= k."""

    m1: int
    m2: int
    k: int

    def __post_init__(self):
        if self.m1 < 0 or self.m2 < 0:
            raise ValueError(f"element counts must be nonnegative: m1={self.m1}, m2={self.m2}")
        if self.k < 1:
            raise ValueError(f"minimum run length k must be >= 1, got {self.k}")

    @property
    def m(self) -> int:
        return self.m1 + self.m2


def _expectation_exact(model: RunsModel) -> Fraction:
    m1, m2, k, m = model.m1, model.m2, model.k, model.m
    if m < 1:
        raise ValueError("runs statistics need at least one element")
    denom = falling_factorial(m, k)
    if denom == 0:
        raise ValueError(f"k={k} exceeds arrangement length m={m}")
    return Fraction((m2 + 1) * falling_factorial(m1, k), denom)


def _variance_exact(model: RunsModel) -> Fraction:
    mean = _expectation_exact(model)
    m1, m2, k, m = model.m1, model.m2, model.k, model.m
    pair_num = falling_factorial(m2 + 1, 2) * falling_factorial(m1, 2 * k)
    if pair_num == 0:
        pair_term = Fraction(0)
    else:
        # m1 <= m, so a nonzero m1^(2k) implies a nonzero m^(2k)
        pair_term = Fraction(pair_num, falling_factorial(m, 2 * k))
    return pair_term + mean * (1 - mean)


def runs_expectation(model: RunsModel, exact: bool = False):
    """Expected number of a-runs of length >= k: (m2+1) m1^(k) / m^(k).

    Evaluated in integer arithmetic and rounded once; ``exact=True`` returns
    the :class:`~fractions.Fraction`.
    """
    value = _expectation_exact(model)
    return value if exact else float(value)


def runs_variance(model: RunsModel, exact: bool = False):
    """Variance of the number of a-runs of length >= k.

    (m2+1)^(2) m1^(2k) / m^(2k) + E (1 - E). The first term is taken as 0
    whenever m1^(2k) = 0.
    """
    value = _variance_exact(model)
    return value if exact else float(value)


def count_long_runs(arrangement, k: int) -> int:
    """Number of maximal runs of truthy entries with length >= k."""
    count = 0
    length = 0
    for item in arrangement:
        if item:
            length += 1
        else:
            if length >= k:
                count += 1
            length = 0
    if length >= k:
        count += 1
    return count


def runs_enumeration_oracle(model: RunsModel) -> tuple[Fraction, Fraction]:
    """Exact mean and variance by enumerating all C(m, m1) arrangements."""
    m = model.m
    if m > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to m <= {ENUMERATION_LIMIT}, got m={m}")
    total = 0
    total_sq = 0
    n_arrangements = 0
    for positions in combinations(range(m), model.m1):
        arrangement = [False] * m
        for pos in positions:
            arrangement[pos] = True
        s = count_long_runs(arrangement, model.k)
        total += s
        total_sq += s * s
        n_arrangements += 1
    mean = Fraction(total, n_arrangements)
    variance = Fraction(total_sq, n_arrangements) - mean * mean
    return mean, variance


def _long_runs_per_row(block: np.ndarray, k: int) -> np.ndarray:
    rows, m = block.shape
    padded = np.zeros((rows, m + 2), dtype=np.int8)
    padded[:, 1:-1] = block
    edges = np.diff(padded, axis=1)
    start_r, start_c = np.nonzero(edges == 1)
    _, end_c = np.nonzero(edges == -1)
    # np.nonzero is row-major, so starts and ends pair up in order
    long_rows = start_r[(end_c - start_c) >= k]
    return np.bincount(long_rows, minlength=rows)


def runs_monte_carlo(model: RunsModel, trials: int, seed: int,
                     chunk: int = 4096) -> tuple[float, float]:
    """Empirical mean and (unbiased) variance of the long-run count.

    Arrangements are uniform shuffles drawn from ``np.random.default_rng(seed)``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    rng = np.random.default_rng(seed)
    base = np.zeros(model.m, dtype=np.int8)
    base[:model.m1] = 1
    counts = np.empty(trials, dtype=np.int64)
    done = 0
    while done < trials:
        rows = min(chunk, trials - done)
        block = rng.permuted(np.broadcast_to(base, (rows, model.m)), axis=1)
        counts[done:done + rows] = _long_runs_per_row(block, model.k)
        done += rows
    mean = float(counts.mean())
    variance = float(counts.var(ddof=1)) if trials > 1 else 0.0
    return mean, variance

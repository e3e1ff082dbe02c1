"""Numeric substrate: matrices, reproducible random streams, order statistics.

Every stochastic step in the package draws from an :class:`RngStream`, a
xoshiro256** generator seeded through splitmix64.  The generator core is
compiled with numba so that shuffling tens of thousands of weights or running
millions of swap attempts stays cheap while remaining bit-for-bit reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit
from scipy.stats import rankdata

MASK64 = (1 << 64) - 1


class EmptySample(ValueError):
    pass


class DegenerateRanks(ValueError):
    pass


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def as_matrix(values, copy: bool = True) -> np.ndarray:
    """Validate and return a finite 2-D float64 array (rows >= 1, cols >= 1)."""
    m = np.array(values, dtype=np.float64) if copy else np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def _next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def _fill_u64(s, out):
    for i in range(out.shape[0]):
        out[i] = _next(s)


@njit(cache=True)
def _fill_uniform(s, out):
    scale = 1.0 / 9007199254740992.0  # 2**-53
    for i in range(out.shape[0]):
        out[i] = (_next(s) >> np.uint64(11)) * scale


@njit(cache=True)
def _below(s, bound):
    # Unbiased integer in [0, bound) by masked rejection.
    if bound <= 1:
        return 0
    b = np.uint64(bound - 1)
    mask = b
    mask |= mask >> np.uint64(1)
    mask |= mask >> np.uint64(2)
    mask |= mask >> np.uint64(4)
    mask |= mask >> np.uint64(8)
    mask |= mask >> np.uint64(16)
    mask |= mask >> np.uint64(32)
    while True:
        x = _next(s) & mask
        if x <= b:
            return np.int64(x)


@njit(cache=True)
def _fill_below(s, bound, out):
    for i in range(out.shape[0]):
        out[i] = _below(s, bound)


@njit(cache=True)
def _shuffle(s, a):
    for i in range(a.shape[0] - 1, 0, -1):
        j = _below(s, i + 1)
        tmp = a[i]
        a[i] = a[j]
        a[j] = tmp


@njit(cache=True)
def _shuffle_segments(s, a, starts, stops):
    # Independent Fisher-Yates on each slice a[starts[k]:stops[k]].
    for k in range(starts.shape[0]):
        lo = starts[k]
        for i in range(stops[k] - 1, lo, -1):
            j = lo + _below(s, i - lo + 1)
            tmp = a[i]
            a[i] = a[j]
            a[j] = tmp


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step on a Python int; returns ``(new_state, output)``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def derive_seed(base_seed: int, *labels: int) -> int:
    """Fold integer labels into ``base_seed`` to name an independent substream family."""
    x = base_seed & MASK64
    for label in labels:
        x, out = splitmix64(x ^ (label & MASK64))
        x = out
    return x


class RngStream:
    """xoshiro256** stream seeded from ``splitmix64(base_seed + stream_index)``.

    A stream is stateful and must not be shared between concurrent tasks;
    make one per task with a distinct ``stream_index`` instead.
    """

    def __init__(self, base_seed: int, stream_index: int = 0):
        self.origin_seed = (base_seed + stream_index) & MASK64
        x = self.origin_seed
        words = []
        for _ in range(4):
            x, out = splitmix64(x)
            words.append(out)
        self.state = np.array(words, dtype=np.uint64)

    def __repr__(self) -> str:
        return f"RngStream(origin_seed={self.origin_seed:#x})"

    def next_u64(self, size: int = 1) -> np.ndarray:
        out = np.empty(size, dtype=np.uint64)
        _fill_u64(self.state, out)
        return out

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int = 1) -> np.ndarray:
        """Uniform reals on [low, high) from the top 53 bits of each draw."""
        out = np.empty(size, dtype=np.float64)
        _fill_uniform(self.state, out)
        if low != 0.0 or high != 1.0:
            out = low + (high - low) * out
        return out

    def integers(self, bound: int, size: int = 1) -> np.ndarray:
        """Unbiased integers on [0, bound)."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        out = np.empty(size, dtype=np.int64)
        _fill_below(self.state, np.int64(bound), out)
        return out

    def shuffle(self, a: np.ndarray) -> None:
        """Fisher-Yates shuffle of a 1-D numpy array in place."""
        if a.ndim != 1:
            raise ValueError("shuffle expects a 1-D array")
        if a.shape[0] > 1:
            _shuffle(self.state, a)

    def permutation(self, n: int) -> np.ndarray:
        idx = np.arange(n, dtype=np.int64)
        self.shuffle(idx)
        return idx

    def shuffle_segments(self, a: np.ndarray, starts: np.ndarray, stops: np.ndarray) -> None:
        """Shuffle each slice ``a[starts[k]:stops[k]]`` independently, in order of k."""
        _shuffle_segments(
            self.state, a, np.asarray(starts, dtype=np.int64), np.asarray(stops, dtype=np.int64)
        )


def rng_new(base_seed: int, stream_index: int = 0) -> RngStream:
    return RngStream(base_seed, stream_index)


def permute_in_place(items, rng: RngStream):
    """Fisher-Yates permutation (descending index) of a mutable sequence.

    numpy arrays are shuffled in place by the compiled kernel; other mutable
    sequences are permuted via an index permutation drawn the same way, so the
    resulting order is identical for equal-length inputs.
    """
    if len(items) == 0:
        raise ValueError("items must be nonempty")
    if isinstance(items, np.ndarray) and items.ndim == 1:
        rng.shuffle(items)
        return items
    order = rng.permutation(len(items))
    permuted = [items[i] for i in order]
    items[:] = permuted
    return items


# ---------------------------------------------------------------------------
# Order statistics and correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuartileSummary:
    median: float
    q1: float
    q3: float
    n: int


def quartiles(xs: Sequence[float]) -> QuartileSummary:
    """Median and quartiles by linear interpolation at positions p*(n-1)."""
    a = np.asarray(xs, dtype=np.float64).ravel()
    if a.size == 0:
        raise EmptySample("quartiles of an empty sample")
    if not np.all(np.isfinite(a)):
        raise ValueError("sample contains non-finite values")
    q1, med, q3 = np.quantile(a, [0.25, 0.5, 0.75], method="linear")
    return QuartileSummary(median=float(med), q1=float(q1), q3=float(q3), n=int(a.size))


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("spearman needs at least two observations")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateRanks("all ranks tied in at least one argument")
    rho = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(rho, -1.0, 1.0))


def std_dev(xs: Sequence[float]) -> float:
    """Population standard deviation (divides by n)."""
    a = np.asarray(xs, dtype=np.float64).ravel()
    if a.size < 2:
        raise ValueError("std_dev needs at least two values")
    return float(np.sqrt(np.mean((a - a.mean()) ** 2)))

"""Seven bipartite null models (kinds A-G) for signed weight matrices.

All kinds keep the support (the set of nonzero positions) fixed and move
values only among support positions.  They differ in what is held constant:

====  =======================================================================
A     signed values shuffled over the whole support
B     sign pattern fixed; magnitudes shuffled among all positive cells and
      among all negative cells
C     per column (left / input node): signed values shuffled within the column
D     per row (right / output node): signed values shuffled within the row
E     sign pattern fixed; magnitudes shuffled within each column, per sign
F     sign pattern fixed; magnitudes shuffled within each row, per sign
G     sign pattern rewired by checkerboard swaps (signed degrees of every
      node kept); magnitudes shuffled over the whole support
====  =======================================================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .bipartite import NoEdges, sign_pattern
from .core import RngStream, _below, as_matrix, rng_new

KINDS = ("A", "B", "C", "D", "E", "F", "G")


@dataclass(frozen=True)
class RewireConfig:
    swap_attempts_per_edge: int = 100

    def __post_init__(self):
        if self.swap_attempts_per_edge < 1:
            raise ValueError("swap_attempts_per_edge must be >= 1")


def _prepare(layer) -> tuple[np.ndarray, np.ndarray]:
    w = as_matrix(layer)
    pos = np.flatnonzero(w)
    if pos.size == 0:
        raise NoEdges("cannot randomize a layer without edges")
    return w, pos


def _shuffle_groups(w: np.ndarray, pos: np.ndarray, keys: list[np.ndarray],
                    rng: RngStream) -> np.ndarray:
    """Permute ``w`` values at flat positions ``pos`` within groups of equal keys.

    Groups are visited in lexicographic key order and positions inside a
    group in row-major order, so the draw sequence is fully determined.
    """
    if keys:
        order = np.lexsort([pos] + keys[::-1])
        pos = pos[order]
        stacked = np.stack([k[order] for k in keys])
        change = np.any(stacked[:, 1:] != stacked[:, :-1], axis=0)
        starts = np.concatenate(([0], np.flatnonzero(change) + 1))
    else:
        starts = np.array([0])
    stops = np.concatenate((starts[1:], [pos.size]))
    vals = w.flat[pos].copy()
    rng.shuffle_segments(vals, starts, stops)
    out = w.copy()
    out.flat[pos] = vals
    return out


def _coords(w: np.ndarray, pos: np.ndarray):
    rows, cols = np.unravel_index(pos, w.shape)
    signs = (w.flat[pos] > 0).astype(np.int64)
    return rows, cols, signs


def randomize_a(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    return _shuffle_groups(w, pos, [], rng)


def randomize_b(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    _, _, signs = _coords(w, pos)
    return _shuffle_groups(w, pos, [signs], rng)


def randomize_c(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    _, cols, _ = _coords(w, pos)
    return _shuffle_groups(w, pos, [cols], rng)


def randomize_d(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    rows, _, _ = _coords(w, pos)
    return _shuffle_groups(w, pos, [rows], rng)


def randomize_e(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    _, cols, signs = _coords(w, pos)
    return _shuffle_groups(w, pos, [cols, signs], rng)


def randomize_f(layer, rng: RngStream) -> np.ndarray:
    w, pos = _prepare(layer)
    rows, _, signs = _coords(w, pos)
    return _shuffle_groups(w, pos, [rows, signs], rng)


@njit(cache=True)
def _checkerboard_swaps(s, positive, present, attempts):
    n_rows, n_cols = positive.shape
    swaps = 0
    for _ in range(attempts):
        r1 = _below(s, n_rows)
        r2 = _below(s, n_rows - 1)
        if r2 >= r1:
            r2 += 1
        c1 = _below(s, n_cols)
        c2 = _below(s, n_cols - 1)
        if c2 >= c1:
            c2 += 1
        if not (present[r1, c1] and present[r1, c2] and present[r2, c1] and present[r2, c2]):
            continue
        a = positive[r1, c1]
        if a == positive[r2, c2] and a != positive[r1, c2] and positive[r1, c2] == positive[r2, c1]:
            # Lazy step: without it a lone checkerboard flips back on every even count.
            if _below(s, 2) == 0:
                continue
            positive[r1, c1] = 1 - a
            positive[r2, c2] = 1 - a
            positive[r1, c2] = a
            positive[r2, c1] = a
            swaps += 1
    return swaps


def rewire_sign_pattern(pattern, config: RewireConfig = RewireConfig(),
                        rng: RngStream | None = None) -> np.ndarray:
    """Checkerboard-swap MCMC on the positive indicator, restricted to the support.

    Each found checkerboard is swapped with probability 1/2, which keeps the
    chain aperiodic.

    Every row and column keeps its count of +1 and -1 entries; zeros never move.
    """
    pat = np.asarray(pattern)
    present = pat != 0
    n_edges = int(present.sum())
    if n_edges == 0:
        raise NoEdges("sign pattern has no edges")
    if rng is None:
        raise ValueError("rewire_sign_pattern needs an RngStream")
    positive = (pat > 0).astype(np.int8)
    if pat.shape[0] >= 2 and pat.shape[1] >= 2:
        attempts = config.swap_attempts_per_edge * n_edges
        _checkerboard_swaps(rng.state, positive, present, np.int64(attempts))
    out = np.where(positive == 1, 1, -1).astype(np.int8)
    out[~present] = 0
    return out


def randomize_g(layer, rng: RngStream, config: RewireConfig = RewireConfig()) -> np.ndarray:
    w, pos = _prepare(layer)
    pattern = rewire_sign_pattern(sign_pattern(w), config, rng)
    mags = np.abs(w.flat[pos])
    rng.shuffle(mags)
    out = np.zeros_like(w)
    out.flat[pos] = pattern.flat[pos] * mags
    return out


_DISPATCH = {
    "A": randomize_a,
    "B": randomize_b,
    "C": randomize_c,
    "D": randomize_d,
    "E": randomize_e,
    "F": randomize_f,
}


def randomize(layer, kind: str, rng: RngStream, config: RewireConfig = RewireConfig()) -> np.ndarray:
    kind = kind.upper()
    if kind == "G":
        return randomize_g(layer, rng, config)
    try:
        fn = _DISPATCH[kind]
    except KeyError:
        raise ValueError(f"unknown randomization kind {kind!r}; expected one of {KINDS}") from None
    return fn(layer, rng)


def randomize_matrices(matrices, kind: str, seed: int,
                       config: RewireConfig = RewireConfig()) -> list[np.ndarray]:
    """Randomize each matrix independently on substream ``(seed, matrix index)``."""
    return [randomize(m, kind, rng_new(seed, i), config) for i, m in enumerate(matrices)]

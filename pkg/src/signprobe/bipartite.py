"""A weight matrix read as a signed, weighted bipartite graph.

Orientation: rows are right-side (output) nodes R, columns are left-side
(input) nodes L, so ``W[i, j]`` is the edge from input ``j`` to output ``i``.
Exact zeros are absent edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_matrix

SIDES = ("L", "R")


class NoEdges(ValueError):
    pass


@dataclass(frozen=True)
class DegreeProfile:
    side: str
    k_plus: np.ndarray
    k_minus: np.ndarray


@dataclass(frozen=True)
class StrengthProfile:
    side: str
    s_plus: np.ndarray
    s_minus: np.ndarray


def _axis(side: str) -> int:
    # Summing over columns gives one value per row (R nodes) and vice versa.
    if side == "R":
        return 1
    if side == "L":
        return 0
    raise ValueError(f"side must be 'L' or 'R', got {side!r}")


def degrees(layer, side: str) -> DegreeProfile:
    w = as_matrix(layer, copy=False)
    ax = _axis(side)
    return DegreeProfile(side, (w > 0).sum(axis=ax), (w < 0).sum(axis=ax))


def strengths(layer, side: str) -> StrengthProfile:
    w = as_matrix(layer, copy=False)
    ax = _axis(side)
    return StrengthProfile(side, np.where(w > 0, w, 0.0).sum(axis=ax),
                           np.where(w < 0, -w, 0.0).sum(axis=ax))


def alpha(layer) -> float:
    """Fraction of edges (nonzero entries) that are positive."""
    w = as_matrix(layer, copy=False)
    n_edges = int(np.count_nonzero(w))
    if n_edges == 0:
        raise NoEdges("layer has no nonzero entries")
    return int((w > 0).sum()) / n_edges


def sign_pattern(layer) -> np.ndarray:
    """Elementwise sign as an int8 matrix of {-1, 0, +1}."""
    return np.sign(as_matrix(layer, copy=False)).astype(np.int8)


def support(layer) -> np.ndarray:
    return as_matrix(layer, copy=False) != 0

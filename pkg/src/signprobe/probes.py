"""Direct weight perturbations: pruning, binarization, noise, sign flipping.

Each probe acts jointly on a list of in-scope matrices (by default both MLP
weight matrices) and never touches biases.  Magnitude ranking is global over
the concatenated row-major entries of the scoped matrices; ties are broken
by (matrix index, row, column), which a stable sort on the concatenation
gives for free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import RngStream
from .mlp import WEIGHT_NAMES, MlpModel
from .randomize import KINDS, RewireConfig, randomize_matrices

# Guards floor(p * n) against representation error, e.g. 0.29 * 100.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class Prune:
    p: float
    scope: tuple = WEIGHT_NAMES

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"prune fraction must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class Binarize:
    scope: tuple = WEIGHT_NAMES


@dataclass(frozen=True)
class Noise:
    a: float
    scope: tuple = WEIGHT_NAMES

    def __post_init__(self):
        if not self.a >= 0.0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.a}")


@dataclass(frozen=True)
class SignFlip:
    q: float
    scope: tuple = WEIGHT_NAMES

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"flip fraction must lie in [0, 1], got {self.q}")


@dataclass(frozen=True)
class Randomize:
    kind: str
    scope: tuple = WEIGHT_NAMES
    rewire: RewireConfig = RewireConfig()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"randomization kind must be one of {KINDS}, got {self.kind!r}")


ProbeSpec = Union[Prune, Binarize, Noise, SignFlip, Randomize]


def parse_probe(text: str) -> ProbeSpec:
    """Parse ``prune:0.3``, ``binarize``, ``noise:0.05``, ``flip:0.2`` or ``randomize:B``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    try:
        if name == "binarize" and not arg:
            return Binarize()
        if name == "prune":
            return Prune(float(arg))
        if name == "noise":
            return Noise(float(arg))
        if name in ("flip", "signflip"):
            return SignFlip(float(arg))
        if name == "randomize":
            return Randomize(arg.upper())
    except ValueError as exc:
        raise ValueError(f"malformed probe spec {text!r}: {exc}") from None
    raise ValueError(f"malformed probe spec {text!r}")


# ---------------------------------------------------------------------------
# Matrix-list primitives
# ---------------------------------------------------------------------------

def _flatten(matrices) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    mats = [np.asarray(m, dtype=np.float64) for m in matrices]
    return np.concatenate([m.ravel() for m in mats]), [m.shape for m in mats]


def _unflatten(flat: np.ndarray, shapes) -> list[np.ndarray]:
    out, start = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        out.append(flat[start:start + size].reshape(shape).copy())
        start += size
    return out


def _smallest_first(flat: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(flat)
    return nz[np.argsort(np.abs(flat[nz]), kind="stable")]


def _count(fraction: float, n: int) -> int:
    return min(n, math.floor(fraction * n + _FLOOR_EPS))


def prune_matrices(matrices, p: float) -> list[np.ndarray]:
    flat, shapes = _flatten(matrices)
    order = _smallest_first(flat)
    flat[order[:_count(p, order.size)]] = 0.0
    return _unflatten(flat, shapes)


def binarize_matrices(matrices) -> list[np.ndarray]:
    return [np.sign(np.asarray(m, dtype=np.float64)) for m in matrices]


def noise_matrices(matrices, a: float, rng: RngStream) -> list[np.ndarray]:
    flat, shapes = _flatten(matrices)
    nz = np.flatnonzero(flat)
    flat[nz] += rng.uniform(-a, a, size=nz.size)
    return _unflatten(flat, shapes)


def flip_matrices(matrices, q: float) -> list[np.ndarray]:
    flat, shapes = _flatten(matrices)
    order = _smallest_first(flat)
    chosen = order[:_count(q, order.size)]
    flat[chosen] = -flat[chosen]
    return _unflatten(flat, shapes)


def apply_to_matrices(matrices, spec: ProbeSpec, rng: RngStream | None = None) -> list[np.ndarray]:
    if isinstance(spec, Prune):
        return prune_matrices(matrices, spec.p)
    if isinstance(spec, Binarize):
        return binarize_matrices(matrices)
    if isinstance(spec, SignFlip):
        return flip_matrices(matrices, spec.q)
    if rng is None:
        raise ValueError(f"{type(spec).__name__} needs an RngStream")
    if isinstance(spec, Noise):
        return noise_matrices(matrices, spec.a, rng)
    if isinstance(spec, Randomize):
        seed = int(rng.next_u64()[0])
        return randomize_matrices(matrices, spec.kind, seed, spec.rewire)
    raise TypeError(f"unknown probe {spec!r}")


# ---------------------------------------------------------------------------
# Model-level probes
# ---------------------------------------------------------------------------

def _on_model(model: MlpModel, scope, fn) -> MlpModel:
    scope = tuple(scope)
    new = fn(model.weights(scope))
    return model.replace(**dict(zip(scope, new)))


def prune(model: MlpModel, p: float, scope=WEIGHT_NAMES) -> MlpModel:
    return _on_model(model, scope, lambda ms: prune_matrices(ms, Prune(p).p))


def binarize(model: MlpModel, scope=WEIGHT_NAMES) -> MlpModel:
    return _on_model(model, scope, binarize_matrices)


def inject_noise(model: MlpModel, a: float, rng: RngStream, scope=WEIGHT_NAMES) -> MlpModel:
    a = Noise(a).a
    return _on_model(model, scope, lambda ms: noise_matrices(ms, a, rng))


def flip_signs(model: MlpModel, q: float, scope=WEIGHT_NAMES) -> MlpModel:
    return _on_model(model, scope, lambda ms: flip_matrices(ms, SignFlip(q).q))


def randomize_model(model: MlpModel, kind: str, rng: RngStream, scope=WEIGHT_NAMES,
                    config: RewireConfig = RewireConfig()) -> MlpModel:
    return _on_model(model, scope, lambda ms: apply_to_matrices(ms, Randomize(kind, tuple(scope), config), rng))


def apply_probe(model: MlpModel, spec: ProbeSpec, rng: RngStream | None = None) -> MlpModel:
    """Apply ``spec`` to a copy of ``model``; the input is never modified."""
    return _on_model(model, spec.scope, lambda ms: apply_to_matrices(ms, spec, rng))

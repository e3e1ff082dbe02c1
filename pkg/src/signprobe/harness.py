"""Experiment orchestration: probe sweeps over replications and task-complexity matrices.

Replication ``r`` of a task always trains on substream ``r`` of a seed derived
from ``(base_seed, class_a, class_b, hidden_dim)``, so a model is the same no
matter which sweep asks for it, in which order, or in which worker process.
Probe randomness (noise draws, randomizations) uses separate derived seeds,
again indexed by replication.
"""
from __future__ import annotations

import csv
import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import QuartileSummary, derive_seed, quartiles, rng_new, spearman
from .data import ImageDataset, PairTask, make_pair_task
from .mlp import MlpModel, TrainConfig, accuracy, train, weight_std
from .probes import binarize, flip_signs, inject_noise, prune, randomize_model
from .randomize import KINDS, RewireConfig

DEFAULT_PRUNE_GRID = tuple(round(0.05 * i, 2) for i in range(20))
DEFAULT_FLIP_GRID = DEFAULT_PRUNE_GRID
DEFAULT_NOISE_GRID = (0.0,) + tuple(float(a) for a in np.logspace(-3, 1, 25))

# Labels folded into derived seeds so probe families never share a stream.
_TRAIN, _NOISE, _RANDOMIZE, _RAND_PRUNE, _COMPLEXITY = 1, 2, 3, 4, 5

RAW_HEADER = ("probe_family", "grid_value", "variant", "replication", "accuracy")
AGG_HEADER = ("probe_family", "grid_value", "variant", "median", "q1", "q3", "n")
COMPLEXITY_HEADER = ("class_a", "class_b", "base_accuracy", "probed_accuracy", "delta")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Accuracies for each variant, grid point and replication.

    ``values[variant]`` has shape ``(len(grid), n_reps)``.
    """

    probe_family: str
    grid: list
    values: dict[str, np.ndarray]
    reference_lines: dict[str, float] = field(default_factory=dict)

    @property
    def variants(self) -> list[str]:
        return list(self.values)

    @property
    def n_reps(self) -> int:
        return next(iter(self.values.values())).shape[1]

    @property
    def aggregates(self) -> dict[str, list[QuartileSummary]]:
        return {v: [quartiles(row) for row in acc] for v, acc in self.values.items()}

    def medians(self, variant: str) -> np.ndarray:
        return np.array([q.median for q in self.aggregates[variant]])

    def raw_rows(self):
        for v, acc in self.values.items():
            for g, value in enumerate(self.grid):
                for r in range(acc.shape[1]):
                    yield (self.probe_family, _fmt_grid(value), v, r, repr(float(acc[g, r])))

    def aggregate_rows(self):
        for v, summaries in self.aggregates.items():
            for value, q in zip(self.grid, summaries):
                yield (self.probe_family, _fmt_grid(value), v,
                       repr(q.median), repr(q.q1), repr(q.q3), q.n)

    def raw_csv(self) -> str:
        return _to_csv(RAW_HEADER, self.raw_rows())

    def aggregate_csv(self) -> str:
        return _to_csv(AGG_HEADER, self.aggregate_rows())


@dataclass
class ComplexityMatrix:
    dataset: str
    probe: str
    base_accuracy: np.ndarray   # 10x10, NaN on the diagonal
    probed_accuracy: np.ndarray
    realizations: int

    @property
    def delta_accuracy(self) -> np.ndarray:
        return self.base_accuracy - self.probed_accuracy

    def pairs(self) -> list[tuple[int, int]]:
        n = self.base_accuracy.shape[0]
        return [(a, b) for a in range(n) for b in range(a + 1, n)
                if np.isfinite(self.base_accuracy[a, b])]

    def upper_deltas(self) -> np.ndarray:
        d = self.delta_accuracy
        return np.array([d[a, b] for a, b in self.pairs()])

    def csv(self) -> str:
        rows = [(a, b, repr(float(self.base_accuracy[a, b])), repr(float(self.probed_accuracy[a, b])),
                 repr(float(self.delta_accuracy[a, b]))) for a, b in self.pairs()]
        return _to_csv(COMPLEXITY_HEADER, rows)


def _fmt_grid(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".6g")


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def complexity_correlation(m1: ComplexityMatrix, m2: ComplexityMatrix) -> float:
    """Spearman rho between the upper-triangle accuracy drops of two matrices."""
    if m1.dataset != m2.dataset or m1.pairs() != m2.pairs():
        raise ValueError("complexity matrices cover different datasets or pairs")
    return spearman(m1.upper_deltas(), m2.upper_deltas())


# ---------------------------------------------------------------------------
# Trained-model provider
# ---------------------------------------------------------------------------

def task_fingerprint(task: PairTask) -> str:
    h = hashlib.sha1()
    for a in (task.train_inputs, task.train_targets, task.test_inputs, task.test_targets):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


class ModelBank:
    """Trains replication models on demand and memoizes them by task and index."""

    def __init__(self, d: int = 64, base_seed: int = 0, config: TrainConfig = TrainConfig()):
        self.d = d
        self.base_seed = base_seed
        self.config = config
        self._models: dict[tuple, tuple[MlpModel, float]] = {}

    def _key(self, task: PairTask, r: int) -> tuple:
        fp = getattr(task, "_fingerprint", None)
        if fp is None:
            fp = task_fingerprint(task)
            task._fingerprint = fp
        return (fp, self.d, r)

    def train_seed(self, task: PairTask) -> int:
        return derive_seed(self.base_seed, _TRAIN, task.class_a, task.class_b, self.d)

    def get(self, task: PairTask, r: int, memo: bool = True) -> tuple[MlpModel, float]:
        """Best-epoch model of replication ``r`` and its test accuracy."""
        key = self._key(task, r)
        if key in self._models:
            return self._models[key]
        out = train(task, self.d, self.config, rng=rng_new(self.train_seed(task), r))
        result = (out.best_model, out.best_test_accuracy)
        if memo:
            self._models[key] = result
        return result


# ---------------------------------------------------------------------------
# Replication workers
# ---------------------------------------------------------------------------

def _probe_rng(base_seed: int, family: int, r: int, *labels: int):
    return rng_new(derive_seed(base_seed, family, *labels), r)


def _rep_prune(bank, tasks, r, grid, **_):
    out = {}
    for label, task in tasks.items():
        model, _ = bank.get(task, r)
        x, y = task.test_inputs, task.test_targets
        plain, signed = [], []
        for p in grid:
            pruned = prune(model, p)
            plain.append(accuracy(pruned, x, y))
            signed.append(accuracy(binarize(pruned), x, y))
        out[label] = plain
        out[f"signed-{label}"] = signed
    return out


def _rep_noise(bank, tasks, r, grid, **_):
    out = {}
    for t_idx, (label, task) in enumerate(tasks.items()):
        model, _ = bank.get(task, r)
        x, y = task.test_inputs, task.test_targets
        for signed in (False, True):
            base = binarize(model) if signed else model
            accs = []
            for g, a in enumerate(grid):
                rng = _probe_rng(bank.base_seed, _NOISE, r, task.class_a, task.class_b, int(signed), g)
                accs.append(accuracy(inject_noise(base, a, rng), x, y))
            out[f"signed-{label}" if signed else label] = accs
        out[f"__std-{label}"] = [weight_std(model)]
    return out


def _rep_flip(bank, tasks, r, grid, **_):
    out = {}
    for label, task in tasks.items():
        model, _ = bank.get(task, r)
        x, y = task.test_inputs, task.test_targets
        signed_model = binarize(model)
        out[label] = [accuracy(flip_signs(model, q), x, y) for q in grid]
        out[f"signed-{label}"] = [accuracy(flip_signs(signed_model, q), x, y) for q in grid]
    return out


def _rep_randomize(bank, tasks, r, grid, rewire=RewireConfig(), **_):
    out = {}
    for label, task in tasks.items():
        model, base_acc = bank.get(task, r)
        x, y = task.test_inputs, task.test_targets
        accs = []
        for kind in grid:
            if kind == "orig":
                accs.append(base_acc)
                continue
            rng = _probe_rng(bank.base_seed, _RANDOMIZE, r, task.class_a, task.class_b, ord(kind))
            accs.append(accuracy(randomize_model(model, kind, rng, config=rewire), x, y))
        out[label] = accs
    return out


def _rep_randomize_prune(bank, tasks, r, grid, kinds=("B", "E", "F"), rewire=RewireConfig(), **_):
    out = {}
    for label, task in tasks.items():
        model, _ = bank.get(task, r)
        x, y = task.test_inputs, task.test_targets
        out[label] = [accuracy(prune(model, p), x, y) for p in grid]
        for kind in kinds:
            rng = _probe_rng(bank.base_seed, _RAND_PRUNE, r, task.class_a, task.class_b, ord(kind))
            rmodel = randomize_model(model, kind, rng, config=rewire)
            out[f"{label}-rand{kind}"] = [accuracy(prune(rmodel, p), x, y) for p in grid]
    return out


_WORKERS: dict[str, Callable] = {
    "prune": _rep_prune,
    "noise": _rep_noise,
    "flip": _rep_flip,
    "randomize": _rep_randomize,
    "randomize-prune": _rep_randomize_prune,
}

_pool_state: dict = {}


def _pool_init(d, base_seed, config, tasks):
    _pool_state["bank"] = ModelBank(d, base_seed, config)
    _pool_state["tasks"] = tasks


def _pool_run(family, r, grid, kwargs):
    return _WORKERS[family](_pool_state["bank"], _pool_state["tasks"], r, grid, **kwargs)


def run_sweep(family: str, tasks: dict[str, PairTask], n_reps: int, grid: Sequence,
              bank: ModelBank, workers: int = 1, **kwargs) -> SweepResult:
    """Run ``family`` for replications ``0..n_reps-1`` and fold them in index order."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    if family not in _WORKERS:
        raise ValueError(f"unknown sweep family {family!r}")
    grid = list(grid)
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_pool_init,
                                 initargs=(bank.d, bank.base_seed, bank.config, tasks)) as ex:
            futures = [ex.submit(_pool_run, family, r, grid, kwargs) for r in range(n_reps)]
            per_rep = [f.result() for f in futures]
    else:
        per_rep = [_WORKERS[family](bank, tasks, r, grid, **kwargs) for r in range(n_reps)]

    values = {v: np.array([rep[v] for rep in per_rep], dtype=np.float64).T
              for v in per_rep[0] if not v.startswith("__")}
    refs = {v[len("__std-"):]: float(np.mean([rep[v][0] for rep in per_rep]))
            for v in per_rep[0] if v.startswith("__std-")}
    return SweepResult(family, grid, values, refs)


def _check_fractions(grid):
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise ValueError("fraction grid values must lie in [0, 1]")


def sweep_prune(tasks, n_reps, grid=DEFAULT_PRUNE_GRID, bank=None, workers=1) -> SweepResult:
    _check_fractions(grid)
    return run_sweep("prune", tasks, n_reps, grid, bank or ModelBank(), workers)


def sweep_noise(tasks, n_reps, grid=DEFAULT_NOISE_GRID, bank=None, workers=1) -> SweepResult:
    if any(a < 0 for a in grid):
        raise ValueError("noise amplitudes must be >= 0")
    return run_sweep("noise", tasks, n_reps, grid, bank or ModelBank(), workers)


def sweep_signflip(tasks, n_reps, grid=DEFAULT_FLIP_GRID, bank=None, workers=1) -> SweepResult:
    _check_fractions(grid)
    return run_sweep("flip", tasks, n_reps, grid, bank or ModelBank(), workers)


def sweep_randomization(tasks, n_reps, kinds=KINDS, bank=None, workers=1,
                        rewire: RewireConfig = RewireConfig()) -> SweepResult:
    kinds = [k.upper() for k in kinds]
    if any(k not in KINDS for k in kinds):
        raise ValueError(f"kinds must be drawn from {KINDS}")
    return run_sweep("randomize", tasks, n_reps, ["orig", *kinds], bank or ModelBank(), workers,
                     rewire=rewire)


def sweep_randomize_then_prune(tasks, n_reps, kinds=("B", "E", "F"), grid=DEFAULT_PRUNE_GRID,
                               bank=None, workers=1,
                               rewire: RewireConfig = RewireConfig()) -> SweepResult:
    _check_fractions(grid)
    kinds = tuple(k.upper() for k in kinds)
    return run_sweep("randomize-prune", tasks, n_reps, grid, bank or ModelBank(), workers,
                     kinds=kinds, rewire=rewire)


def weight_std_distribution(task: PairTask, n_reps: int, bank: ModelBank | None = None) -> list[float]:
    bank = bank or ModelBank()
    return [weight_std(bank.get(task, r)[0]) for r in range(n_reps)]


# ---------------------------------------------------------------------------
# Task complexity
# ---------------------------------------------------------------------------

COMPLEXITY_PROBES = ("binarize", "randomize-b")


def complexity_matrices(train_ds: ImageDataset, test_ds: ImageDataset, n_real: int,
                        probes: Sequence[str] = COMPLEXITY_PROBES, bank: ModelBank | None = None,
                        dataset: str = "mnist", classes: Sequence[int] = tuple(range(10)),
                        progress: Callable[[int, int], None] | None = None,
                        ) -> dict[str, ComplexityMatrix]:
    """Mean base and probed accuracy for every class pair, sharing trained models across probes."""
    if n_real < 1:
        raise ValueError("n_real must be >= 1")
    for p in probes:
        if p not in COMPLEXITY_PROBES:
            raise ValueError(f"complexity probe must be one of {COMPLEXITY_PROBES}, got {p!r}")
    bank = bank or ModelBank()
    n = 10
    base = np.full((n, n), np.nan)
    probed = {p: np.full((n, n), np.nan) for p in probes}
    pairs = [(a, b) for i, a in enumerate(classes) for b in classes[i + 1:]]
    for k, (a, b) in enumerate(pairs):
        task = make_pair_task(train_ds, test_ds, a, b)
        x, y = task.test_inputs, task.test_targets
        base_accs = []
        probe_accs = {p: [] for p in probes}
        for r in range(n_real):
            model, acc = bank.get(task, r, memo=False)
            base_accs.append(acc)
            for p in probes:
                if p == "binarize":
                    probe_accs[p].append(accuracy(binarize(model), x, y))
                else:
                    rng = _probe_rng(bank.base_seed, _COMPLEXITY, r, a, b)
                    probe_accs[p].append(accuracy(randomize_model(model, "B", rng), x, y))
        base[a, b] = base[b, a] = np.mean(base_accs)
        for p in probes:
            probed[p][a, b] = probed[p][b, a] = np.mean(probe_accs[p])
        if progress is not None:
            progress(k + 1, len(pairs))
    return {p: ComplexityMatrix(dataset, p, base.copy(), probed[p], n_real) for p in probes}


def complexity_matrix(train_ds, test_ds, n_real, probe="binarize", bank=None,
                      dataset="mnist") -> ComplexityMatrix:
    return complexity_matrices(train_ds, test_ds, n_real, (probe,), bank, dataset)[probe]

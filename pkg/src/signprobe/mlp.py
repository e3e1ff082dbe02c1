"""Single-hidden-layer ReLU MLP with a two-way softmax head, trained by Adam."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, rng_new, std_dev

WEIGHT_NAMES = ("W1", "W2")


@dataclass
class MlpModel:
    W1: np.ndarray  # (d, n_in), rows = hidden units
    b1: np.ndarray  # (d,)
    W2: np.ndarray  # (2, d)
    b2: np.ndarray  # (2,)

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.W2 = np.asarray(self.W2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        d = self.W1.shape[0]
        if self.W1.ndim != 2 or self.W2.ndim != 2:
            raise ValueError("weights must be 2-D")
        if self.b1.shape != (d,) or self.W2.shape[1] != d or self.b2.shape != (self.W2.shape[0],):
            raise ValueError(
                f"inconsistent shapes W1{self.W1.shape} b1{self.b1.shape} "
                f"W2{self.W2.shape} b2{self.b2.shape}"
            )
        if not all(np.isfinite(p).all() for p in (self.W1, self.b1, self.W2, self.b2)):
            raise ValueError("model parameters must be finite")

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def weights(self, scope=WEIGHT_NAMES) -> list[np.ndarray]:
        return [getattr(self, name) for name in scope]

    def replace(self, **matrices) -> "MlpModel":
        """Copy of the model with the named arrays swapped in."""
        parts = {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}
        parts.update(matrices)
        return MlpModel(**{k: np.array(v, dtype=np.float64) for k, v in parts.items()})


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 10
    batch_size: int = 128
    peak_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.peak_lr <= 0:
            raise ValueError("peak_lr must be positive")


@dataclass
class TrainOutcome:
    best_model: MlpModel
    best_test_accuracy: float
    accuracy_per_epoch: list[float] = field(default_factory=list)
    best_epoch: int = 0


def init_model(d: int, rng: RngStream, n_inputs: int = 784, n_outputs: int = 2) -> MlpModel:
    """Weights uniform on +-1/sqrt(fan_in); biases zero."""
    if d < 1:
        raise ValueError("hidden dimension must be >= 1")
    lim1 = 1.0 / math.sqrt(n_inputs)
    lim2 = 1.0 / math.sqrt(d)
    W1 = rng.uniform(-lim1, lim1, size=d * n_inputs).reshape(d, n_inputs)
    W2 = rng.uniform(-lim2, lim2, size=n_outputs * d).reshape(n_outputs, d)
    return MlpModel(W1, np.zeros(d), W2, np.zeros(n_outputs))


def forward(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Logits ``W2 relu(W1 x + b1) + b2`` for one input or a batch of rows."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != model.n_inputs:
        raise ValueError(f"input width {x.shape[-1]} != model input width {model.n_inputs}")
    h = np.maximum(x @ model.W1.T + model.b1, 0.0)
    return h @ model.W2.T + model.b2


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Mean softmax cross-entropy and its gradients w.r.t. every parameter."""
    n = x.shape[0]
    z1 = x @ model.W1.T + model.b1
    h = np.maximum(z1, 0.0)
    z2 = h @ model.W2.T + model.b2
    z2 = z2 - z2.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z2).sum(axis=1))
    loss = float(np.mean(logsum - z2[np.arange(n), y]))

    dz2 = np.exp(z2 - logsum[:, None])
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    dW2 = dz2.T @ h
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ model.W2) * (z1 > 0)
    dW1 = dz1.T @ x
    db1 = dz1.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def cosine_lr(step: int, total_steps: int, peak_lr: float) -> float:
    return peak_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def predict(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    logits = forward(model, inputs)
    # Strict comparison resolves ties to class 0.
    return (logits[:, 1] > logits[:, 0]).astype(np.int64)


def accuracy(model: MlpModel, inputs: np.ndarray, targets: np.ndarray) -> float:
    targets = np.asarray(targets)
    if len(inputs) != len(targets):
        raise ValueError("inputs and targets differ in length")
    if len(targets) == 0:
        raise ValueError("accuracy of an empty set")
    return float(np.mean(predict(model, inputs) == targets))


def weight_std(model: MlpModel, scope=WEIGHT_NAMES) -> float:
    return std_dev(np.concatenate([w.ravel() for w in model.weights(scope)]))


def train(task, d: int = 64, config: TrainConfig = TrainConfig(),
          rng: RngStream | None = None) -> TrainOutcome:
    """Adam on shuffled mini-batches with a per-step cosine schedule.

    Test accuracy is measured after every epoch and the best epoch's weights
    are returned (earliest epoch on ties).
    """
    x, y = task.train_inputs, task.train_targets
    if len(x) == 0 or len(task.test_inputs) == 0:
        raise ValueError("task has no examples")
    rng = rng_new(config.seed) if rng is None else rng
    model = init_model(d, rng, n_inputs=x.shape[1])

    n = len(x)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total = steps_per_epoch * config.max_epochs
    names = ("W1", "b1", "W2", "b2")
    m = {k: np.zeros_like(getattr(model, k)) for k in names}
    v = {k: np.zeros_like(getattr(model, k)) for k in names}
    b1, b2 = config.beta1, config.beta2

    history: list[float] = []
    best, best_acc, best_epoch = model.copy(), -1.0, 0
    step = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grads = loss_and_grads(model, x[idx], y[idx])
            lr = cosine_lr(step, total, config.peak_lr)
            step += 1
            c1 = 1.0 - b1 ** step
            c2 = 1.0 - b2 ** step
            for k in names:
                g = grads[k]
                m[k] = b1 * m[k] + (1.0 - b1) * g
                v[k] = b2 * v[k] + (1.0 - b2) * g * g
                p = getattr(model, k)
                p -= lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + config.eps)
        acc = accuracy(model, task.test_inputs, task.test_targets)
        history.append(acc)
        if acc > best_acc:
            best, best_acc, best_epoch = model.copy(), acc, epoch
    return TrainOutcome(best, best_acc, history, best_epoch)

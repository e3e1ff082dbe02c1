"""Train one 0-vs-7 model and hit it with each direct probe.

Pruning removes the smallest magnitudes, binarization keeps only signs,
noise adds uniform perturbations of a fixed amplitude, and sign flips
start with the smallest magnitudes.
"""
from signprobe.core import rng_new
from signprobe.data import load_dataset, make_pair_task
from signprobe.mlp import TrainConfig, accuracy, train, weight_std
from signprobe.probes import binarize, flip_signs, inject_noise, prune

train_ds, test_ds = load_dataset("mnist")
task = make_pair_task(train_ds, test_ds, 0, 7)

out = train(task, d=64, config=TrainConfig(), rng=rng_new(0))
model = out.best_model
x, y = task.test_inputs, task.test_targets
print(f"best test accuracy {out.best_test_accuracy:.4f}, weight std {weight_std(model):.4f}")


def report(label, m):
    print(f"  {label:<22} {accuracy(m, x, y):.4f}")


for p in (0.5, 0.9, 0.95):
    report(f"prune {p:.0%}", prune(model, p))
report("binarize", binarize(model))
for a in (0.1, 1.0, 10.0):
    report(f"noise a={a}", inject_noise(model, a, rng_new(1)))
for q in (0.01, 0.1, 0.5):
    report(f"flip smallest {q:.0%}", flip_signs(model, q))

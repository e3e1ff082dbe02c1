"""Accuracy lost to binarization and to sign-preserving randomization for
every digit pair, and how well the two rankings agree.

Trains 45 pair tasks per realization; one realization takes a few minutes.
"""
import numpy as np

from signprobe.data import load_dataset
from signprobe.harness import ModelBank, complexity_correlation, complexity_matrices

train, test = load_dataset("mnist")
mats = complexity_matrices(train, test, 1, bank=ModelBank(d=64, base_seed=0))

for name, m in mats.items():
    delta = m.upper_deltas()
    worst = m.pairs()[int(np.argmax(delta))]
    print(f"{name}: mean drop {np.mean(delta):.4f}, largest drop {delta.max():.4f} at {worst}")
print(f"Spearman rho = {complexity_correlation(mats['binarize'], mats['randomize-b']):.3f}")

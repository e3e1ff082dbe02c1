"""What each randomization kind keeps and what it destroys.

Uses a small signed matrix so the effect on signed degrees and per-node
strengths is visible by eye.
"""
import numpy as np

from signprobe.bipartite import alpha, degrees, sign_pattern, strengths
from signprobe.core import rng_new
from signprobe.randomize import KINDS, randomize

w = np.array([[0.9, -0.2, 0.0, 0.4],
              [-0.7, 0.3, 0.5, 0.0],
              [0.1, 0.0, -0.6, -0.8]])
np.set_printoptions(precision=2, suppress=True)


def describe(m):
    left, right = degrees(m, "L"), degrees(m, "R")
    return (f"alpha={alpha(m):.3f} left k+={left.k_plus} right k+={right.k_plus} "
            f"right s+={np.round(strengths(m, 'R').s_plus, 2)}")


print("original\n", w, "\n", describe(w))
for kind in KINDS:
    r = randomize(w, kind, rng_new(7))
    same_signs = np.array_equal(sign_pattern(r), sign_pattern(w))
    print(f"\nkind {kind} (sign pattern kept: {same_signs})\n", r, "\n", describe(r))

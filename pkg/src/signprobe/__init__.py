"""Probe trained MLPs as signed bipartite graphs.

Pruning, binarization, noise injection, sign flipping and seven bipartite
null-model randomizations, applied to single-hidden-layer MLPs trained on
two-class MNIST / Fashion-MNIST tasks, measure how much of a model's accuracy
rests on its sign structure.
"""
__version__ = "0.1.0"

from .bipartite import alpha, degrees, sign_pattern, strengths
from .core import RngStream, permute_in_place, quartiles, rng_new, spearman, std_dev
from .data import ImageDataset, PairTask, SsimParams, load_dataset, make_pair_task, ssim, ssim_distance_matrix
from .harness import (
    ComplexityMatrix,
    ModelBank,
    SweepResult,
    complexity_correlation,
    complexity_matrices,
    complexity_matrix,
    sweep_noise,
    sweep_prune,
    sweep_randomization,
    sweep_randomize_then_prune,
    sweep_signflip,
    weight_std_distribution,
)
from .mlp import MlpModel, TrainConfig, accuracy, forward, init_model, train, weight_std
from .probes import (
    Binarize,
    Noise,
    Prune,
    Randomize,
    SignFlip,
    apply_probe,
    binarize,
    flip_signs,
    inject_noise,
    parse_probe,
    prune,
)
from .randomize import KINDS, RewireConfig, randomize, rewire_sign_pattern

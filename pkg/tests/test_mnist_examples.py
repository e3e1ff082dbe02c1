"""Worked MNIST examples beyond the numbered acceptance criteria.

Claims that do not hold under the default training setup are kept as strict
xfails carrying the observed behaviour, so a change that makes them hold is
noticed.
"""
import numpy as np
import pytest

from signprobe.data import load_dataset, make_pair_task, ssim_distance_matrix
from signprobe.harness import sweep_randomize_then_prune, weight_std_distribution

pytestmark = pytest.mark.mnist

N_REPS = 20


@pytest.fixture(scope="module")
def rand_prune(mnist_tasks, bank):
    return sweep_randomize_then_prune(mnist_tasks, N_REPS, bank=bank)


def test_pair_task_size(mnist):
    train, test = mnist
    task = make_pair_task(train, test, 0, 7)
    assert len(task.train_targets) == 5923 + 6265
    assert task.train_inputs.max() == 1.0


def test_ssim_extremes_rank_near_default_pairs(mnist):
    # Class-mean SSIM picks {0,1} / {4,9} as the exact extremes; the default
    # easy and hard pairs still sit in the top and bottom quartile.
    dist = ssim_distance_matrix(mnist[0])
    iu = np.triu_indices(10, 1)
    vals = np.sort(dist[iu])
    print(f"d(0,7)={dist[0, 7]:.4f} d(7,9)={dist[7, 9]:.4f} range=[{vals[0]:.4f}, {vals[-1]:.4f}]")
    assert dist[0, 7] >= np.quantile(vals, 0.75)
    assert dist[7, 9] <= np.quantile(vals, 0.25)


@pytest.mark.xfail(strict=True, reason="randomized E-models start within 0.003 of the original and "
                                       "lose accuracy as pruning grows")
def test_randomized_easy_model_recovers_with_pruning(rand_prune):
    orig0 = rand_prune.medians("E")[0]
    for kind in "BEF":
        m = rand_prune.medians(f"E-rand{kind}")
        assert m[0] < orig0
        assert m[1:].max() > m[0]


@pytest.mark.xfail(strict=True, reason="randomized H-model curves change by < 0.1 between grid points")
def test_randomized_hard_model_jumps(rand_prune):
    jumps = [np.diff(rand_prune.medians(f"H-rand{k}")).max() for k in "BEF"]
    assert max(jumps) >= 0.1


@pytest.mark.xfail(strict=True, reason="5% of the weights still separate 0 from 7 at ~0.99")
def test_near_total_pruning_collapses(rand_prune):
    last = rand_prune.grid.index(0.95)
    for v in rand_prune.variants:
        assert abs(rand_prune.medians(v)[last] - 0.5) <= 0.15, v


@pytest.mark.slow
def test_complexity_base_accuracy(mnist_complexity):
    base = mnist_complexity["binarize"].base_accuracy
    assert np.nanmin(base) >= 0.95


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="binarized 1-vs-7 models lose nothing (drop -0.0001) while "
                                       "0-vs-3 loses 0.0021")
def test_complexity_pair_ordering(mnist_complexity):
    delta = mnist_complexity["binarize"].delta_accuracy
    print(f"binarization drop {{1,7}}={delta[1, 7]:.4f} {{0,3}}={delta[0, 3]:.4f}")
    assert delta[1, 7] >= delta[0, 3]


def test_weight_std_ordering_against_fashion(mnist_tasks, bank):
    try:
        f_train, f_test = load_dataset("fashion")
    except FileNotFoundError:
        pytest.skip("Fashion-MNIST not cached")
    easy = np.median(weight_std_distribution(mnist_tasks["E"], 10, bank))
    hard = np.median(weight_std_distribution(mnist_tasks["H"], 10, bank))
    fashion = {k: make_pair_task(f_train, f_test, a, b) for k, (a, b) in {"E": (2, 3), "H": (1, 3)}.items()}
    f_easy = np.median(weight_std_distribution(fashion["E"], 10, bank))
    f_hard = np.median(weight_std_distribution(fashion["H"], 10, bank))
    assert (easy < hard) != (f_easy < f_hard)

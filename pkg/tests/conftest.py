import numpy as np
import pytest

from signprobe.data import (
    ImageDataset,
    cache_path,
    encode_idx_images,
    encode_idx_labels,
    load_dataset,
    make_pair_task,
)
from signprobe.harness import ModelBank, complexity_matrices

EASY, HARD = (0, 7), (7, 9)

# (criterion number, title, passed, detail) in completion order.
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance():
    def record(number: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append((number, title, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number:>2}. {title}  [{detail}]")


@pytest.fixture(scope="session")
def mnist():
    try:
        return load_dataset("mnist")
    except FileNotFoundError as exc:
        pytest.skip(f"MNIST not cached ({exc})")


@pytest.fixture(scope="session")
def mnist_tasks(mnist):
    train, test = mnist
    return {"E": make_pair_task(train, test, *EASY), "H": make_pair_task(train, test, *HARD)}


def synthetic_digits(n_per_class: int, seed: int, split: str):
    """28x28 images where class c lights a 6x6 patch at a class-specific spot."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(10, dtype=np.uint8), n_per_class)
    images = rng.integers(0, 40, size=(labels.size, 28, 28)).astype(np.uint8)
    for i, c in enumerate(labels):
        r, col = 2 + 6 * (c // 4), 2 + 6 * (c % 4)
        images[i, r:r + 6, col:col + 6] = rng.integers(180, 256, size=(6, 6))
    return ImageDataset(images, labels, split)


@pytest.fixture(scope="session")
def synthetic_cache(tmp_path_factory):
    root = tmp_path_factory.mktemp("cache")
    for split, n, seed in (("train", 12, 1), ("test", 4, 2)):
        ds = synthetic_digits(n, seed, split)
        img = cache_path(root, "mnist", split, "images")
        img.parent.mkdir(parents=True, exist_ok=True)
        img.write_bytes(encode_idx_images(ds.images))
        cache_path(root, "mnist", split, "labels").write_bytes(encode_idx_labels(ds.labels))
    return root


@pytest.fixture(scope="session")
def bank():
    """Session-wide memo of trained MNIST models (d=64, base seed 0)."""
    return ModelBank(d=64, base_seed=0)


@pytest.fixture(scope="session")
def mnist_complexity(mnist):
    train, test = mnist
    return complexity_matrices(train, test, 10, bank=ModelBank(d=64, base_seed=0))

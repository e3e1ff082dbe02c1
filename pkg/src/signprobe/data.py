"""MNIST / Fashion-MNIST ingestion, two-class tasks, and SSIM class distances."""
from __future__ import annotations

import gzip
import hashlib
import os
import shutil
import struct
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"

CACHE_ENV = "SIGNPROBE_CACHE"

# files: (split, kind) -> (remote filename, md5 of the gzip file)
# pairs: default easy (E) and hard (H) class pairs
DATASETS = {
    "mnist": {
        "mirrors": [
            "https://ossci-datasets.s3.amazonaws.com/mnist/",
            "https://storage.googleapis.com/cvdf-datasets/mnist/",
            "http://yann.lecun.com/exdb/mnist/",
        ],
        "files": {
            ("train", "images"): ("train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"),
            ("train", "labels"): ("train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"),
            ("test", "images"): ("t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"),
            ("test", "labels"): ("t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"),
        },
        "classes": [str(i) for i in range(10)],
        "pairs": {"E": (0, 7), "H": (7, 9)},
    },
    "fashion": {
        "mirrors": [
            "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
            "https://raw.githubusercontent.com/zalandoresearch/fashion-mnist/master/data/fashion/",
        ],
        "files": {
            ("train", "images"): ("train-images-idx3-ubyte.gz", "8d4fb7e6c68d591d4c3dfef9ec88bf0d"),
            ("train", "labels"): ("train-labels-idx1-ubyte.gz", "25c81989df183df01b3e8a0aad5dffbe"),
            ("test", "images"): ("t10k-images-idx3-ubyte.gz", "bef4ecab320f06d8554ea6380940ec79"),
            ("test", "labels"): ("t10k-labels-idx1-ubyte.gz", "bb300cfdad3c16e7a12a480ee83cd310"),
        },
        "classes": ["T-shirt/top", "Trouser", "Pullover", "Dress", "Coat",
                    "Sandal", "Shirt", "Sneaker", "Bag", "Ankle boot"],
        "pairs": {"E": (2, 3), "H": (1, 3)},
    },
}


class FormatError(ValueError):
    pass


class TruncatedError(ValueError):
    pass


class RangeError(ValueError):
    pass


class EmptyClassError(ValueError):
    pass


# ---------------------------------------------------------------------------
# IDX format
# ---------------------------------------------------------------------------

def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == GZIP_MAGIC:
        return gzip.decompress(data)
    return bytes(data)


def _header(data: bytes, n_words: int, magic: int) -> tuple[int, ...]:
    if len(data) < 4 * n_words:
        raise TruncatedError(f"IDX header needs {4 * n_words} bytes, got {len(data)}")
    words = struct.unpack(f">{n_words}I", data[: 4 * n_words])
    if words[0] != magic:
        raise FormatError(f"bad IDX magic {words[0]:#010x}, expected {magic:#010x}")
    return words[1:]


def parse_idx_images(data: bytes) -> np.ndarray:
    """Decode an IDX image file into a ``(n, rows, cols)`` uint8 array."""
    data = _maybe_gunzip(data)
    n, rows, cols = _header(data, 4, IMAGE_MAGIC)
    expected = n * rows * cols
    payload = data[16:]
    if len(payload) < expected:
        raise TruncatedError(f"expected {expected} pixel bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(n, rows, cols).copy()


def parse_idx_labels(data: bytes, max_label: int = 9) -> np.ndarray:
    data = _maybe_gunzip(data)
    (n,) = _header(data, 2, LABEL_MAGIC)
    payload = data[8:]
    if len(payload) < n:
        raise TruncatedError(f"expected {n} label bytes, got {len(payload)}")
    labels = np.frombuffer(payload, dtype=np.uint8, count=n).copy()
    if labels.size and labels.max() > max_label:
        raise RangeError(f"label {int(labels.max())} exceeds {max_label}")
    return labels


def encode_idx_images(images: np.ndarray) -> bytes:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    return struct.pack(">4I", IMAGE_MAGIC, n, rows, cols) + images.tobytes()


def encode_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">2I", LABEL_MAGIC, labels.size) + labels.tobytes()


# ---------------------------------------------------------------------------
# Datasets and tasks
# ---------------------------------------------------------------------------

@dataclass
class ImageDataset:
    images: np.ndarray  # (n, rows, cols) uint8
    labels: np.ndarray  # (n,) uint8
    split: str = "train"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.images.ndim != 3:
            raise ValueError("images must have shape (n, rows, cols)")
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels differ in length")
        if self.labels.size and self.labels.max() > 9:
            raise RangeError("labels must lie in 0..9")
        if self.split not in ("train", "test"):
            raise ValueError(f"unknown split {self.split!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=10)


@dataclass
class PairTask:
    """Binary task: ``class_a`` is target 0, ``class_b`` is target 1."""

    class_a: int
    class_b: int
    train_inputs: np.ndarray
    train_targets: np.ndarray
    test_inputs: np.ndarray
    test_targets: np.ndarray

    @property
    def n_features(self) -> int:
        return self.train_inputs.shape[1]


def _select(ds: ImageDataset, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    keep = (ds.labels == a) | (ds.labels == b)
    for c in (a, b):
        if not np.any(ds.labels == c):
            raise EmptyClassError(f"class {c} absent from the {ds.split} split")
    x = ds.images[keep].reshape(int(keep.sum()), -1).astype(np.float64) / 255.0
    y = (ds.labels[keep] == b).astype(np.int64)
    return x, y


def make_pair_task(train: ImageDataset, test: ImageDataset, a: int, b: int) -> PairTask:
    if a == b:
        raise ValueError("a pair task needs two distinct classes")
    xtr, ytr = _select(train, a, b)
    xte, yte = _select(test, a, b)
    return PairTask(a, b, xtr, ytr, xte, yte)


# ---------------------------------------------------------------------------
# Local cache and download
# ---------------------------------------------------------------------------

def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "signprobe"


def cache_path(cache_dir, dataset: str, split: str, kind: str) -> Path:
    return Path(cache_dir) / dataset / f"{split}-{kind}.idx"


def load_split(dataset: str, split: str, cache_dir=None) -> ImageDataset:
    """Load one split from ``<cache>/<dataset>/<split>-{images,labels}.idx``."""
    cache_dir = default_cache_dir() if cache_dir is None else Path(cache_dir)
    img_path = cache_path(cache_dir, dataset, split, "images")
    lab_path = cache_path(cache_dir, dataset, split, "labels")
    for p in (img_path, lab_path):
        if not p.exists():
            raise FileNotFoundError(
                f"{p} missing; run `signprobe fetch-data --dataset {dataset}` first"
            )
    images = parse_idx_images(img_path.read_bytes())
    labels = parse_idx_labels(lab_path.read_bytes())
    return ImageDataset(images, labels, split)


def load_dataset(dataset: str, cache_dir=None) -> tuple[ImageDataset, ImageDataset]:
    return load_split(dataset, "train", cache_dir), load_split(dataset, "test", cache_dir)


def _md5(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


def fetch_dataset(dataset: str, cache_dir=None, mirrors=None, source_dir=None,
                  verify: bool = True, timeout: float = 60.0) -> Path:
    """Populate the cache for ``dataset``.

    Files come from ``source_dir`` when given (any of ``name.gz`` or the
    uncompressed ``name``), otherwise from the first mirror that answers.
    Gzip downloads are checked against the pinned md5; uncompressed local
    copies are checked by parsing instead.
    """
    spec = DATASETS[dataset]
    cache_dir = default_cache_dir() if cache_dir is None else Path(cache_dir)
    mirrors = spec["mirrors"] if mirrors is None else list(mirrors)
    out_dir = Path(cache_dir) / dataset
    out_dir.mkdir(parents=True, exist_ok=True)
    for (split, kind), (fname, md5) in spec["files"].items():
        target = cache_path(cache_dir, dataset, split, kind)
        if target.exists():
            continue
        data = None
        if source_dir is not None:
            for cand in (Path(source_dir) / fname, Path(source_dir) / fname[:-3]):
                if cand.exists():
                    data = cand.read_bytes()
                    break
            if data is None:
                raise FileNotFoundError(f"{fname} not found in {source_dir}")
        else:
            errors = []
            for mirror in mirrors:
                try:
                    with urllib.request.urlopen(mirror + fname, timeout=timeout) as resp:
                        data = resp.read()
                    break
                except OSError as exc:
                    errors.append(f"{mirror}: {exc}")
            if data is None:
                raise OSError(f"could not download {fname}:\n  " + "\n  ".join(errors))
        if data[:2] == GZIP_MAGIC:
            if verify and _md5(data) != md5:
                raise FormatError(f"{fname}: md5 {_md5(data)} does not match pinned {md5}")
        # Parse before committing so a corrupt file never lands in the cache.
        (parse_idx_images if kind == "images" else parse_idx_labels)(data)
        tmp = target.with_suffix(".part")
        tmp.write_bytes(data)
        shutil.move(tmp, target)
    return out_dir


# ---------------------------------------------------------------------------
# SSIM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0
    window_size: int = 11
    sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0 or self.data_range <= 0:
            raise ValueError("k1, k2 and data_range must be positive")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def window(self) -> np.ndarray:
        half = (self.window_size - 1) / 2.0
        t = np.arange(self.window_size) - half
        g = np.exp(-(t ** 2) / (2.0 * self.sigma ** 2))
        w = np.outer(g, g)
        return w / w.sum()


def ssim_map(x: np.ndarray, y: np.ndarray, params: SsimParams = SsimParams()) -> np.ndarray:
    """Local SSIM at every valid window position."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    w = params.window()
    if x.ndim != 2 or min(x.shape) < w.shape[0]:
        raise ValueError(f"images must be 2-D and at least {w.shape[0]} pixels per side")
    view = np.lib.stride_tricks.sliding_window_view

    def filt(a):
        return np.einsum("ijkl,kl->ij", view(a, w.shape), w)

    mx, my = filt(x), filt(y)
    vx = filt(x * x) - mx * mx
    vy = filt(y * y) - my * my
    cxy = filt(x * y) - mx * my
    c1, c2 = params.c1, params.c2
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return num / den


def ssim(x: np.ndarray, y: np.ndarray, params: SsimParams = SsimParams()) -> float:
    return float(ssim_map(x, y, params).mean())


def mean_class_images(dataset: ImageDataset) -> np.ndarray:
    """Pixel-wise class means scaled to [0, 1], shape ``(10, rows, cols)``."""
    counts = dataset.class_counts()
    missing = [c for c in range(10) if counts[c] == 0]
    if missing:
        raise EmptyClassError(f"classes {missing} absent from dataset")
    means = np.empty((10,) + dataset.images.shape[1:], dtype=np.float64)
    for c in range(10):
        means[c] = dataset.images[dataset.labels == c].mean(axis=0, dtype=np.float64) / 255.0
    return means


def ssim_distance_matrix(dataset: ImageDataset, params: SsimParams = SsimParams()) -> np.ndarray:
    """``1 - SSIM`` between class-mean images for every pair of the 10 classes."""
    means = mean_class_images(dataset)
    dist = np.zeros((10, 10))
    for a in range(10):
        for b in range(a + 1, 10):
            dist[a, b] = dist[b, a] = 1.0 - ssim(means[a], means[b], params)
    return dist


def extreme_pairs(dist: np.ndarray) -> tuple[tuple[int, int], tuple[int, int]]:
    """Return ``(easiest, hardest)``: the off-diagonal pairs with max and min distance."""
    iu = np.triu_indices(dist.shape[0], k=1)
    vals = dist[iu]
    hi, lo = int(np.argmax(vals)), int(np.argmin(vals))
    return (int(iu[0][hi]), int(iu[1][hi])), (int(iu[0][lo]), int(iu[1][lo]))

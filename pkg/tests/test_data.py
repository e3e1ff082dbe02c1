import gzip
import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from skimage.metrics import structural_similarity

from signprobe import data as D
from signprobe.data import (
    EmptyClassError,
    FormatError,
    ImageDataset,
    RangeError,
    SsimParams,
    TruncatedError,
    encode_idx_images,
    encode_idx_labels,
    extreme_pairs,
    fetch_dataset,
    load_dataset,
    make_pair_task,
    mean_class_images,
    parse_idx_images,
    parse_idx_labels,
    ssim,
    ssim_distance_matrix,
)


def image_header(n, r, c, magic=0x803):
    return struct.pack(">4I", magic, n, r, c)


class TestIdx:
    def test_hand_packed_image(self):
        imgs = parse_idx_images(image_header(1, 2, 2) + bytes([0, 255, 7, 9]))
        assert imgs.shape == (1, 2, 2)
        assert imgs[0].tolist() == [[0, 255], [7, 9]]

    def test_label_magic_in_image_parser(self):
        with pytest.raises(FormatError):
            parse_idx_images(image_header(1, 2, 2, magic=0x801) + bytes(4))

    def test_truncated_images(self):
        with pytest.raises(TruncatedError):
            parse_idx_images(image_header(2, 28, 28) + bytes(1567))

    def test_truncated_header(self):
        with pytest.raises(TruncatedError):
            parse_idx_images(b"\x00\x00\x08")

    def test_labels(self):
        assert parse_idx_labels(struct.pack(">2I", 0x801, 3) + bytes([0, 7, 9])).tolist() == [0, 7, 9]

    def test_empty_labels(self):
        assert parse_idx_labels(struct.pack(">2I", 0x801, 0)).tolist() == []

    def test_truncated_labels(self):
        with pytest.raises(TruncatedError):
            parse_idx_labels(struct.pack(">2I", 0x801, 2) + bytes([4]))

    def test_label_range(self):
        with pytest.raises(RangeError):
            parse_idx_labels(struct.pack(">2I", 0x801, 1) + bytes([10]))

    def test_wrong_label_magic(self):
        with pytest.raises(FormatError):
            parse_idx_labels(struct.pack(">2I", 0x803, 0))

    def test_gzip_sniffed(self):
        raw = image_header(1, 2, 2) + bytes([1, 2, 3, 4])
        assert np.array_equal(parse_idx_images(gzip.compress(raw)), parse_idx_images(raw))

    @settings(max_examples=40)
    @given(arrays(np.uint8, st.tuples(st.integers(0, 5), st.integers(1, 6), st.integers(1, 6))))
    def test_image_round_trip(self, images):
        raw = encode_idx_images(images)
        assert encode_idx_images(parse_idx_images(raw)) == raw

    @given(st.lists(st.integers(0, 9), max_size=50))
    def test_label_round_trip(self, labels):
        raw = encode_idx_labels(np.array(labels, dtype=np.uint8))
        assert encode_idx_labels(parse_idx_labels(raw)) == raw


def toy_dataset(split="train", per_class=3, size=12, seed=0, classes=range(10)):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.array(list(classes), dtype=np.uint8), per_class)
    images = rng.integers(0, 256, size=(len(labels), size, size), dtype=np.uint8)
    return ImageDataset(images, labels, split)


class TestPairTask:
    def test_selection_order_and_targets(self):
        tr = ImageDataset(np.arange(5 * 4, dtype=np.uint8).reshape(5, 2, 2), [3, 1, 3, 0, 1], "train")
        te = ImageDataset(np.zeros((2, 2, 2), dtype=np.uint8) + 255, [1, 3], "test")
        task = make_pair_task(tr, te, 3, 1)
        assert task.train_targets.tolist() == [0, 1, 0, 1]
        assert task.train_inputs[0].tolist() == pytest.approx([0, 1 / 255, 2 / 255, 3 / 255])
        assert task.train_inputs[1].tolist() == pytest.approx([4 / 255, 5 / 255, 6 / 255, 7 / 255])
        assert task.test_inputs.max() == 1.0

    def test_same_class_rejected(self):
        ds = toy_dataset()
        with pytest.raises(ValueError):
            make_pair_task(ds, toy_dataset("test"), 4, 4)

    def test_absent_class(self):
        tr = toy_dataset(classes=range(9))
        with pytest.raises(EmptyClassError):
            make_pair_task(tr, toy_dataset("test"), 0, 9)

    @given(st.lists(st.integers(0, 9), min_size=1, max_size=60), st.integers(0, 9), st.integers(0, 9))
    def test_size_is_sum_of_counts(self, labels, a, b):
        if a == b or a not in labels or b not in labels:
            return
        ds = ImageDataset(np.zeros((len(labels), 2, 2), dtype=np.uint8), labels, "train")
        task = make_pair_task(ds, ds, a, b)
        counts = ds.class_counts()
        assert len(task.train_targets) == counts[a] + counts[b]
        assert set(task.train_targets.tolist()) <= {0, 1}
        assert 0.0 <= task.train_inputs.min() and task.train_inputs.max() <= 1.0

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            ImageDataset(np.zeros((2, 2, 2)), [1], "train")
        with pytest.raises(RangeError):
            ImageDataset(np.zeros((1, 2, 2)), [11], "train")


def single_window_ssim(mx, my, c1, c2):
    return (2 * mx * my + c1) * c2 / ((mx * mx + my * my + c1) * c2)


class TestSsim:
    def test_window_sums_to_one(self):
        w = SsimParams().window()
        assert w.shape == (11, 11)
        assert w.sum() == pytest.approx(1.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SsimParams(k1=0)

    def test_identity_and_symmetry(self):
        rng = np.random.default_rng(1)
        x, y = rng.random((28, 28)), rng.random((28, 28))
        assert ssim(x, x) == pytest.approx(1.0)
        assert ssim(x, y) == pytest.approx(ssim(y, x), abs=1e-12)

    def test_constant_images_single_window_oracle(self):
        p = SsimParams()
        x, y = np.full((28, 28), 0.2), np.full((28, 28), 0.8)
        assert ssim(x, y) == pytest.approx(single_window_ssim(0.2, 0.8, p.c1, p.c2), abs=1e-12)

    def test_matches_skimage(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.random((28, 28))
            y = np.clip(x + 0.3 * rng.standard_normal((28, 28)), 0, 1)
            ref = structural_similarity(x, y, gaussian_weights=True, sigma=1.5,
                                        use_sample_covariance=False, data_range=1.0)
            # skimage crops a 5-pixel border (valid window centres only), same as ours.
            assert ssim(x, y) == pytest.approx(ref, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((28, 28)), np.zeros((28, 27)))

    def test_too_small(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((5, 5)), np.zeros((5, 5)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_range_and_strictness(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.random((16, 16)), rng.random((16, 16))
        s = ssim(x, y)
        assert -1.0 <= s < 1.0


class TestDistanceMatrix:
    def test_symmetric_zero_diagonal(self):
        d = ssim_distance_matrix(toy_dataset())
        assert np.allclose(np.diag(d), 0)
        assert np.array_equal(d, d.T)

    def test_entries_match_class_means(self):
        ds = toy_dataset(seed=4)
        means = mean_class_images(ds)
        d = ssim_distance_matrix(ds)
        assert d[2, 5] == pytest.approx(1 - ssim(means[2], means[5]))

    def test_missing_class(self):
        with pytest.raises(EmptyClassError):
            ssim_distance_matrix(toy_dataset(classes=range(9)))

    def test_extreme_pairs(self):
        d = np.zeros((10, 10))
        d[0, 7] = d[7, 0] = 0.9
        d += 0.5 * (1 - np.eye(10))
        d[7, 9] = d[9, 7] = 0.1
        assert extreme_pairs(d) == ((0, 7), (7, 9))


class TestFetch:
    def _write_source(self, tmp_path, gz=False):
        src = tmp_path / "src"
        src.mkdir()
        for split, n in (("train", 20), ("test", 10)):
            ds = toy_dataset(split, per_class=n // 10, size=28)
            files = {"images": encode_idx_images(ds.images), "labels": encode_idx_labels(ds.labels)}
            for kind, payload in files.items():
                fname = D.DATASETS["mnist"]["files"][(split, kind)][0]
                if gz:
                    (src / fname).write_bytes(gzip.compress(payload))
                else:
                    (src / fname[:-3]).write_bytes(payload)
        return src

    def test_from_local_raw_files(self, tmp_path):
        src = self._write_source(tmp_path)
        fetch_dataset("mnist", cache_dir=tmp_path / "cache", source_dir=src)
        train, test = load_dataset("mnist", cache_dir=tmp_path / "cache")
        assert len(train) == 20 and len(test) == 10
        assert (tmp_path / "cache" / "mnist" / "train-images.idx").exists()

    def test_pinned_md5_rejects_foreign_gzip(self, tmp_path):
        src = self._write_source(tmp_path, gz=True)
        with pytest.raises(FormatError):
            fetch_dataset("mnist", cache_dir=tmp_path / "cache", source_dir=src)
        assert not list((tmp_path / "cache" / "mnist").glob("*.idx"))

    def test_mirror_download(self, tmp_path):
        src = self._write_source(tmp_path, gz=True)
        fetch_dataset("mnist", cache_dir=tmp_path / "cache", mirrors=[src.as_uri() + "/"], verify=False)
        train, _ = load_dataset("mnist", cache_dir=tmp_path / "cache")
        assert len(train) == 20

    def test_env_cache_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SIGNPROBE_CACHE", str(tmp_path))
        assert D.default_cache_dir() == tmp_path

    def test_missing_cache_message(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="fetch-data"):
            load_dataset("mnist", cache_dir=tmp_path)

    def test_pinned_hashes_are_md5(self):
        for spec in D.DATASETS.values():
            for _, digest in spec["files"].values():
                assert len(digest) == len(hashlib.md5().hexdigest())

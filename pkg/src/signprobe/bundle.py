"""Binary container for named weight matrices ("SBPW" bundles).

Layout, all integers little-endian::

    b"SBPW"  u8 version=1  u32 n_matrices
    repeated n_matrices times:
        u16 name_len  name (UTF-8)  u32 rows  u32 cols  rows*cols float32 (row-major)
    optional metadata trailer:
        b"META"  u32 n_pairs  repeated: u16 key_len key  u32 value_len value (UTF-8)

Matrices are stored with rows = outputs (right nodes) and cols = inputs
(left nodes), i.e. the ``out_features x in_features`` convention of most
linear-layer exporters.  A bundle without metadata has no trailer.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import FormatError, TruncatedError

MAGIC = b"SBPW"
VERSION = 1
META_MAGIC = b"META"


class DuplicateName(ValueError):
    pass


@dataclass
class WeightsBundle:
    matrices: list[tuple[str, np.ndarray]] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for name, m in self.matrices:
            if not name:
                raise ValueError("matrix names must be nonempty")
            if name in seen:
                raise DuplicateName(f"duplicate matrix name {name!r}")
            seen.add(name)
            if np.ndim(m) != 2 or min(np.shape(m)) < 1:
                raise ValueError(f"matrix {name!r} must be 2-D with dims >= 1")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.matrices]

    def __getitem__(self, name: str) -> np.ndarray:
        for n, m in self.matrices:
            if n == name:
                return m
        raise KeyError(name)

    def with_values(self, new_matrices) -> "WeightsBundle":
        """Same names, order and metadata with replacement matrix values."""
        new = list(new_matrices)
        if len(new) != len(self.matrices):
            raise ValueError("replacement count differs from bundle size")
        return WeightsBundle([(n, m) for (n, _), m in zip(self.matrices, new)], dict(self.metadata))


def encode_bundle(bundle: WeightsBundle) -> bytes:
    parts = [MAGIC, struct.pack("<BI", VERSION, len(bundle.matrices))]
    for name, m in bundle.matrices:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"name too long: {name[:40]!r}...")
        a = np.asarray(m)
        rows, cols = a.shape
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<II", rows, cols))
        parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    if bundle.metadata:
        parts.append(META_MAGIC + struct.pack("<I", len(bundle.metadata)))
        for key, value in bundle.metadata.items():
            k, v = key.encode("utf-8"), value.encode("utf-8")
            parts.append(struct.pack("<H", len(k)) + k + struct.pack("<I", len(v)) + v)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(f"bundle truncated at byte {len(self.data)} (needed {self.pos + n})")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_bundle(data: bytes) -> WeightsBundle:
    r = _Reader(bytes(data))
    if r.take(4) != MAGIC:
        raise FormatError("not an SBPW bundle (bad magic)")
    version, count = r.unpack("<BI")
    if version != VERSION:
        raise FormatError(f"unsupported bundle version {version}")
    matrices = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        rows, cols = r.unpack("<II")
        values = np.frombuffer(r.take(4 * rows * cols), dtype="<f4").reshape(rows, cols)
        matrices.append((name, values.astype(np.float32)))
    metadata = {}
    if r.pos < len(r.data):
        if r.take(4) != META_MAGIC:
            raise FormatError("unexpected bytes after the last matrix")
        (n_pairs,) = r.unpack("<I")
        for _ in range(n_pairs):
            (klen,) = r.unpack("<H")
            key = r.take(klen).decode("utf-8")
            (vlen,) = r.unpack("<I")
            metadata[key] = r.take(vlen).decode("utf-8")
        if r.pos != len(r.data):
            raise FormatError("unexpected bytes after the metadata trailer")
    return WeightsBundle(matrices, metadata)


def write_bundle(bundle: WeightsBundle, path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(encode_bundle(bundle))
    os.replace(tmp, path)
    return path


def read_bundle(path) -> WeightsBundle:
    return decode_bundle(Path(path).read_bytes())


def model_to_bundle(model, metadata=None) -> WeightsBundle:
    """Export the two weight matrices plus biases (as 1-row matrices)."""
    return WeightsBundle(
        [("W1", model.W1), ("b1", model.b1[None, :]), ("W2", model.W2), ("b2", model.b2[None, :])],
        dict(metadata or {}),
    )


def bundle_to_model(bundle: WeightsBundle):
    from .mlp import MlpModel

    return MlpModel(
        np.asarray(bundle["W1"], dtype=np.float64), np.asarray(bundle["b1"], dtype=np.float64)[0],
        np.asarray(bundle["W2"], dtype=np.float64), np.asarray(bundle["b2"], dtype=np.float64)[0],
    )

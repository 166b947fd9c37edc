"""
MNIST IDX ingestion and partitioning into per-node logistic-regression data.

Only local files are read; ``.gz`` files are decompressed transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .costs import LogisticData

__all__ = [
    "IdxError",
    "IdxFormatError",
    "IdxTruncatedError",
    "IdxCountMismatch",
    "InsufficientSamples",
    "IdxDataset",
    "load_idx",
    "write_idx",
    "select_and_partition",
    "find_mnist",
]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class IdxFormatError(IdxError):
    """Wrong magic number or malformed header."""


class IdxTruncatedError(IdxError):
    """Payload shorter than the header promises."""


class IdxCountMismatch(IdxError):
    """Image and label files disagree on the sample count."""


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class IdxDataset:
    images: np.ndarray  # (count, rows*cols) in [0, 1]
    labels: np.ndarray  # (count,) ints 0-9

    def __len__(self):
        return len(self.labels)


def _read_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse(raw: bytes, magic: int, ndim: int, path):
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: header is truncated")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise IdxFormatError(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    if len(raw) < 4 + 4 * ndim:
        raise IdxTruncatedError(f"{path}: header is truncated")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    size = int(np.prod(dims))
    payload = raw[4 + 4 * ndim :]
    if len(payload) < size:
        raise IdxTruncatedError(f"{path}: payload has {len(payload)} bytes, header promises {size}")
    return np.frombuffer(payload, dtype=np.uint8, count=size).reshape(dims)


def load_idx(images_path, labels_path) -> IdxDataset:
    """Read an IDX image file (magic 0x803) and label file (magic 0x801); pixels scaled by 1/255."""
    images = _parse(_read_bytes(images_path), IMAGES_MAGIC, 3, images_path)
    labels = _parse(_read_bytes(labels_path), LABELS_MAGIC, 1, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxCountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    flat = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return IdxDataset(flat, labels.astype(np.int64))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path, compress=None) -> None:
    """Write uint8 images ``(count, rows, cols)`` and labels in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    img = struct.pack(">4I", IMAGES_MAGIC, *images.shape) + images.tobytes()
    lab = struct.pack(">2I", LABELS_MAGIC, len(labels)) + labels.tobytes()
    for data, path in ((img, images_path), (lab, labels_path)):
        path = Path(path)
        gz = path.suffix == ".gz" if compress is None else compress
        # mtime=0 keeps the gzip bytes reproducible
        path.write_bytes(gzip.compress(data, mtime=0) if gz else data)


def select_and_partition(ds: IdxDataset, digits=(0, 1), total: int = 2000, n: int = 16,
                         seed=0, lam: float = 0.01) -> LogisticData:
    """Binary digit-pair task split into ``n`` equal contiguous batches after a seeded shuffle.

    ``digits[0]`` maps to label -1 and ``digits[1]`` to +1.
    """
    d1, d2 = digits
    if d1 == d2:
        raise ValueError("the two digits must differ")
    if total % n:
        raise ValueError(f"total={total} is not divisible by n={n}")
    idx = np.flatnonzero(np.isin(ds.labels, (d1, d2)))
    if len(idx) < total:
        c1 = int(np.sum(ds.labels == d1))
        c2 = int(np.sum(ds.labels == d2))
        raise InsufficientSamples(
            f"requested {total} samples of digits {d1}/{d2} but only {len(idx)} are available "
            f"({c1} of digit {d1}, {c2} of digit {d2})"
        )
    rng = np.random.default_rng(seed)
    chosen = idx[rng.permutation(len(idx))[:total]]
    X = ds.images[chosen]
    y = np.where(ds.labels[chosen] == d1, -1.0, 1.0)
    m = total // n
    feats = tuple(X[i * m : (i + 1) * m] for i in range(n))
    labs = tuple(y[i * m : (i + 1) * m] for i in range(n))
    rows = tuple(chosen[i * m : (i + 1) * m] for i in range(n))
    return LogisticData(feats, labs, lam, source_index=rows)


_IMAGE_NAMES = ("train-images-idx3-ubyte", "train-images.idx3-ubyte")
_LABEL_NAMES = ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte")


def find_mnist(directory):
    """Locate the training image/label IDX pair (plain or ``.gz``) in ``directory``."""
    directory = Path(directory)
    found = []
    for names in (_IMAGE_NAMES, _LABEL_NAMES):
        for name in names:
            hits = [directory / name, directory / (name + ".gz")]
            hit = next((h for h in hits if h.is_file()), None)
            if hit:
                found.append(hit)
                break
        else:
            raise FileNotFoundError(f"no MNIST {names[0]} file in {directory}")
    return tuple(found)

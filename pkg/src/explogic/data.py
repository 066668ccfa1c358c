"""IDX ingestion and the 28x28 -> 400-bit preprocessing pipeline.

Images are center-cropped to rows/cols [4, 24), binarized at > 127, and
flattened row-major; pixel index order is canonical for every downstream
consumer (saliency maps, heatmaps, perturbation directions).
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801

CROP_LO, CROP_HI = 4, 24
SIDE = CROP_HI - CROP_LO  # 20
INPUT_DIM = SIDE * SIDE  # 400
BIN_THRESHOLD = 127  # pixel -> 1 iff value > 127

SCOPE_ALL = "all"
SCOPE_UNIFORM = "uniform"


@dataclass
class RawDataset:
    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) int64


@dataclass
class Dataset:
    X: np.ndarray  # (n, 400) uint8 bits
    y: np.ndarray  # (n,) int64
    split: str = "full"

    def __len__(self) -> int:
        return len(self.y)

    def class_subset(self, c: int) -> "Dataset":
        mask = self.y == c
        if not mask.any():
            raise DomainError(f"no samples of class {c} in {self.split} split")
        return Dataset(self.X[mask], self.y[mask], self.split)


@dataclass
class PixelStats:
    mean: np.ndarray  # (400,) in [0, 1]
    source: str


def _open_maybe_gzip(path, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def read_idx(path) -> np.ndarray:
    """One IDX array (uint8, any rank); .gz paths are decompressed transparently."""
    with _open_maybe_gzip(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4:
        raise FormatError(f"{path}: truncated IDX header")
    zero, dtype_code, ndim = data[0] << 8 | data[1], data[2], data[3]
    if zero != 0 or dtype_code != 0x08:
        raise FormatError(f"{path}: bad IDX magic {data[:4].hex()}")
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise FormatError(f"{path}: truncated IDX dimension block")
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    count = int(np.prod(dims)) if dims else 0
    body = data[header_len:]
    if len(body) != count:
        raise FormatError(
            f"{path}: payload size {len(body)} != expected {count} for dims {dims}"
        )
    return np.frombuffer(body, dtype=np.uint8).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = bytes([0, 0, 0x08, array.ndim]) + struct.pack(
        f">{array.ndim}I", *array.shape
    )
    with _open_maybe_gzip(path, "wb") as fh:
        fh.write(header)
        fh.write(array.tobytes())


def load_idx(images_path, labels_path) -> RawDataset:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3:
        raise FormatError(f"{images_path}: expected rank-3 image array, got rank {images.ndim}")
    if labels.ndim != 1:
        raise FormatError(f"{labels_path}: expected rank-1 label array, got rank {labels.ndim}")
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    return RawDataset(images, labels.astype(np.int64))


def preprocess(raw: RawDataset) -> Dataset:
    """Center crop to 20x20, binarize at > 127, flatten row-major to 400 bits."""
    images = raw.images
    if images.ndim != 3 or images.shape[1:] != (28, 28):
        raise DomainError(f"expected (n, 28, 28) images, got {images.shape}")
    cropped = images[:, CROP_LO:CROP_HI, CROP_LO:CROP_HI]
    bits = (cropped > BIN_THRESHOLD).astype(np.uint8)
    return Dataset(bits.reshape(len(images), INPUT_DIM), raw.labels.copy())


def split(dataset: Dataset, ratio: float = 0.8, seed: int = 0):
    """Deterministic shuffled partition; train gets floor(ratio*n) samples."""
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"split ratio {ratio} outside (0, 1)")
    n = len(dataset)
    if n == 0:
        raise DomainError("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(ratio * n))
    tr, te = perm[:n_train], perm[n_train:]
    return (
        Dataset(dataset.X[tr], dataset.y[tr], "train"),
        Dataset(dataset.X[te], dataset.y[te], "test"),
    )


def pixel_stats(dataset: Dataset | None, scope=SCOPE_ALL) -> PixelStats:
    """Per-pixel activation means over a scope: 'all', a class id, or 'uniform'."""
    if scope == SCOPE_UNIFORM:
        return PixelStats(np.full(INPUT_DIM, 0.5), SCOPE_UNIFORM)
    if dataset is None or len(dataset) == 0:
        raise DomainError("pixel_stats needs a non-empty dataset for data scopes")
    if scope == SCOPE_ALL:
        return PixelStats(dataset.X.mean(axis=0), SCOPE_ALL)
    c = int(scope)
    sub = dataset.class_subset(c)
    return PixelStats(sub.X.mean(axis=0), f"class-{c}")


def export_csv(dataset: Dataset, path) -> None:
    """One row per sample: 400 bits then the label."""
    rows = np.column_stack([dataset.X, dataset.y])
    np.savetxt(path, rows, fmt="%d", delimiter=",")

"""Synthetic handwritten-digit-style corpus in MNIST IDX layout.

Renders digits 0-9 as 28x28 grayscale images with jittered font, size,
rotation, and position, then writes standard IDX files.  Everything is
deterministic per seed, so generated datasets hash identically across runs.
The loader consumes real MNIST IDX files unchanged whenever they are
available; this module only fills in when they are not.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .data import RawDataset, write_idx
from .errors import DomainError

_FONT_CANDIDATES = (
    "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf",
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
)

IMAGES_NAME = "train-images-idx3-ubyte"
LABELS_NAME = "train-labels-idx1-ubyte"


def _available_fonts() -> tuple[str, ...]:
    found = tuple(p for p in _FONT_CANDIDATES if os.path.exists(p))
    return found if found else (None,)  # None -> PIL default vector font


_FONT_CACHE: dict = {}


def _font(path: str | None, size: int):
    key = (path, size)
    if key not in _FONT_CACHE:
        if path is None:
            _FONT_CACHE[key] = ImageFont.load_default(size=size)
        else:
            _FONT_CACHE[key] = ImageFont.truetype(path, size)
    return _FONT_CACHE[key]


def render_digit(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One jittered 28x28 grayscale digit image (uint8, white on black)."""
    if not 0 <= digit <= 9:
        raise DomainError(f"digit {digit} outside 0..9")
    fonts = _available_fonts()
    # bold twice as often: thick strokes binarize without fragmenting
    font_path = fonts[int(rng.integers(0, len(fonts) + 1)) % len(fonts)]
    size = int(rng.integers(16, 22))
    angle = float(rng.uniform(-10.0, 10.0))
    big = Image.new("L", (40, 40), 0)
    draw = ImageDraw.Draw(big)
    draw.text((20, 20), str(digit), fill=255, font=_font(font_path, size), anchor="mm")
    big = big.rotate(angle, resample=Image.BILINEAR, center=(20, 20))
    arr = np.asarray(big)
    ys, xs = np.nonzero(arr > 40)
    cy = (ys.min() + ys.max()) / 2.0
    cx = (xs.min() + xs.max()) / 2.0
    # place glyph center near the canvas center; the downstream crop keeps
    # rows/cols 4..23, so +-2 jitter stays inside it
    ty = 13.5 + float(rng.uniform(-1.25, 1.25))
    tx = 13.5 + float(rng.uniform(-1.25, 1.25))
    out = np.zeros((28, 28), dtype=np.uint8)
    oy = int(round(ty - cy))
    ox = int(round(tx - cx))
    for y in range(arr.shape[0]):
        yy = y + oy
        if not 0 <= yy < 28:
            continue
        row = arr[y]
        lo = max(0, -ox)
        hi = min(arr.shape[1], 28 - ox)
        if lo < hi:
            out[yy, lo + ox : hi + ox] = row[lo:hi]
    return out


def make_corpus(n_per_class: int = 2000, seed: int = 0, classes: int = 10) -> RawDataset:
    """Balanced corpus, shuffled deterministically."""
    if n_per_class < 1 or not 1 <= classes <= 10:
        raise DomainError("need n_per_class >= 1 and 1 <= classes <= 10")
    rng = np.random.default_rng(seed)
    n = n_per_class * classes
    images = np.zeros((n, 28, 28), dtype=np.uint8)
    labels = np.repeat(np.arange(classes, dtype=np.int64), n_per_class)
    for i in range(n):
        images[i] = render_digit(int(labels[i]), rng)
    perm = rng.permutation(n)
    return RawDataset(images[perm], labels[perm])


def write_corpus(out_dir, n_per_class: int = 2000, seed: int = 0, classes: int = 10):
    """Writes IDX files named like the MNIST train pair; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    raw = make_corpus(n_per_class, seed, classes)
    images_path = os.path.join(out_dir, IMAGES_NAME)
    labels_path = os.path.join(out_dir, LABELS_NAME)
    write_idx(images_path, raw.images)
    write_idx(labels_path, raw.labels)
    return images_path, labels_path

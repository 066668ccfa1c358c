"""Signed per-input saliency maps and their export formats.

Positive entries mean the input's presence (logic 1) supports the explained
function; negative entries mean its absence does.  Maps from single fan-in
traversals carry integer path-endpoint counts; swept or gradient maps are
real-valued.  Exports: CSV (pixel_index,value), 8-bit PGM heatmap with 128
as zero importance, and a structured-text metadata sidecar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass
class SaliencyMap:
    values: np.ndarray  # signed (input_dim,)
    variant: str
    meta: dict = field(default_factory=dict)
    pos_counts: np.ndarray | None = None  # traversal arrival counts, if any
    neg_counts: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DomainError("saliency map must be one-dimensional")

    @property
    def input_dim(self) -> int:
        return len(self.values)

    @property
    def sigma(self) -> int:
        """Count of nonzero entries (the number of important inputs)."""
        return int(np.count_nonzero(self.values))

    def support(self) -> np.ndarray:
        """Boolean mask of inputs touched by any path arrival.

        Uses raw arrival counts when available so that opposite-sign arrivals
        at one input (which cancel in the signed values) still count.
        """
        if self.pos_counts is not None and self.neg_counts is not None:
            return (self.pos_counts + self.neg_counts) > 0
        return self.values != 0


def to_csv(smap: SaliencyMap) -> str:
    lines = ["pixel_index,value"]
    for i, v in enumerate(smap.values):
        lines.append(f"{i},{format(v, '.17g')}")
    return "\n".join(lines) + "\n"


def save_csv(smap: SaliencyMap, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_csv(smap))


def _heatmap_shape(input_dim: int) -> tuple[int, int]:
    side = math.isqrt(input_dim)
    if side * side == input_dim:
        return side, side
    return 1, input_dim


def to_pgm(smap: SaliencyMap) -> bytes:
    """8-bit PGM; [-max|v|, +max|v|] maps affinely onto [0, 255], zero -> 128."""
    h, w = _heatmap_shape(smap.input_dim)
    peak = float(np.max(np.abs(smap.values)))
    if peak == 0.0:
        pixels = np.full(smap.input_dim, 128, dtype=np.uint8)
    else:
        scaled = (smap.values + peak) * (255.0 / (2.0 * peak))
        pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def save_pgm(smap: SaliencyMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_pgm(smap))


def save_meta(smap: SaliencyMap, path) -> None:
    """Structured-text sidecar: variant, theta range, roots, model hash, sigma."""
    lines = ["explogic-saliency 1", f"variant {smap.variant}"]
    for key in ("theta_min", "theta_step", "theta_max", "root", "target", "model"):
        if key in smap.meta:
            lines.append(f"{key} {smap.meta[key]}")
    lines.append(f"sigma {smap.sigma}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")

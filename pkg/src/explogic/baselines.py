"""Vanilla Gradients, Integrated Gradients, and random saliency baselines.

Gradients are taken through the discretized network's soft (probabilistic)
semantics: hard outputs have no derivative, and the multilinear gate forms
are the continuous extension the classifier itself uses on real-valued
inputs.  All methods emit the same SaliencyMap type as the fan-in explainer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .network import LogicNetwork, backward_soft, backward_soft_batch, forward_soft
from .saliency import SaliencyMap

METHOD_VG = "vg"
METHOD_IG = "ig"
METHOD_RANDOM = "random"

IG_DEFAULT_STEPS = 50


@dataclass(frozen=True)
class BaselineSpec:
    method: str
    ig_steps: int = IG_DEFAULT_STEPS
    random_seed: int = 0

    def __post_init__(self):
        if self.method not in (METHOD_VG, METHOD_IG, METHOD_RANDOM):
            raise DomainError(f"unknown baseline method {self.method!r}")
        if self.ig_steps < 1:
            raise DomainError("ig_steps must be >= 1")


def vanilla_gradients(net: LogicNetwork, x, class_id: int) -> SaliencyMap:
    """Gradient of the class score at x."""
    x = np.asarray(x, dtype=np.float64)
    grad = backward_soft(net, x, class_id)
    return SaliencyMap(grad, METHOD_VG, {"target": f"class-{class_id}"})


def integrated_gradients(
    net: LogicNetwork,
    x,
    class_id: int,
    steps: int = IG_DEFAULT_STEPS,
    baseline=None,
) -> SaliencyMap:
    """(x - baseline) times the mean gradient along the straight path,
    sampled at the right endpoints k/m for k = 1..m."""
    x = np.asarray(x, dtype=np.float64)
    if baseline is None:
        baseline = np.zeros_like(x)
    baseline = np.asarray(baseline, dtype=np.float64)
    if baseline.shape != x.shape:
        raise DomainError(f"baseline shape {baseline.shape} != input shape {x.shape}")
    if steps < 1:
        raise DomainError("ig steps must be >= 1")
    alphas = np.arange(1, steps + 1, dtype=np.float64)[:, None] / steps
    points = baseline[None, :] + alphas * (x - baseline)[None, :]
    grads = backward_soft_batch(net, points, class_id)
    values = (x - baseline) * grads.mean(axis=0)
    return SaliencyMap(
        values, METHOD_IG, {"target": f"class-{class_id}", "steps": steps}
    )


def ig_completeness_gap(
    net: LogicNetwork, x, class_id: int, steps: int, baseline=None
) -> tuple[float, float]:
    """(attribution sum, score(x) - score(baseline)) for completeness checks."""
    x = np.asarray(x, dtype=np.float64)
    if baseline is None:
        baseline = np.zeros_like(x)
    smap = integrated_gradients(net, x, class_id, steps, baseline)
    _, sx = forward_soft(net, x)
    _, sb = forward_soft(net, np.asarray(baseline, dtype=np.float64))
    return float(smap.values.sum()), float(sx[class_id] - sb[class_id])


def random_map(input_dim: int, seed) -> SaliencyMap:
    """I.i.d. standard normal map; seed may be an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return SaliencyMap(rng.standard_normal(input_dim), METHOD_RANDOM)

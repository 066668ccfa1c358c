"""Fan-in saliency explanations for discretized logic networks.

The traversal walks backward from a root node, breadth-first, flipping the
path sign at negating ports, and records signed arrivals at input dimensions.
Whether an edge may be crossed is gated by a per-node saliency factor (SF):
the fraction of samples activating the node (empirical) or its analytically
propagated activation probability.  Eight map variants differ only in the SF
source, the root set, and the threshold sweep.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import Dataset, pixel_stats
from .errors import DomainError
from .gates import (
    IGNORED,
    NEGATIVE,
    NONMONOTONE,
    PORT_A,
    PORT_B,
    port_kind,
    port_sign,
)
from .network import LogicNetwork, forward_hard, forward_soft, hard_activation_counts
from .saliency import SaliencyMap

VARIANT_L_E = "L_E"
VARIANT_L_A = "L_A"
VARIANT_G_EMPTY = "G_0"  # data-free structural traversal
VARIANT_G_U = "G_U"
VARIANT_G_E = "G_E"
VARIANT_G_A = "G_A"
VARIANT_C_E = "C_E"
VARIANT_C_A = "C_A"

LOCAL_VARIANTS = (VARIANT_L_E, VARIANT_L_A)
CLASS_VARIANTS = (VARIANT_G_EMPTY, VARIANT_G_U, VARIANT_G_E, VARIANT_G_A, VARIANT_C_E, VARIANT_C_A)
ALL_VARIANTS = LOCAL_VARIANTS + CLASS_VARIANTS


@dataclass
class SaliencyFactors:
    inputs: np.ndarray  # (input_dim,) in [0, 1]
    layers: list[np.ndarray]  # one array per network layer
    source: str

    def value(self, layer_index: int, node_index: int) -> float:
        """SF of a node; layer_index -1 addresses the input dimensions."""
        if layer_index < 0:
            return float(self.inputs[node_index])
        return float(self.layers[layer_index][node_index])


@dataclass(frozen=True)
class ExplanationSpec:
    variant: str
    theta_min: float = 0.0
    theta_step: float = 0.0
    theta_max: float = 0.0
    literal_rule: bool = False

    def __post_init__(self):
        if self.variant not in ALL_VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}")
        if not 0.0 <= self.theta_min <= self.theta_max <= 1.0:
            raise DomainError("need 0 <= theta_min <= theta_max <= 1")
        if self.theta_step < 0:
            raise DomainError("theta_step must be >= 0")

    @staticmethod
    def for_variant(variant: str, literal_rule: bool = False) -> "ExplanationSpec":
        """Default theta range per variant: local maps use the single
        threshold 0; class/function maps sweep [0; 0.01; 1]."""
        if variant in LOCAL_VARIANTS:
            return ExplanationSpec(variant, 0.0, 0.0, 0.0, literal_rule)
        return ExplanationSpec(variant, 0.0, 0.01, 1.0, literal_rule)

    def thetas(self) -> np.ndarray:
        if self.theta_step == 0.0 or self.theta_max == self.theta_min:
            return np.array([self.theta_min])
        n = int(round((self.theta_max - self.theta_min) / self.theta_step)) + 1
        return np.linspace(self.theta_min, self.theta_max, n)


# ---------------------------------------------------------------------------
# saliency factors
# ---------------------------------------------------------------------------


def sp_empirical(net: LogicNetwork, X) -> SaliencyFactors:
    """Per-node activation fraction over a sample set (inputs: pixel means)."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if len(X) == 0:
        raise DomainError("sp_empirical needs at least one sample")
    counts = hard_activation_counts(net, X)
    n = float(len(X))
    return SaliencyFactors(
        X.mean(axis=0).astype(np.float64),
        [c / n for c in counts],
        f"empirical(n={len(X)})",
    )


def sp_analytical(net: LogicNetwork, p) -> SaliencyFactors:
    """Per-node activation probability propagated under input independence."""
    p = np.asarray(p, dtype=np.float64)
    layer_probs, _ = forward_soft(net, p)
    return SaliencyFactors(p.copy(), layer_probs, "analytical")


# ---------------------------------------------------------------------------
# fan-in traversal
# ---------------------------------------------------------------------------


def _passes(sf_value: float, sign: int, theta: float, literal_rule: bool) -> bool:
    if sign > 0:
        return sf_value > theta
    if literal_rule:
        return sf_value > 1.0 - theta
    return sf_value < 1.0 - theta


def _traverse(
    net: LogicNetwork,
    sf: SaliencyFactors | None,
    root: tuple[int, int],
    theta: float,
    literal_rule: bool = False,
    structural: bool = False,
):
    """BFS from (root, +1); returns signed arrival counts per input dimension.

    structural mode ignores saliency factors: every non-ignored edge passes
    and nonmonotone (XOR/XNOR) ports fork the traversal into both signs.
    """
    root_li, root_ni = root
    if not 0 <= root_li < len(net.layers):
        raise DomainError(f"root layer {root_li} out of range")
    if not 0 <= root_ni < net.layers[root_li].width:
        raise DomainError(f"root node {root_ni} out of range")
    pos = np.zeros(net.input_dim, dtype=np.int64)
    neg = np.zeros(net.input_dim, dtype=np.int64)
    queue = deque([(root_li, root_ni, 1)])
    visited = {(root_li, root_ni, 1)}
    while queue:
        li, ni, s = queue.popleft()
        layer = net.layers[li]
        g = int(layer.gate_ids[ni])
        ia, ib = int(layer.in_a[ni]), int(layer.in_b[ni])
        for port, u, partner in ((PORT_A, ia, ib), (PORT_B, ib, ia)):
            kind = port_kind(g, port)
            if kind == IGNORED:
                continue
            if kind == NONMONOTONE:
                if structural:
                    new_signs = (s, -s)
                else:
                    new_signs = (s * port_sign(g, port, sf.value(li - 1, partner)),)
            elif kind == NEGATIVE:
                new_signs = (-s,)
            else:
                new_signs = (s,)
            for s_new in new_signs:
                if not structural and not _passes(
                    sf.value(li - 1, u), s_new, theta, literal_rule
                ):
                    continue
                if li == 0:
                    (pos if s_new > 0 else neg)[u] += 1
                elif (li - 1, u, s_new) not in visited:
                    visited.add((li - 1, u, s_new))
                    queue.append((li - 1, u, s_new))
    return pos, neg


def fanin(
    net: LogicNetwork,
    sf: SaliencyFactors,
    root: tuple[int, int],
    theta: float,
    literal_rule: bool = False,
) -> SaliencyMap:
    """One thresholded traversal; map values are signed arrival counts."""
    if net.mode != "hard":
        raise DomainError("fan-in traversal requires a discretized network")
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta {theta} outside [0, 1]")
    pos, neg = _traverse(net, sf, root, theta, literal_rule)
    return SaliencyMap(
        (pos - neg).astype(np.float64),
        "fanin",
        {"root": f"{root[0]}:{root[1]}", "theta_min": theta, "theta_max": theta},
        pos_counts=pos,
        neg_counts=neg,
    )


def structural_fanin(net: LogicNetwork, root: tuple[int, int]) -> SaliencyMap:
    """Data-free traversal: every non-ignored edge passes, XOR forks signs."""
    if net.mode != "hard":
        raise DomainError("fan-in traversal requires a discretized network")
    pos, neg = _traverse(net, None, root, 0.0, structural=True)
    return SaliencyMap(
        (pos - neg).astype(np.float64),
        "structural",
        {"root": f"{root[0]}:{root[1]}"},
        pos_counts=pos,
        neg_counts=neg,
    )


def _sum_over_roots(net, sf, roots, theta, literal_rule, structural=False):
    pos = np.zeros(net.input_dim, dtype=np.int64)
    neg = np.zeros(net.input_dim, dtype=np.int64)
    for root in roots:
        if structural:
            p, n = _traverse(net, None, root, theta, structural=True)
        else:
            p, n = _traverse(net, sf, root, theta, literal_rule)
        pos += p
        neg += n
    return pos, neg


def sweep(
    net: LogicNetwork,
    sf: SaliencyFactors,
    roots,
    spec: ExplanationSpec,
) -> SaliencyMap:
    """Arithmetic mean of per-theta root-summed maps over the spec's grid."""
    thetas = spec.thetas()
    total = np.zeros(net.input_dim, dtype=np.float64)
    pos_any = np.zeros(net.input_dim, dtype=np.int64)
    neg_any = np.zeros(net.input_dim, dtype=np.int64)
    for theta in thetas:
        pos, neg = _sum_over_roots(net, sf, roots, float(theta), spec.literal_rule)
        total += pos - neg
        pos_any += pos
        neg_any += neg
    return SaliencyMap(
        total / len(thetas),
        spec.variant,
        {
            "theta_min": spec.theta_min,
            "theta_step": spec.theta_step,
            "theta_max": spec.theta_max,
        },
        pos_counts=pos_any,
        neg_counts=neg_any,
    )


# ---------------------------------------------------------------------------
# variant dispatch
# ---------------------------------------------------------------------------


def _group_roots(net: LogicNetwork, class_id: int):
    if not 0 <= class_id < net.class_count:
        raise DomainError(f"class {class_id} outside 0..{net.class_count - 1}")
    li = len(net.layers) - 1
    lo = class_id * net.group_size
    return [(li, ni) for ni in range(lo, lo + net.group_size)]


def _active_roots(net: LogicNetwork, sf: SaliencyFactors, class_id: int):
    # Local maps start only from group nodes contributing to the class sum
    # (sf passes the positive test at theta 0, i.e. sf > 0).
    return [
        (li, ni) for li, ni in _group_roots(net, class_id) if sf.value(li, ni) > 0.0
    ]


def local_map(
    net: LogicNetwork,
    x: np.ndarray,
    analytical: bool,
    literal_rule: bool = False,
) -> SaliencyMap:
    """L-variant map for one sample: roots are the predicted class's active
    group nodes, single traversal at theta 0."""
    x = np.asarray(x)
    if x.shape != (net.input_dim,):
        raise DomainError(f"sample shape {x.shape} != ({net.input_dim},)")
    variant = VARIANT_L_A if analytical else VARIANT_L_E
    if analytical:
        sf = sp_analytical(net, x.astype(np.float64))
        _, scores = forward_soft(net, x.astype(np.float64))
    else:
        if not np.isin(x, (0, 1)).all():
            raise DomainError("empirical local maps need a binary sample")
        sf = sp_empirical(net, x[None, :])
        _, scores = forward_hard(net, x)
    predicted = int(np.argmax(scores))
    spec = ExplanationSpec(variant, 0.0, 0.0, 0.0, literal_rule)
    roots = _active_roots(net, sf, predicted)
    smap = sweep(net, sf, roots, spec)
    smap.meta["target"] = f"sample-pred-{predicted}"
    return smap


def class_map(
    net: LogicNetwork,
    class_id: int,
    variant: str,
    dataset: Dataset | None = None,
    literal_rule: bool = False,
) -> SaliencyMap:
    """G/C-variant map for one class group."""
    roots = _group_roots(net, class_id)
    if variant == VARIANT_G_EMPTY:
        pos, neg = _sum_over_roots(net, None, roots, 0.0, False, structural=True)
        smap = SaliencyMap(
            (pos - neg).astype(np.float64),
            variant,
            {"target": f"class-{class_id}"},
            pos_counts=pos,
            neg_counts=neg,
        )
        return smap
    if variant == VARIANT_G_U:
        sf = sp_analytical(net, np.full(net.input_dim, 0.5))
    elif variant in (VARIANT_G_E, VARIANT_G_A, VARIANT_C_E, VARIANT_C_A):
        if dataset is None or len(dataset) == 0:
            raise DomainError(f"variant {variant} needs a non-empty dataset")
        scoped = (
            dataset.class_subset(class_id)
            if variant in (VARIANT_C_E, VARIANT_C_A)
            else dataset
        )
        if variant in (VARIANT_G_E, VARIANT_C_E):
            sf = sp_empirical(net, scoped.X)
        else:
            sf = sp_analytical(net, pixel_stats(scoped, "all").mean)
    else:
        raise DomainError(f"{variant} is not a class-level variant")
    spec = ExplanationSpec.for_variant(variant, literal_rule)
    smap = sweep(net, sf, roots, spec)
    smap.meta["target"] = f"class-{class_id}"
    return smap


def explain(
    net: LogicNetwork,
    spec: ExplanationSpec,
    dataset: Dataset | None = None,
    sample: np.ndarray | None = None,
    class_id: int | None = None,
) -> SaliencyMap:
    """Dispatch a variant to its data requirements.

    L variants need a sample; class variants need a class id (and a dataset
    for the data-scoped saliency factors).
    """
    if spec.variant in LOCAL_VARIANTS:
        if sample is None:
            raise DomainError(f"variant {spec.variant} needs a sample")
        return local_map(
            net, sample, analytical=spec.variant == VARIANT_L_A, literal_rule=spec.literal_rule
        )
    if class_id is None:
        raise DomainError(f"variant {spec.variant} needs a class id")
    return class_map(net, class_id, spec.variant, dataset, spec.literal_rule)

"""Per-class network pruning.

A class score only ever reads the nodes reachable backward from its output
group through live (non-ignored) gate ports, so dropping everything else and
compacting indices preserves the score bit for bit.  The resulting MiniNet is
a one-group network plus a decision threshold fitted on one-vs-all training
scores.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DomainError, FormatError
from .gates import FALSE_GATE, IGNORED, PORT_A, PORT_B, port_kind
from .network import (
    Layer,
    LogicNetwork,
    _deserialize,
    _fmt,
    _serialize,
    forward_hard_batch,
)

# gate id -> does the port influence the output at all
_A_LIVE = np.array([port_kind(g, PORT_A) != IGNORED for g in range(16)])
_B_LIVE = np.array([port_kind(g, PORT_B) != IGNORED for g in range(16)])

MIN_TIMING_REPS = 30


@dataclass
class MiniNet:
    net: LogicNetwork  # single-group hard network over the original pixels
    class_id: int
    threshold: float
    remap: list[np.ndarray] | None  # per layer, mini position -> parent node id

    def scores(self, X: np.ndarray) -> np.ndarray:
        return forward_hard_batch(self.net, X)[:, 0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.scores(X) >= self.threshold


def fanin_cone(net: LogicNetwork, class_id: int) -> list[np.ndarray]:
    """Per-layer sorted node ids reachable backward from the class group.

    TRUE/FALSE gates stop the walk; a pass-through gate contributes only its
    live port's predecessor.
    """
    if net.mode != "hard":
        raise DomainError("cone extraction requires a discretized network")
    if not 0 <= class_id < net.class_count:
        raise DomainError(f"class {class_id} outside 0..{net.class_count - 1}")
    g = net.group_size
    kept = [None] * len(net.layers)
    frontier = np.arange(class_id * g, (class_id + 1) * g)
    kept[-1] = frontier
    for li in range(len(net.layers) - 1, 0, -1):
        layer = net.layers[li]
        gids = layer.gate_ids[frontier]
        parents = np.concatenate(
            (layer.in_a[frontier][_A_LIVE[gids]], layer.in_b[frontier][_B_LIVE[gids]])
        )
        frontier = np.unique(parents)
        kept[li - 1] = frontier
    return kept


def cone_input_support(net: LogicNetwork, cone: list[np.ndarray]) -> np.ndarray:
    """Pixel ids the cone can read (live layer-0 ports of kept nodes)."""
    layer = net.layers[0]
    nodes = cone[0]
    gids = layer.gate_ids[nodes]
    pixels = np.concatenate(
        (layer.in_a[nodes][_A_LIVE[gids]], layer.in_b[nodes][_B_LIVE[gids]])
    )
    return np.unique(pixels)


def build_mininet(net: LogicNetwork, class_id: int, threshold: float = 0.0) -> MiniNet:
    """Compact the cone into a standalone single-group network.

    Layers whose cone slice is empty keep a single FALSE placeholder so layer
    depth (and the packed-evaluation shape) survives; any reference a kept
    node makes through an ignored port to a dropped node is rewired to
    position 0, which cannot change the output.
    """
    cone = fanin_cone(net, class_id)
    layers = []
    remap = []
    pos_of = None  # parent node id -> mini position in the previous layer
    for li, kept in enumerate(cone):
        layer = net.layers[li]
        if kept.size == 0:
            layers.append(
                Layer(
                    in_a=np.zeros(1, dtype=np.int64),
                    in_b=np.zeros(1, dtype=np.int64),
                    gate_ids=np.array([FALSE_GATE]),
                )
            )
            remap.append(np.array([-1]))
            pos_of = {}
            continue
        gids = layer.gate_ids[kept]
        pa = layer.in_a[kept]
        pb = layer.in_b[kept]
        if li == 0:
            new_a, new_b = pa, pb  # pixels keep their identity
        else:
            new_a = np.array([pos_of.get(int(p), 0) for p in pa], dtype=np.int64)
            new_b = np.array([pos_of.get(int(p), 0) for p in pb], dtype=np.int64)
            live_a = _A_LIVE[gids]
            live_b = _B_LIVE[gids]
            if any(int(p) not in pos_of for p in pa[live_a]) or any(
                int(p) not in pos_of for p in pb[live_b]
            ):
                raise DomainError("cone dropped a live predecessor")  # unreachable
        layers.append(Layer(in_a=new_a, in_b=new_b, gate_ids=gids.copy()))
        remap.append(kept.copy())
        pos_of = {int(p): i for i, p in enumerate(kept)}
    mini = LogicNetwork(net.input_dim, layers, class_count=1, tau=net.tau)
    return MiniNet(mini, class_id, float(threshold), remap)


# ---------------------------------------------------------------------------
# decision threshold
# ---------------------------------------------------------------------------


def _sweep_threshold(scores: np.ndarray, is_pos: np.ndarray, hi: int) -> float:
    best_t, best_acc = 0, -1.0
    for t in range(0, hi + 2):  # hi+1 predicts nothing positive
        acc = float(np.mean((scores >= t) == is_pos))
        if acc > best_acc:
            best_t, best_acc = t, acc
    return float(best_t)


def equal_likelihood_threshold(
    mu_p: float, sd_p: float, pi_p: float, mu_n: float, sd_n: float
) -> float | None:
    """Score where the prior-weighted Gaussian densities cross.

    Equal variances give one crossing (the midpoint shifted by the prior
    odds).  Unequal variances give a quadratic with two crossings; the
    decision rule is "positive iff score >= t", so the usable crossing is
    the one where the positive log-likelihood-ratio rises through zero
    (smaller root when the positive fit is the narrower one, larger root
    otherwise — picking the far-tail crossing would classify everything
    positive).  Returns None when no crossing exists.
    """
    pi_n = 1.0 - pi_p
    if sd_p <= 0.0 or sd_n <= 0.0 or not 0.0 < pi_p < 1.0:
        return None
    if sd_p == sd_n:
        if mu_p == mu_n:
            return None
        return (mu_p + mu_n) / 2.0 + sd_p**2 * np.log(pi_n / pi_p) / (mu_p - mu_n)
    # Q(t) = log(pi_p f_p(t)) - log(pi_n f_n(t)) = a t^2 + b t + c
    a = 0.5 / sd_n**2 - 0.5 / sd_p**2
    b = mu_p / sd_p**2 - mu_n / sd_n**2
    c = (
        0.5 * mu_n**2 / sd_n**2
        - 0.5 * mu_p**2 / sd_p**2
        + np.log((pi_p * sd_n) / (pi_n * sd_p))
    )
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    for r in ((-b - np.sqrt(disc)) / (2 * a), (-b + np.sqrt(disc)) / (2 * a)):
        if 2 * a * r + b > 0:  # Q rises through zero: negatives below, positives above
            return float(r)
    return None


def fit_threshold(mini: MiniNet, train_data: Dataset) -> float:
    """Equal prior-weighted-likelihood point of two Gaussians fitted to the
    one-vs-all score distributions.  Degenerate fits (zero variance or no
    crossing) fall back to an integer accuracy sweep preferring the lowest
    threshold."""
    scores = mini.scores(train_data.X).astype(np.float64)
    is_pos = np.asarray(train_data.y) == mini.class_id
    pos = scores[is_pos]
    neg = scores[~is_pos]
    if pos.size == 0:
        raise DomainError(f"no training samples labeled {mini.class_id}")
    if neg.size == 0:
        raise DomainError("one-vs-all fit needs negative samples")
    t = equal_likelihood_threshold(
        float(pos.mean()),
        float(pos.std()),
        pos.size / scores.size,
        float(neg.mean()),
        float(neg.std()),
    )
    if t is None:
        return _sweep_threshold(scores, is_pos, mini.net.group_size)
    return t


# ---------------------------------------------------------------------------
# size / time / accuracy report
# ---------------------------------------------------------------------------


@dataclass
class MiniNetReport:
    class_id: int
    parent_gates: int
    mini_gates: int
    size_change_pct: float  # negative = smaller
    parent_time: float  # median seconds per sample
    mini_time: float
    time_change_pct: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    parent_accuracy: float  # parent's one-vs-all accuracy for the same class


def _median_time_per_sample(net: LogicNetwork, X: np.ndarray, reps: int) -> float:
    forward_hard_batch(net, X)  # warm-up: caches wiring plans, touches pages
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        forward_hard_batch(net, X)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) / X.shape[0]


def _binary_metrics(pred: np.ndarray, truth: np.ndarray):
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    acc = float(np.mean(pred == truth))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return acc, prec, rec, f1


def assess(parent: LogicNetwork, minis, test_data: Dataset) -> list[MiniNetReport]:
    """Deterministic part of the comparison: gate counts and one-vs-all
    classification metrics.  Timing fields are left at zero."""
    if parent.mode != "hard":
        raise DomainError("assessment requires a discretized parent")
    X, y = test_data.X, np.asarray(test_data.y)
    parent_pred = np.argmax(forward_hard_batch(parent, X), axis=1)
    reports = []
    for mini in minis:
        truth = y == mini.class_id
        acc, prec, rec, f1 = _binary_metrics(mini.predict(X), truth)
        parent_acc = float(np.mean((parent_pred == mini.class_id) == truth))
        reports.append(
            MiniNetReport(
                class_id=mini.class_id,
                parent_gates=parent.gate_count,
                mini_gates=mini.net.gate_count,
                size_change_pct=100.0
                * (mini.net.gate_count - parent.gate_count)
                / parent.gate_count,
                parent_time=0.0,
                mini_time=0.0,
                time_change_pct=0.0,
                accuracy=acc,
                precision=prec,
                recall=rec,
                f1=f1,
                parent_accuracy=parent_acc,
            )
        )
    return reports


def benchmark(
    parent: LogicNetwork,
    minis,
    test_data: Dataset,
    repetitions: int = MIN_TIMING_REPS,
) -> list[MiniNetReport]:
    """Median-of-repetitions timing plus one-vs-all metrics per MiniNet.

    Gate counts are the deterministic cross-machine signal; wall-clock medians
    depend on the host and only their sign is contractual.
    """
    if repetitions < MIN_TIMING_REPS:
        raise DomainError(f"timing needs >= {MIN_TIMING_REPS} repetitions")
    reports = assess(parent, minis, test_data)
    X = test_data.X
    parent_time = _median_time_per_sample(parent, X, repetitions)
    for mini, report in zip(minis, reports):
        mini_time = _median_time_per_sample(mini.net, X, repetitions)
        report.parent_time = parent_time
        report.mini_time = mini_time
        report.time_change_pct = 100.0 * (mini_time - parent_time) / parent_time
    return reports


def report_csv(reports: list[MiniNetReport], with_timing: bool = True) -> str:
    """One row per class.  Timing columns are host-dependent; pass
    with_timing=False for byte-reproducible output."""
    cols = ["class", "%time", "%size", "acc", "prec", "recall", "f1"]
    if not with_timing:
        cols.remove("%time")
    lines = [",".join(cols)]
    for r in reports:
        row = [str(r.class_id)]
        if with_timing:
            row.append(format(r.time_change_pct, ".2f"))
        row += [
            format(r.size_change_pct, ".2f"),
            format(r.accuracy, ".4f"),
            format(r.precision, ".4f"),
            format(r.recall, ".4f"),
            format(r.f1, ".4f"),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# files: the model format plus threshold/class headers
# ---------------------------------------------------------------------------


def save_mininet(mini: MiniNet, path) -> None:
    text = _serialize(
        mini.net,
        extra_header=[
            ("mini_class", str(mini.class_id)),
            ("mini_threshold", _fmt(mini.threshold)),
        ],
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def load_mininet(path) -> MiniNet:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    net, extras = _deserialize(text, path, allowed_extras=("mini_class", "mini_threshold"))
    if "mini_class" not in extras or "mini_threshold" not in extras:
        raise FormatError(f"{path}: missing mini_class/mini_threshold header")
    if net.class_count != 1:
        raise FormatError(f"{path}: a pruned model must have a single output group")
    try:
        class_id = int(extras["mini_class"])
        threshold = float(extras["mini_threshold"])
    except ValueError as exc:
        raise FormatError(f"{path}: bad mini header value ({exc})") from exc
    return MiniNet(net, class_id, threshold, remap=None)

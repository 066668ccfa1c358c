"""Class-switch distance: how far an input must move along a saliency
direction before the model changes its prediction.

Three unit directions are derived from a map U: the full direction, the
positive part (removing present evidence), and the negative part (adding
absent evidence), with a small tolerance delta deciding borderline signs.
The perturbation loop subtracts alpha times the direction, clamps to [0,1],
and re-classifies with soft-semantics argmax after every step; it is a
step-by-step accumulation, not a closed form, so clamping and float
rounding behave exactly like the sequential process being measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import integrated_gradients, random_map, vanilla_gradients
from .data import Dataset
from .errors import DomainError
from .explain import (
    CLASS_VARIANTS,
    LOCAL_VARIANTS,
    VARIANT_G_EMPTY,
    VARIANT_L_A,
    class_map,
    local_map,
)
from .network import LogicNetwork, forward_hard_batch, forward_soft_batch, model_hash
from .saliency import SaliencyMap

DIR_FULL = "+/-I"
DIR_POS = "+I"
DIR_NEG = "-I"
DIRECTION_ORDER = (DIR_FULL, DIR_POS, DIR_NEG)

ALPHA_DEFAULT = 0.1

BASELINE_METHODS = ("random", "vg", "ig")
EVAL_METHODS = BASELINE_METHODS + LOCAL_VARIANTS + tuple(
    v for v in CLASS_VARIANTS if v != VARIANT_G_EMPTY
)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DomainError("cannot normalize the zero vector")
    return v / norm


@dataclass
class DirectionSet:
    u_full: np.ndarray
    u_pos: np.ndarray | None  # None when the mask removes everything
    u_neg: np.ndarray | None
    delta: float

    def get(self, label: str) -> np.ndarray | None:
        return {DIR_FULL: self.u_full, DIR_POS: self.u_pos, DIR_NEG: self.u_neg}[label]


def directions(smap: SaliencyMap | np.ndarray) -> DirectionSet:
    """U = unit(S); delta = population std of U / 100; positive part keeps
    coordinates with U + delta > 0, negative part the rest."""
    values = smap.values if isinstance(smap, SaliencyMap) else np.asarray(smap)
    U = unit(values)
    delta = float(np.std(U - U.mean())) / 100.0
    pos_mask = (U + delta) > 0.0
    u_pos = None
    u_neg = None
    masked_pos = U * pos_mask
    if np.any(masked_pos != 0.0):
        u_pos = unit(masked_pos)
    masked_neg = U * ~pos_mask
    if np.any(masked_neg != 0.0):
        u_neg = unit(masked_neg)
    return DirectionSet(U, u_pos, u_neg, delta)


@dataclass
class SwitchResult:
    switched: bool
    distance: float
    steps: int
    original_class: int
    new_class: int | None


def _classify_batch(net: LogicNetwork, P: np.ndarray) -> np.ndarray:
    _, scores = forward_soft_batch(net, P)
    return np.argmax(scores, axis=1)


def switch_dist(
    net: LogicNetwork,
    x,
    direction,
    alpha: float = ALPHA_DEFAULT,
    budget: float | None = None,
    chunk: int = 64,
) -> SwitchResult:
    """Walk x' <- clamp(x' - alpha * direction) until the argmax class flips,
    the L2 distance from x exceeds the budget, or the iterate stops moving
    (fully clamped).  The iterates are generated sequentially and classified
    in batches; both views are identical because classification has no effect
    on the path."""
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if x.shape != (net.input_dim,) or direction.shape != x.shape:
        raise DomainError("input/direction shape mismatch")
    if budget is None:
        budget = net.input_dim / 4.0
    original = int(_classify_batch(net, x[None, :])[0])
    step_cap = int(np.ceil(budget / alpha)) + 1
    iterates = []
    distances = []
    cur = x.copy()
    stalled = False
    for _ in range(step_cap):
        nxt = np.clip(cur - alpha * direction, 0.0, 1.0)
        if np.array_equal(nxt, cur):
            stalled = True
            break
        cur = nxt
        iterates.append(cur.copy())
        distances.append(float(np.linalg.norm(cur - x)))
        if distances[-1] > budget:
            break
    for lo in range(0, len(iterates), chunk):
        block = np.asarray(iterates[lo : lo + chunk])
        classes = _classify_batch(net, block)
        flips = np.flatnonzero(classes != original)
        if flips.size:
            t = lo + int(flips[0])
            return SwitchResult(True, distances[t], t + 1, original, int(classes[flips[0]]))
    steps = len(iterates)
    final_distance = distances[-1] if distances else 0.0
    del stalled  # termination cause is visible through distance vs budget
    return SwitchResult(False, final_distance, steps, original, None)


# ---------------------------------------------------------------------------
# evaluation over a test split
# ---------------------------------------------------------------------------


@dataclass
class EvalSummary:
    rows: list[dict]  # method, direction, mean, std, percent_switch, n_samples
    traces: list[dict] = field(default_factory=list)
    seed: int = 0
    model_id: str = ""

    def to_csv(self) -> str:
        lines = ["method,direction,mean,std,percent_switch,n_samples,seed,model_hash"]
        for r in self.rows:
            mean = "NaN" if np.isnan(r["mean"]) else format(r["mean"], ".17g")
            std = "NaN" if np.isnan(r["std"]) else format(r["std"], ".17g")
            lines.append(
                f"{r['method']},{r['direction']},{mean},{std},"
                f"{format(r['percent_switch'], '.17g')},{r['n_samples']},"
                f"{self.seed},{self.model_id}"
            )
        return "\n".join(lines) + "\n"

    def traces_to_csv(self) -> str:
        lines = ["sample_id,method,direction,switched,distance,steps"]
        for t in self.traces:
            lines.append(
                f"{t['sample_id']},{t['method']},{t['direction']},"
                f"{int(t['switched'])},{format(t['distance'], '.17g')},{t['steps']}"
            )
        return "\n".join(lines) + "\n"


def true_positive_indices(net: LogicNetwork, test_data: Dataset) -> np.ndarray:
    preds = np.argmax(forward_hard_batch(net, test_data.X), axis=1)
    return np.flatnonzero(preds == test_data.y)


def _method_map(net, method, x, predicted, class_maps, rng) -> SaliencyMap:
    if method == "random":
        return random_map(net.input_dim, rng)
    if method == "vg":
        return vanilla_gradients(net, x.astype(np.float64), predicted)
    if method == "ig":
        return integrated_gradients(net, x.astype(np.float64), predicted)
    if method in LOCAL_VARIANTS:
        return local_map(net, x, analytical=method == VARIANT_L_A)
    return class_maps[(method, predicted)]


def evaluate(
    net: LogicNetwork,
    test_data: Dataset,
    methods,
    seed: int = 0,
    alpha: float = ALPHA_DEFAULT,
    budget: float | None = None,
    sf_data: Dataset | None = None,
    max_samples: int | None = None,
    keep_traces: bool = True,
    log=None,
) -> EvalSummary:
    """SwitchDist statistics per method and direction over the true-positive
    test samples.  Class-level maps are computed once per (method, class) and
    reused; the random baseline draws one map per sample from the seed."""
    methods = list(methods)
    for m in methods:
        if m == VARIANT_G_EMPTY:
            raise DomainError(
                f"{VARIANT_G_EMPTY} is a structural visualization variant and is "
                "excluded from switch evaluation"
            )
        if m not in EVAL_METHODS:
            raise DomainError(f"unknown method {m!r}; choose from {EVAL_METHODS}")
    if net.mode != "hard":
        raise DomainError("evaluation requires a discretized network")
    tp = true_positive_indices(net, test_data)
    if tp.size == 0:
        raise DomainError("no true-positive samples to evaluate")
    if max_samples is not None:
        tp = tp[:max_samples]
    class_maps = {}
    for method in methods:
        if method in CLASS_VARIANTS:
            data = sf_data if sf_data is not None else test_data
            for c in range(net.class_count):
                class_maps[(method, c)] = class_map(net, c, method, data)
    rng = np.random.default_rng(seed)
    results = {(m, d): [] for m in methods for d in DIRECTION_ORDER}
    traces = []
    for count, idx in enumerate(tp):
        x = test_data.X[idx]
        predicted = int(test_data.y[idx])  # TP: prediction equals label
        for method in methods:
            smap = _method_map(net, method, x, predicted, class_maps, rng)
            if not np.any(smap.values):
                for d in DIRECTION_ORDER:
                    results[(method, d)].append(None)
                continue
            dirs = directions(smap)
            for d in DIRECTION_ORDER:
                vec = dirs.get(d)
                if vec is None:
                    results[(method, d)].append(None)
                    continue
                res = switch_dist(net, x.astype(np.float64), vec, alpha, budget)
                results[(method, d)].append(res)
                if keep_traces:
                    traces.append(
                        {
                            "sample_id": int(idx),
                            "method": method,
                            "direction": d,
                            "switched": res.switched,
                            "distance": res.distance,
                            "steps": res.steps,
                        }
                    )
        if log is not None and (count + 1) % 100 == 0:
            log(f"evaluated {count + 1}/{len(tp)} samples")
    rows = []
    for method in methods:
        for d in DIRECTION_ORDER:
            outcomes = [r for r in results[(method, d)] if r is not None]
            dists = np.array([r.distance for r in outcomes if r.switched])
            rows.append(
                {
                    "method": method,
                    "direction": d,
                    "mean": float(dists.mean()) if dists.size else float("nan"),
                    "std": float(dists.std()) if dists.size else float("nan"),
                    "median": float(np.median(dists)) if dists.size else float("nan"),
                    "percent_switch": 100.0 * len(dists) / len(outcomes)
                    if outcomes
                    else 0.0,
                    "n_samples": len(outcomes),
                }
            )
    return EvalSummary(rows, traces, seed, model_hash(net))

"""Layered two-input logic-gate networks.

A network is a DAG of layers; every node reads two indices from the previous
layer (layer 0 reads the input vector) and is either a fixed gate (hard mode)
or a 16-way logit distribution over gates (soft mode).  Class scores are sums
over contiguous per-class groups of the final layer.

Three evaluation paths share the same semantics:

* :func:`forward_hard` - boolean, one sample, keeps every node value,
* :func:`forward_hard_batch` - boolean, bit-packed words, many samples at
  once (this is the fast inference path),
* :func:`forward_soft` - probabilistic propagation of the gate formulas;
  for soft nodes the output is the softmax(logits/tau)-weighted mixture of
  all 16 gate outputs.

The soft path has an exact reverse-mode counterpart used by the trainer and
the gradient baselines.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FormatError
from .gates import BITWISE_OPS, NUM_GATES, TRUTH_TABLES, TRUTH_TABLES_F

FORMAT_MAGIC = "explogic-model"
FORMAT_VERSION = 1

HARD = "hard"
SOFT = "soft"

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


@dataclass(eq=False)
class Layer:
    in_a: np.ndarray
    in_b: np.ndarray
    gate_ids: np.ndarray | None = None
    logits: np.ndarray | None = None

    def __post_init__(self):
        self.in_a = np.asarray(self.in_a, dtype=np.int64)
        self.in_b = np.asarray(self.in_b, dtype=np.int64)
        if self.gate_ids is not None:
            self.gate_ids = np.asarray(self.gate_ids, dtype=np.int64)
        if self.logits is not None:
            self.logits = np.asarray(self.logits, dtype=np.float64)

    @property
    def width(self) -> int:
        return len(self.in_a)


@dataclass(eq=False)
class LogicNetwork:
    input_dim: int
    layers: list[Layer]
    class_count: int
    tau: float = 10.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.input_dim < 1:
            raise DomainError("input_dim must be positive")
        if not self.layers:
            raise DomainError("network needs at least one layer")
        if self.class_count < 1:
            raise DomainError("class_count must be positive")
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        modes = set()
        prev_width = self.input_dim
        for li, layer in enumerate(self.layers):
            n = layer.width
            if n < 1:
                raise DomainError(f"layer {li} is empty")
            if len(layer.in_b) != n:
                raise DomainError(f"layer {li}: in_a/in_b length mismatch")
            for name, idx in (("in_a", layer.in_a), ("in_b", layer.in_b)):
                if idx.size and (idx.min() < 0 or idx.max() >= prev_width):
                    raise DomainError(
                        f"layer {li}: {name} index outside previous width {prev_width}"
                    )
            if (layer.gate_ids is None) == (layer.logits is None):
                raise DomainError(f"layer {li}: exactly one of gate_ids/logits required")
            if layer.gate_ids is not None:
                modes.add(HARD)
                if len(layer.gate_ids) != n:
                    raise DomainError(f"layer {li}: gate_ids length mismatch")
                if layer.gate_ids.min() < 0 or layer.gate_ids.max() >= NUM_GATES:
                    raise DomainError(f"layer {li}: gate id outside 0..15")
            else:
                modes.add(SOFT)
                if layer.logits.shape != (n, NUM_GATES):
                    raise DomainError(f"layer {li}: logits must have shape (n, 16)")
            prev_width = n
        if len(modes) != 1:
            raise DomainError("layers mix hard and soft modes")
        if self.layers[-1].width % self.class_count != 0:
            raise DomainError(
                f"final width {self.layers[-1].width} not divisible by "
                f"class_count {self.class_count}"
            )

    @property
    def mode(self) -> str:
        return HARD if self.layers[0].gate_ids is not None else SOFT

    @property
    def group_size(self) -> int:
        return self.layers[-1].width // self.class_count

    @property
    def gate_count(self) -> int:
        return sum(layer.width for layer in self.layers)

    def clone(self) -> "LogicNetwork":
        layers = [
            Layer(
                layer.in_a.copy(),
                layer.in_b.copy(),
                None if layer.gate_ids is None else layer.gate_ids.copy(),
                None if layer.logits is None else layer.logits.copy(),
            )
            for layer in self.layers
        ]
        return LogicNetwork(self.input_dim, layers, self.class_count, self.tau)

    # -- wiring-derived caches (independent of logits, safe under training) --

    def _gate_groups(self, li: int):
        key = ("groups", li)
        if key not in self._cache:
            gate_ids = self.layers[li].gate_ids
            self._cache[key] = [
                (g, np.flatnonzero(gate_ids == g))
                for g in np.unique(gate_ids)
            ]
        return self._cache[key]

    def _scatter_plan(self, li: int, port: str):
        key = ("scatter", li, port)
        if key not in self._cache:
            layer = self.layers[li]
            idx = layer.in_a if port == "a" else layer.in_b
            size = self.input_dim if li == 0 else self.layers[li - 1].width
            self._cache[key] = _ScatterPlan(idx, size)
        return self._cache[key]


class _ScatterPlan:
    """Accumulates per-node values onto (possibly repeated) predecessor
    indices with a sort + segmented reduction; faster than np.add.at."""

    def __init__(self, indices: np.ndarray, out_size: int):
        order = np.argsort(indices, kind="stable")
        sorted_idx = indices[order]
        starts = np.flatnonzero(np.r_[True, sorted_idx[1:] != sorted_idx[:-1]])
        self.order = order
        self.starts = starts
        self.targets = sorted_idx[starts]
        self.out_size = out_size

    def add_into(self, out: np.ndarray, values: np.ndarray) -> None:
        seg = np.add.reduceat(values[:, self.order], self.starts, axis=1)
        out[:, self.targets] += seg


def networks_equal(a: LogicNetwork, b: LogicNetwork) -> bool:
    """Field-for-field equality, logits compared bit exactly."""
    if (
        a.input_dim != b.input_dim
        or a.class_count != b.class_count
        or a.tau != b.tau
        or len(a.layers) != len(b.layers)
        or a.mode != b.mode
    ):
        return False
    for la, lb in zip(a.layers, b.layers):
        if not (np.array_equal(la.in_a, lb.in_a) and np.array_equal(la.in_b, lb.in_b)):
            return False
        if la.gate_ids is not None:
            if not np.array_equal(la.gate_ids, lb.gate_ids):
                return False
        else:
            if la.logits.shape != lb.logits.shape or not np.array_equal(
                la.logits.view(np.uint64), lb.logits.view(np.uint64)
            ):
                return False
    return True


def _check_hard(net: LogicNetwork) -> None:
    if net.mode != HARD:
        raise DomainError("operation requires a discretized (hard) network")


def _group_scores(final_values: np.ndarray, class_count: int):
    # final_values: (..., final_width) -> (..., class_count)
    shape = final_values.shape[:-1] + (class_count, -1)
    return final_values.reshape(shape).sum(axis=-1)


def argmax_class(scores: np.ndarray) -> int | np.ndarray:
    """Predicted class; ties break to the lowest class index."""
    scores = np.asarray(scores)
    out = np.argmax(scores, axis=-1)
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# hard evaluation
# ---------------------------------------------------------------------------


def forward_hard(net: LogicNetwork, x: np.ndarray):
    """Single-sample boolean pass; returns (per-layer node bits, class scores)."""
    _check_hard(net)
    x = np.asarray(x)
    if x.shape != (net.input_dim,):
        raise DomainError(f"input shape {x.shape} != ({net.input_dim},)")
    vals = x.astype(np.uint8)
    layer_values = []
    for layer in net.layers:
        a = vals[layer.in_a].astype(np.intp)
        b = vals[layer.in_b].astype(np.intp)
        vals = TRUTH_TABLES[layer.gate_ids, 2 * a + b]
        layer_values.append(vals)
    scores = _group_scores(layer_values[-1].astype(np.int64), net.class_count)
    return layer_values, scores


def _pack_inputs(X: np.ndarray) -> np.ndarray:
    # X: (batch, dim) bits -> (dim, ceil(batch/8)) packed words
    return np.packbits(X.T.astype(np.uint8), axis=1)


def _run_packed(net: LogicNetwork, words: np.ndarray) -> list[np.ndarray]:
    layer_words = []
    vals = words
    for li, layer in enumerate(net.layers):
        wa = vals[layer.in_a]
        wb = vals[layer.in_b]
        out = np.empty_like(wa)
        for g, idx in net._gate_groups(li):
            out[idx] = BITWISE_OPS[g](wa[idx], wb[idx])
        vals = out
        layer_words.append(vals)
    return layer_words


def forward_hard_batch(net: LogicNetwork, X: np.ndarray) -> np.ndarray:
    """Bit-packed boolean pass over a batch; returns integer scores (B, C)."""
    _check_hard(net)
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DomainError(f"batch shape {X.shape} incompatible with input_dim {net.input_dim}")
    batch = X.shape[0]
    layer_words = _run_packed(net, _pack_inputs(X))
    final_bits = np.unpackbits(layer_words[-1], axis=1)[:, :batch]
    scores = _group_scores(final_bits.T.astype(np.int64), net.class_count)
    return scores


def hard_activation_counts(net: LogicNetwork, X: np.ndarray) -> list[np.ndarray]:
    """Per-layer counts of samples that drive each node to 1."""
    _check_hard(net)
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DomainError(f"batch shape {X.shape} incompatible with input_dim {net.input_dim}")
    batch = X.shape[0]
    layer_words = _run_packed(net, _pack_inputs(X))
    # NOT-style ops set padding bits; mask the last word before counting.
    n_words = layer_words[0].shape[1]
    mask = np.full(n_words, 0xFF, dtype=np.uint8)
    rem = batch % 8
    if rem:
        mask[-1] = (0xFF << (8 - rem)) & 0xFF
    return [_POPCOUNT8[words & mask].sum(axis=1) for words in layer_words]


# ---------------------------------------------------------------------------
# soft evaluation
# ---------------------------------------------------------------------------


def _softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _layer_truth_mix(net: LogicNetwork, layer: Layer):
    """Blended truth-table rows: one-hot for hard nodes, the softmax(logits)
    mixture for soft nodes.  Returns (tt (n, 4), weights or None).

    The mixture softmax runs at temperature 1; tau is the score temperature
    of the training loss, not a mixture sharpener.  Discretization (argmax)
    is invariant to that choice, and hard-mode semantics never see it.
    """
    if layer.gate_ids is not None:
        return TRUTH_TABLES_F[layer.gate_ids], None
    w = _softmax(layer.logits, axis=1)
    return w @ TRUTH_TABLES_F, w


def _forward_soft_cached(net: LogicNetwork, P: np.ndarray):
    """Batch soft pass keeping everything the backward sweep needs."""
    probs = P
    cache = []
    layer_probs = []
    for layer in net.layers:
        pa = probs[:, layer.in_a]
        pb = probs[:, layer.in_b]
        tt, w = _layer_truth_mix(net, layer)
        qa = 1.0 - pa
        qb = 1.0 - pb
        out = tt[:, 0] * qa * qb + tt[:, 1] * qa * pb + tt[:, 2] * pa * qb + tt[:, 3] * pa * pb
        cache.append((pa, pb, tt, w))
        layer_probs.append(out)
        probs = out
    scores = _group_scores(layer_probs[-1], net.class_count)
    return layer_probs, scores, cache


def forward_soft_batch(net: LogicNetwork, P: np.ndarray):
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != net.input_dim:
        raise DomainError(f"batch shape {P.shape} incompatible with input_dim {net.input_dim}")
    layer_probs, scores, _ = _forward_soft_cached(net, P)
    return layer_probs, scores


def forward_soft(net: LogicNetwork, p: np.ndarray):
    """Probabilistic pass for one input; returns (per-layer probs, class scores)."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (net.input_dim,):
        raise DomainError(f"input shape {p.shape} != ({net.input_dim},)")
    layer_probs, scores = forward_soft_batch(net, p[None, :])
    return [lp[0] for lp in layer_probs], scores[0]


def _backward_batch(
    net: LogicNetwork,
    P: np.ndarray,
    cache: list,
    dscores: np.ndarray,
    grad_factor: float = 1.0,
    want_logit_grads: bool = False,
):
    """Reverse sweep from score gradients to input (and optionally logit) grads."""
    batch = dscores.shape[0]
    group = net.group_size
    dout = np.repeat(dscores, group, axis=1)
    dlogits = [None] * len(net.layers) if want_logit_grads else None
    for li in range(len(net.layers) - 1, -1, -1):
        pa, pb, tt, w = cache[li]
        if grad_factor != 1.0:
            dout = dout * grad_factor
        qa = 1.0 - pa
        qb = 1.0 - pb
        dpa = dout * ((tt[:, 2] - tt[:, 0]) * qb + (tt[:, 3] - tt[:, 1]) * pb)
        dpb = dout * ((tt[:, 1] - tt[:, 0]) * qa + (tt[:, 3] - tt[:, 2]) * pa)
        if want_logit_grads and w is not None:
            basis = np.stack((qa * qb, qa * pb, pa * qb, pa * pb), axis=2)
            dtt = np.einsum("bn,bnk->nk", dout, basis)
            dw = dtt @ TRUTH_TABLES_F.T
            inner = (w * dw).sum(axis=1, keepdims=True)
            dlogits[li] = w * (dw - inner)
        size = net.input_dim if li == 0 else net.layers[li - 1].width
        dprev = np.zeros((batch, size), dtype=np.float64)
        net._scatter_plan(li, "a").add_into(dprev, dpa)
        net._scatter_plan(li, "b").add_into(dprev, dpb)
        dout = dprev
    return dout, dlogits


def backward_soft(net: LogicNetwork, p: np.ndarray, class_id: int) -> np.ndarray:
    """Exact gradient of one class score with respect to the input vector."""
    if not 0 <= class_id < net.class_count:
        raise DomainError(f"class {class_id} outside 0..{net.class_count - 1}")
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (net.input_dim,):
        raise DomainError(f"input shape {p.shape} != ({net.input_dim},)")
    P = p[None, :]
    _, _, cache = _forward_soft_cached(net, P)
    dscores = np.zeros((1, net.class_count), dtype=np.float64)
    dscores[0, class_id] = 1.0
    dinputs, _ = _backward_batch(net, P, cache, dscores)
    return dinputs[0]


def backward_soft_batch(net: LogicNetwork, P: np.ndarray, class_id: int) -> np.ndarray:
    """Batched :func:`backward_soft` for one shared class id."""
    if not 0 <= class_id < net.class_count:
        raise DomainError(f"class {class_id} outside 0..{net.class_count - 1}")
    P = np.asarray(P, dtype=np.float64)
    _, _, cache = _forward_soft_cached(net, P)
    dscores = np.zeros((P.shape[0], net.class_count), dtype=np.float64)
    dscores[:, class_id] = 1.0
    dinputs, _ = _backward_batch(net, P, cache, dscores)
    return dinputs


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _serialize(net: LogicNetwork, extra_header: list[tuple[str, str]] | None = None) -> str:
    out = io.StringIO()
    out.write(f"{FORMAT_MAGIC} {FORMAT_VERSION}\n")
    out.write(f"input_dim {net.input_dim}\n")
    out.write(f"class_count {net.class_count}\n")
    out.write(f"group_size {net.group_size}\n")
    out.write(f"mode {net.mode}\n")
    out.write(f"tau {_fmt(net.tau)}\n")
    for key, value in extra_header or []:
        out.write(f"{key} {value}\n")
    out.write(f"layers {len(net.layers)}\n")
    for li, layer in enumerate(net.layers):
        out.write(f"layer {li} {layer.width}\n")
        if layer.gate_ids is not None:
            for a, b, g in zip(layer.in_a, layer.in_b, layer.gate_ids):
                out.write(f"{a} {b} {g}\n")
        else:
            for a, b, row in zip(layer.in_a, layer.in_b, layer.logits):
                out.write(f"{a} {b} " + " ".join(_fmt(v) for v in row) + "\n")
    out.write("end\n")
    return out.getvalue()


def save(net: LogicNetwork, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_serialize(net))


def model_hash(net: LogicNetwork) -> str:
    """sha256 of the canonical text form; stable across processes."""
    import hashlib

    return hashlib.sha256(_serialize(net).encode("ascii")).hexdigest()


class _Reader:
    def __init__(self, text: str, path):
        self.lines = text.splitlines()
        self.pos = 0
        self.path = path

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"{self.path}: truncated file")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_field(self, key: str) -> str:
        line = self.next()
        parts = line.split(None, 1)
        if len(parts) != 2 or parts[0] != key:
            raise FormatError(f"{self.path}: expected field {key!r}, got {line!r}")
        return parts[1]

    def peek_key(self) -> str:
        if self.pos >= len(self.lines):
            raise FormatError(f"{self.path}: truncated file")
        return self.lines[self.pos].split(None, 1)[0] if self.lines[self.pos] else ""


def _parse_int(reader: _Reader, text: str, label: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"{reader.path}: bad integer for {label}: {text!r}") from None


def _parse_float(reader: _Reader, text: str, label: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"{reader.path}: bad number for {label}: {text!r}") from None


def _deserialize(text: str, path, allowed_extras: tuple[str, ...] = ()):
    r = _Reader(text, path)
    head = r.next().split()
    if len(head) != 2 or head[0] != FORMAT_MAGIC:
        raise FormatError(f"{path}: not an explogic model file")
    if head[1] != str(FORMAT_VERSION):
        raise FormatError(f"{path}: unsupported format version {head[1]!r}")
    input_dim = _parse_int(r, r.expect_field("input_dim"), "input_dim")
    class_count = _parse_int(r, r.expect_field("class_count"), "class_count")
    group_size = _parse_int(r, r.expect_field("group_size"), "group_size")
    mode = r.expect_field("mode")
    if mode not in (HARD, SOFT):
        raise FormatError(f"{path}: unknown mode {mode!r}")
    tau = _parse_float(r, r.expect_field("tau"), "tau")
    extras = {}
    while r.peek_key() in allowed_extras:
        key = r.peek_key()
        extras[key] = r.expect_field(key)
    n_layers = _parse_int(r, r.expect_field("layers"), "layers")
    layers = []
    for li in range(n_layers):
        parts = r.next().split()
        if len(parts) != 3 or parts[0] != "layer":
            raise FormatError(f"{path}: expected layer header for layer {li}")
        if _parse_int(r, parts[1], "layer index") != li:
            raise FormatError(f"{path}: layer index out of order")
        width = _parse_int(r, parts[2], "layer width")
        in_a = np.empty(width, dtype=np.int64)
        in_b = np.empty(width, dtype=np.int64)
        if mode == HARD:
            gate_ids = np.empty(width, dtype=np.int64)
            logits = None
        else:
            gate_ids = None
            logits = np.empty((width, NUM_GATES), dtype=np.float64)
        for ni in range(width):
            fields = r.next().split()
            expected = 3 if mode == HARD else 2 + NUM_GATES
            if len(fields) != expected:
                raise FormatError(f"{path}: layer {li} node {ni}: expected {expected} fields")
            in_a[ni] = _parse_int(r, fields[0], "in_a")
            in_b[ni] = _parse_int(r, fields[1], "in_b")
            if mode == HARD:
                gate_ids[ni] = _parse_int(r, fields[2], "gate_id")
            else:
                for k in range(NUM_GATES):
                    logits[ni, k] = _parse_float(r, fields[2 + k], f"logit {k}")
        layers.append(Layer(in_a, in_b, gate_ids, logits))
    if r.next() != "end":
        raise FormatError(f"{path}: missing end marker")
    if r.pos != len(r.lines) and any(l.strip() for l in r.lines[r.pos:]):
        raise FormatError(f"{path}: trailing content after end marker")
    try:
        net = LogicNetwork(input_dim, layers, class_count, tau)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if net.group_size != group_size:
        raise FormatError(
            f"{path}: header group_size {group_size} inconsistent with "
            f"final width {net.layers[-1].width} / class_count {class_count}"
        )
    return net, extras


def load(path) -> LogicNetwork:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    net, _ = _deserialize(text, path)
    return net

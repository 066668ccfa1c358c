"""Gradient training of soft gate mixtures and discretization to hard nets.

The trainable parameters are the per-node 16-way gate logits; wiring never
changes.  The loss is cross-entropy of softmax(class scores / tau), with
scores produced by the mixture semantics of forward_soft, so training and
inference share one definition of the network function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import Dataset
from .errors import DomainError, FormatError, TrainingError
from .network import (
    Layer,
    LogicNetwork,
    _backward_batch,
    _forward_soft_cached,
    _softmax,
    forward_hard_batch,
    forward_soft_batch,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOGIT_INIT_SCALE = 0.1


@dataclass
class TrainConfig:
    layers: list[int] = field(default_factory=lambda: [2500, 2500])
    learning_rate: float = 0.01
    tau: float = 10.0
    grad_factor: float = 1.0
    epochs: int = 30
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if not self.layers or any(w < 1 for w in self.layers):
            raise DomainError("layer widths must be positive")
        if self.tau <= 0:
            raise DomainError("tau must be positive")
        if self.learning_rate < 0:
            raise DomainError("learning rate must be non-negative")
        if self.epochs < 0 or self.batch_size < 1:
            raise DomainError("epochs must be >= 0 and batch_size >= 1")


def load_config(path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid config: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    allowed = set(TrainConfig.__dataclass_fields__)
    unknown = set(raw) - allowed
    if unknown:
        raise FormatError(f"{path}: unknown config fields {sorted(unknown)}")
    try:
        return TrainConfig(**raw)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_config(config: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class TrainReport:
    epochs: list[dict]  # {"epoch", "loss", "train_acc", "test_acc"}
    final_test_accuracy: float

    def to_csv(self) -> str:
        lines = ["epoch,loss,train_acc,test_acc"]
        for row in self.epochs:
            test = "" if row["test_acc"] is None else format(row["test_acc"], ".17g")
            lines.append(
                f"{row['epoch']},{format(row['loss'], '.17g')},"
                f"{format(row['train_acc'], '.17g')},{test}"
            )
        return "\n".join(lines) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_csv())


def init_network(
    config: TrainConfig, input_dim: int, class_count: int, seed: int | None = None
) -> LogicNetwork:
    """Random wiring (two distinct predecessors per node) and N(0, 0.1^2) logits."""
    if config.layers[-1] % class_count != 0:
        raise DomainError(
            f"final width {config.layers[-1]} not divisible by {class_count} classes"
        )
    rng = np.random.default_rng(config.seed if seed is None else seed)
    layers = []
    prev = input_dim
    for width in config.layers:
        in_a = rng.integers(0, prev, size=width)
        in_b = rng.integers(0, prev, size=width)
        if prev > 1:
            while True:
                clash = np.flatnonzero(in_a == in_b)
                if clash.size == 0:
                    break
                in_b[clash] = rng.integers(0, prev, size=clash.size)
        logits = rng.normal(0.0, 1.0, size=(width, 16)) * LOGIT_INIT_SCALE
        layers.append(Layer(in_a, in_b, logits=logits))
        prev = width
    return LogicNetwork(input_dim, layers, class_count, tau=config.tau)


def accuracy(net: LogicNetwork, dataset: Dataset, chunk: int = 2048) -> float:
    """Argmax accuracy; hard nets use the packed path, soft nets the mixture."""
    correct = 0
    for lo in range(0, len(dataset), chunk):
        X = dataset.X[lo : lo + chunk]
        if net.mode == "hard":
            scores = forward_hard_batch(net, X)
        else:
            _, scores = forward_soft_batch(net, X.astype(np.float64))
        correct += int((np.argmax(scores, axis=1) == dataset.y[lo : lo + chunk]).sum())
    return correct / len(dataset)


def _loss_and_score_grad(scores: np.ndarray, y: np.ndarray, tau: float):
    z = scores / tau
    probs = _softmax(z, axis=1)
    n = len(y)
    eps_floor = np.maximum(probs[np.arange(n), y], 1e-300)
    loss = float(-np.mean(np.log(eps_floor)))
    grad = probs.copy()
    grad[np.arange(n), y] -= 1.0
    grad /= tau * n
    return loss, grad


def train(
    net: LogicNetwork,
    train_data: Dataset,
    config: TrainConfig,
    test_data: Dataset | None = None,
    log=None,
) -> TrainReport:
    """Adam over gate logits; returns the per-epoch report."""
    if net.mode != "soft":
        raise DomainError("training requires a soft network")
    if len(train_data) == 0:
        raise DomainError("empty training set")
    rng = np.random.default_rng(config.seed)
    X = train_data.X.astype(np.float64)
    y = train_data.y
    m = [np.zeros_like(l.logits) for l in net.layers]
    v = [np.zeros_like(l.logits) for l in net.layers]
    step = 0
    rows = []
    for epoch in range(config.epochs):
        perm = rng.permutation(len(X))
        losses = []
        for lo in range(0, len(X), config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            P = X[idx]
            _, scores, cache = _forward_soft_cached(net, P)
            loss, dscores = _loss_and_score_grad(scores, y[idx], config.tau)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch} step {step}"
                )
            losses.append(loss)
            _, dlogits = _backward_batch(
                net, P, cache, dscores, config.grad_factor, want_logit_grads=True
            )
            step += 1
            corr1 = 1.0 - ADAM_BETA1**step
            corr2 = 1.0 - ADAM_BETA2**step
            for li, g in enumerate(dlogits):
                m[li] = ADAM_BETA1 * m[li] + (1 - ADAM_BETA1) * g
                v[li] = ADAM_BETA2 * v[li] + (1 - ADAM_BETA2) * g * g
                net.layers[li].logits -= (
                    config.learning_rate
                    * (m[li] / corr1)
                    / (np.sqrt(v[li] / corr2) + ADAM_EPS)
                )
        row = {
            "epoch": epoch,
            "loss": float(np.mean(losses)) if losses else 0.0,
            "train_acc": accuracy(net, train_data),
            "test_acc": accuracy(net, test_data) if test_data is not None else None,
        }
        rows.append(row)
        if log is not None:
            shown = "" if row["test_acc"] is None else f" test_acc={row['test_acc']:.4f}"
            log(f"epoch {epoch}: loss={row['loss']:.4f} train_acc={row['train_acc']:.4f}{shown}")
    final = rows[-1]["test_acc"] if rows and rows[-1]["test_acc"] is not None else float("nan")
    return TrainReport(rows, final)


def discretize(net: LogicNetwork) -> LogicNetwork:
    """Snap each node to its argmax gate (ties to the lower id); wiring kept."""
    if net.mode == "hard":
        return net.clone()
    layers = [
        Layer(l.in_a.copy(), l.in_b.copy(), gate_ids=np.argmax(l.logits, axis=1))
        for l in net.layers
    ]
    return LogicNetwork(net.input_dim, layers, net.class_count, net.tau)

"""Differentiable logic-gate networks with circuit-native explanations.

Train a softmax-relaxed gate network, snap it to a hard netlist, explain
predictions by traversing live gate ports, score explanation quality by how
far an input must move along a map to flip the class, and prune per-class
MiniNets that reproduce their parent's score exactly.
"""

__version__ = "0.1.0"

from .baselines import integrated_gradients, random_map, vanilla_gradients
from .data import Dataset, RawDataset, load_idx, pixel_stats, preprocess, split
from .errors import DomainError, ExplogicError, FormatError, TrainingError
from .explain import (
    ALL_VARIANTS,
    ExplanationSpec,
    class_map,
    explain,
    fanin,
    local_map,
    sp_analytical,
    sp_empirical,
    structural_fanin,
)
from .gates import GATE_NAMES, GATES, eval_hard, eval_soft, port_kind, port_sign
from .mininet import (
    MiniNet,
    benchmark,
    build_mininet,
    fanin_cone,
    fit_threshold,
    load_mininet,
    save_mininet,
)
from .network import (
    Layer,
    LogicNetwork,
    backward_soft,
    forward_hard,
    forward_hard_batch,
    forward_soft,
    forward_soft_batch,
    load,
    model_hash,
    save,
)
from .saliency import SaliencyMap
from .switchdist import directions, evaluate, switch_dist
from .training import (
    TrainConfig,
    TrainReport,
    accuracy,
    discretize,
    init_network,
    train,
)

__all__ = [
    "ALL_VARIANTS",
    "Dataset",
    "DomainError",
    "ExplanationSpec",
    "ExplogicError",
    "FormatError",
    "GATES",
    "GATE_NAMES",
    "Layer",
    "LogicNetwork",
    "MiniNet",
    "RawDataset",
    "SaliencyMap",
    "TrainConfig",
    "TrainReport",
    "TrainingError",
    "accuracy",
    "backward_soft",
    "benchmark",
    "build_mininet",
    "class_map",
    "directions",
    "discretize",
    "eval_hard",
    "eval_soft",
    "evaluate",
    "explain",
    "fanin",
    "fanin_cone",
    "fit_threshold",
    "forward_hard",
    "forward_hard_batch",
    "forward_soft",
    "forward_soft_batch",
    "init_network",
    "integrated_gradients",
    "load",
    "load_idx",
    "load_mininet",
    "local_map",
    "model_hash",
    "pixel_stats",
    "port_kind",
    "port_sign",
    "preprocess",
    "random_map",
    "save",
    "save_mininet",
    "sp_analytical",
    "sp_empirical",
    "split",
    "structural_fanin",
    "switch_dist",
    "train",
    "vanilla_gradients",
]

"""The 16 two-input logic gate primitives.

Each gate id 0..15 encodes its truth table read as a 4-bit number over the
input pairs AB = 00, 01, 10, 11 (00 is the most significant bit).  Every gate
has three semantics:

* hard: the boolean truth table,
* soft: the multilinear probability of the output being 1 given independent
  Bernoulli inputs with P(A)=pa, P(B)=pb,
* differential: analytic partials of the soft form.

Per-port monotonicity metadata (ignored / positive / negative / nonmonotone)
drives sign tracking in fan-in traversals and cone extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

NUM_GATES = 16
FALSE_GATE = 0
TRUE_GATE = 15

GATE_NAMES = (
    "FALSE",
    "AND(A,B)",
    "AND(A,NOT(B))",
    "A",
    "AND(NOT(A),B)",
    "B",
    "XOR(A,B)",
    "OR(A,B)",
    "NOR(A,B)",
    "XNOR(A,B)",
    "NOT(B)",
    "OR(A,NOT(B))",
    "NOT(A)",
    "OR(NOT(A),B)",
    "NAND(A,B)",
    "TRUE",
)

# TRUTH_TABLES[g, k] = gate g output for input pair k in (00, 01, 10, 11).
TRUTH_TABLES = np.array(
    [[(g >> (3 - k)) & 1 for k in range(4)] for g in range(NUM_GATES)],
    dtype=np.uint8,
)
TRUTH_TABLES.setflags(write=False)

# Float copy used by probabilistic evaluation paths.
TRUTH_TABLES_F = TRUTH_TABLES.astype(np.float64)
TRUTH_TABLES_F.setflags(write=False)

PORT_A = "A"
PORT_B = "B"

IGNORED = "ignored"
POSITIVE = "positive"
NEGATIVE = "negative"
NONMONOTONE = "nonmonotone"

XOR_ID = 6
XNOR_ID = 9


@dataclass(frozen=True)
class GateType:
    id: int
    name: str
    truth_table: tuple[int, int, int, int]


GATES: tuple[GateType, ...] = tuple(
    GateType(g, GATE_NAMES[g], tuple(int(v) for v in TRUTH_TABLES[g]))
    for g in range(NUM_GATES)
)


def _gate_id(gate) -> int:
    gid = gate.id if isinstance(gate, GateType) else int(gate)
    if not 0 <= gid < NUM_GATES:
        raise DomainError(f"gate id {gid} outside 0..15")
    return gid


def _check_probability(p, label: str) -> None:
    arr = np.asarray(p, dtype=np.float64)
    if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
        raise DomainError(f"{label} outside [0, 1]")


def eval_hard(gate, a, b):
    """Boolean output of the gate; a and b must be 0/1 (scalars or arrays)."""
    gid = _gate_id(gate)
    a = np.asarray(a)
    b = np.asarray(b)
    if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
        raise DomainError("hard inputs must be bits")
    out = TRUTH_TABLES[gid, 2 * a.astype(np.intp) + b.astype(np.intp)]
    return int(out) if out.ndim == 0 else out


# Closed-form soft output per gate, written out gate by gate so that the
# Bernoulli-enumeration consistency check in the tests stays an independent
# route to the same values.
_SOFT = {
    0: lambda pa, pb: 0.0 * (pa + pb),
    1: lambda pa, pb: pa * pb,
    2: lambda pa, pb: pa - pa * pb,
    3: lambda pa, pb: pa + 0.0 * pb,
    4: lambda pa, pb: pb - pa * pb,
    5: lambda pa, pb: pb + 0.0 * pa,
    6: lambda pa, pb: pa + pb - 2.0 * pa * pb,
    7: lambda pa, pb: pa + pb - pa * pb,
    8: lambda pa, pb: 1.0 - (pa + pb - pa * pb),
    9: lambda pa, pb: 1.0 - (pa + pb - 2.0 * pa * pb),
    10: lambda pa, pb: 1.0 - pb + 0.0 * pa,
    11: lambda pa, pb: 1.0 - pb + pa * pb,
    12: lambda pa, pb: 1.0 - pa + 0.0 * pb,
    13: lambda pa, pb: 1.0 - pa + pa * pb,
    14: lambda pa, pb: 1.0 - pa * pb,
    15: lambda pa, pb: 1.0 + 0.0 * (pa + pb),
}

_SOFT_GRAD = {
    0: lambda pa, pb: (0.0 * pa, 0.0 * pb),
    1: lambda pa, pb: (pb + 0.0 * pa, pa + 0.0 * pb),
    2: lambda pa, pb: (1.0 - pb, -pa),
    3: lambda pa, pb: (1.0 + 0.0 * pa, 0.0 * pb),
    4: lambda pa, pb: (-pb, 1.0 - pa),
    5: lambda pa, pb: (0.0 * pa, 1.0 + 0.0 * pb),
    6: lambda pa, pb: (1.0 - 2.0 * pb, 1.0 - 2.0 * pa),
    7: lambda pa, pb: (1.0 - pb, 1.0 - pa),
    8: lambda pa, pb: (pb - 1.0, pa - 1.0),
    9: lambda pa, pb: (2.0 * pb - 1.0, 2.0 * pa - 1.0),
    10: lambda pa, pb: (0.0 * pa, -1.0 + 0.0 * pb),
    11: lambda pa, pb: (pb + 0.0 * pa, pa - 1.0),
    12: lambda pa, pb: (-1.0 + 0.0 * pa, 0.0 * pb),
    13: lambda pa, pb: (pb - 1.0, pa + 0.0 * pb),
    14: lambda pa, pb: (-pb, -pa),
    15: lambda pa, pb: (0.0 * pa, 0.0 * pb),
}


def eval_soft(gate, pa, pb):
    """P(output = 1) for independent Bernoulli inputs."""
    gid = _gate_id(gate)
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    _check_probability(pa, "pa")
    _check_probability(pb, "pb")
    out = np.asarray(_SOFT[gid](pa, pb))
    return float(out) if out.ndim == 0 else out


def soft_gradient(gate, pa, pb):
    """Analytic (d/dpa, d/dpb) of :func:`eval_soft`."""
    gid = _gate_id(gate)
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    da, db = _SOFT_GRAD[gid](pa, pb)
    da = np.asarray(da, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    if da.ndim == 0 and db.ndim == 0:
        return float(da), float(db)
    return da, db


def eval_soft_all(pa, pb):
    """Stacked soft outputs of all 16 gates, shape (16,) + broadcast shape."""
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    shape = np.broadcast_shapes(pa.shape, pb.shape)
    out = np.empty((NUM_GATES,) + shape, dtype=np.float64)
    for g in range(NUM_GATES):
        out[g] = _SOFT[g](pa, pb)
    return out


def _derive_port_kinds() -> tuple[tuple[str, ...], tuple[str, ...]]:
    # The soft form is multilinear, so each partial is linear in the partner
    # probability; its sign over the unit square is read off the truth table.
    kinds_a, kinds_b = [], []
    for g in range(NUM_GATES):
        t = TRUTH_TABLES[g].astype(int)
        for deltas, kinds in (
            ((t[2] - t[0], t[3] - t[1]), kinds_a),  # d/dpa at pb=0 and pb=1
            ((t[1] - t[0], t[3] - t[2]), kinds_b),  # d/dpb at pa=0 and pa=1
        ):
            lo, hi = deltas
            if lo == 0 and hi == 0:
                kinds.append(IGNORED)
            elif lo >= 0 and hi >= 0:
                kinds.append(POSITIVE)
            elif lo <= 0 and hi <= 0:
                kinds.append(NEGATIVE)
            else:
                kinds.append(NONMONOTONE)
    return tuple(kinds_a), tuple(kinds_b)


PORT_A_KIND, PORT_B_KIND = _derive_port_kinds()

IGNORED_A = frozenset(g for g in range(NUM_GATES) if PORT_A_KIND[g] == IGNORED)
IGNORED_B = frozenset(g for g in range(NUM_GATES) if PORT_B_KIND[g] == IGNORED)
NEGATED_A = frozenset(g for g in range(NUM_GATES) if PORT_A_KIND[g] == NEGATIVE)
NEGATED_B = frozenset(g for g in range(NUM_GATES) if PORT_B_KIND[g] == NEGATIVE)


def port_kind(gate, port: str) -> str:
    gid = _gate_id(gate)
    if port == PORT_A:
        return PORT_A_KIND[gid]
    if port == PORT_B:
        return PORT_B_KIND[gid]
    raise DomainError(f"unknown port {port!r}")


def port_sign(gate, port: str, partner_sf: float) -> int:
    """Sign contributed to a traversal crossing this port: +1, -1, or 0.

    0 means the port is ignored by the gate.  XOR/XNOR resolve to the sign of
    the local partial at the partner's saliency factor; an exact 0.5 tie
    resolves to +1.
    """
    kind = port_kind(gate, port)
    if kind == IGNORED:
        return 0
    if kind == POSITIVE:
        return 1
    if kind == NEGATIVE:
        return -1
    gid = _gate_id(gate)
    if not 0.0 <= partner_sf <= 1.0:
        raise DomainError("partner saliency factor outside [0, 1]")
    if partner_sf == 0.5:
        return 1
    local = partner_sf < 0.5
    if gid == XOR_ID:
        return 1 if local else -1
    return -1 if local else 1


# Bitwise forms used by the packed batch evaluator; operands are packed
# uint8 words, one bit per sample.
BITWISE_OPS = {
    0: lambda a, b: np.zeros_like(a),
    1: lambda a, b: a & b,
    2: lambda a, b: a & ~b,
    3: lambda a, b: a.copy(),
    4: lambda a, b: ~a & b,
    5: lambda a, b: b.copy(),
    6: lambda a, b: a ^ b,
    7: lambda a, b: a | b,
    8: lambda a, b: ~(a | b),
    9: lambda a, b: ~(a ^ b),
    10: lambda a, b: ~b,
    11: lambda a, b: a | ~b,
    12: lambda a, b: ~a,
    13: lambda a, b: ~a | b,
    14: lambda a, b: ~(a & b),
    15: lambda a, b: np.full_like(a, 0xFF),
}

"""Shared circuit builders and brute-force oracles."""

import itertools

import numpy as np

from explogic.network import Layer, LogicNetwork, forward_hard


def random_hard_net(rng, input_dim=12, widths=(10, 8), class_count=2, tau=10.0):
    layers = []
    prev = input_dim
    for w in widths:
        layers.append(
            Layer(
                rng.integers(0, prev, size=w),
                rng.integers(0, prev, size=w),
                gate_ids=rng.integers(0, 16, size=w),
            )
        )
        prev = w
    return LogicNetwork(input_dim, layers, class_count, tau)


def random_fanout_free_net(rng, n_inputs=8, depth=3):
    """Tree-shaped net: every input and internal node feeds exactly one port.

    Built by randomly pairing the previous layer's outputs, so each layer
    halves the width; n_inputs must be a power of two >= 2**depth.
    """
    assert n_inputs % (2**depth) == 0 and n_inputs >= 2**depth
    layers = []
    prev = n_inputs
    for _ in range(depth):
        width = prev // 2
        perm = rng.permutation(prev)
        in_a = perm[0::2]
        in_b = perm[1::2]
        layers.append(Layer(in_a, in_b, gate_ids=rng.integers(0, 16, size=width)))
        prev = width
    return LogicNetwork(n_inputs, layers, class_count=prev)


def all_binary_inputs(dim):
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.uint8)


def exact_signal_probabilities(net, p):
    """Exhaustive Bernoulli-weighted node activation probabilities."""
    p = np.asarray(p, dtype=np.float64)
    totals = [np.zeros(l.width) for l in net.layers]
    for x in all_binary_inputs(net.input_dim):
        w = float(np.prod(np.where(x == 1, p, 1.0 - p)))
        layer_vals, _ = forward_hard(net, x)
        for li, vals in enumerate(layer_vals):
            totals[li] += w * vals
    return totals


def root_function(net, root):
    """Truth table of one node over all binary inputs."""
    li, ni = root
    outs = {}
    for x in all_binary_inputs(net.input_dim):
        layer_vals, _ = forward_hard(net, x)
        outs[tuple(int(v) for v in x)] = int(layer_vals[li][ni])
    return outs


def dependence_set(net, root):
    """Inputs on which the root functionally depends (brute force)."""
    table = root_function(net, root)
    deps = set()
    for x in all_binary_inputs(net.input_dim):
        key = tuple(int(v) for v in x)
        for i in range(net.input_dim):
            flipped = list(key)
            flipped[i] ^= 1
            if table[tuple(flipped)] != table[key]:
                deps.add(i)
    return deps

"""Small tanh MLPs shared by the world model and the initialization network."""

from __future__ import annotations

import numpy as np

from . import diffcore as dc
from .rng import generator


def init_mlp(sizes: tuple[int, ...], seed: int) -> list[np.ndarray]:
    """Weights/biases drawn uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    rng = generator(seed, "init-mlp")
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        weights.append(rng.uniform(-bound, bound, size=fan_out))
    return weights


def mlp_forward_np(weights: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """tanh hidden layers, linear output; x is (d,) or a batch (B, d)."""
    n_layers = len(weights) // 2
    for i in range(n_layers):
        x = x @ weights[2 * i] + weights[2 * i + 1]
        if i < n_layers - 1:
            x = np.tanh(x)
    return x


def lift_params(tape: dc.Tape, weights: list[np.ndarray]) -> list[dc.Node]:
    """Put parameter tensors on a tape without copying.

    Weights are replaced (never mutated in place) by the update rules, so
    aliasing them from short-lived tapes is safe; validation happened at
    initialization or checkpoint load."""
    return [dc.Node(tape, np.asarray(w, dtype=np.float64), "param", (), ())
            for w in weights]


def mlp_forward_nodes(params: list[dc.Node], x: dc.Node) -> dc.Node:
    n_layers = len(params) // 2
    for i in range(n_layers):
        x = dc.affine(x, params[2 * i], params[2 * i + 1])
        if i < n_layers - 1:
            x = dc.tanh(x)
    return x

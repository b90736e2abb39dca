"""Action-sequence initialization network g: (z_1, z_goal) -> H actions.

Trained by supervised regression onto expert action sequences; a final
tanh scaled by a_max keeps proposals inside the action bounds. Used as an
alternative to Gaussian initialization for gradient-based planning.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from . import nets, tensorio
from .data import Dataset
from .rng import generator


@dataclass
class InitNet:
    weights: list[np.ndarray]
    d_z: int
    d_a: int
    horizon: int
    a_max: float
    hidden: tuple[int, ...] = (128, 128)


def make_initnet(d_z: int, d_a: int, horizon: int, a_max: float,
                 hidden: tuple[int, ...] = (128, 128), seed: int = 0) -> InitNet:
    sizes = (2 * d_z,) + tuple(hidden) + (horizon * d_a,)
    return InitNet(nets.init_mlp(sizes, seed), d_z, d_a, horizon, a_max,
                   tuple(hidden))


def init_actions(g: InitNet, z1: np.ndarray, z_goal: np.ndarray) -> np.ndarray:
    """Deterministic forward pass, reshaped to (H, d_a)."""
    z1 = np.asarray(z1, dtype=np.float64)
    z_goal = np.asarray(z_goal, dtype=np.float64)
    if z1.shape != (g.d_z,) or z_goal.shape != (g.d_z,):
        raise ValueError(f"latent dims must be ({g.d_z},)")
    x = np.concatenate([z1, z_goal])
    out = g.a_max * np.tanh(nets.mlp_forward_np(g.weights, x))
    return out.reshape(g.horizon, g.d_a)


def as_planner_init(g: InitNet):
    """Adapter for PlanConfig(init="initnet", init_actions=...)."""
    return lambda z1, z_goal: init_actions(g, z1, z_goal)


@dataclass
class InitTrainResult:
    net: InitNet
    losses: list[float] = field(default_factory=list)


def train_initnet(data: Dataset, H: int, iterations: int | None = None,
                  lr: float = 0.02, seed: int = 0,
                  a_max: float | None = None) -> InitTrainResult:
    """Regress (z_1, z_{H+1}) onto the expert action sequence, one plain
    gradient step per sampled trajectory window.

    iterations defaults to one epoch over the trajectories. a_max defaults
    to the largest action magnitude in the data.
    """
    long_enough = [t for t in data.trajectories if len(t) >= H]
    if not long_enough:
        raise ValueError(f"no trajectory long enough for horizon {H}")
    first = long_enough[0]
    if first.latents is None:
        raise ValueError("dataset has no latents; encode it first")
    d_z = first.latents.shape[1]
    d_a = first.actions.shape[1]
    if a_max is None:
        a_max = float(max(np.abs(t.actions).max() for t in long_enough))
    net = make_initnet(d_z, d_a, H, a_max, seed=seed)
    n = iterations if iterations is not None else len(long_enough)
    order = []
    epoch = 0
    while len(order) < n:
        order.extend(generator(seed, "order", epoch).permutation(len(long_enough)))
        epoch += 1
    result = InitTrainResult(net)
    for i in range(n):
        traj = long_enough[order[i]]
        rng = generator(seed, "window", i)
        off = int(rng.integers(len(traj) - H + 1))
        x = np.concatenate([traj.latents[off], traj.latents[off + H]])
        target = traj.actions[off:off + H].ravel()
        tape = dc.Tape()
        params = nets.lift_params(tape, net.weights)
        out = nets.mlp_forward_nodes(params, tape.leaf(x))
        pred = dc.mul(dc.tanh(out), tape.constant(a_max))
        loss = dc.sumsq(dc.sub(pred, tape.constant(target)))
        result.losses.append(float(loss.value))
        grads = dc.grad(loss, params)
        for j, g in enumerate(grads):
            net.weights[j] = dc.sgd_step(net.weights[j], g, lr)
    return result


def save_initnet(path, net: InitNet, meta: dict | None = None) -> None:
    os.makedirs(path, exist_ok=True)
    desc = {"kind": "initnet", "d_z": net.d_z, "d_a": net.d_a,
            "horizon": net.horizon, "a_max": net.a_max,
            "hidden": list(net.hidden), "meta": meta or {}}
    with open(os.path.join(path, "model.json"), "w") as fh:
        json.dump(desc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tensorio.save_tensors(os.path.join(path, "weights.bin"), net.weights)


def load_initnet(path) -> tuple[InitNet, dict]:
    with open(os.path.join(path, "model.json")) as fh:
        desc = json.load(fh)
    weights = tensorio.load_tensors(os.path.join(path, "weights.bin"))
    net = InitNet(weights, desc["d_z"], desc["d_a"], desc["horizon"],
                  desc["a_max"], tuple(desc["hidden"]))
    return net, desc.get("meta", {})

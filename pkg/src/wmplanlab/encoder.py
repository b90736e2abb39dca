"""Frozen observation embeddings.

The random-fourier kind lifts a low-dimensional observation into a fixed
nonlinear feature space, [sin(Wo + b); cos(Wo + b)] * sqrt(2 / d_f), and
stands in for a large pretrained visual encoder: frozen, redundant, and
nonlinear. The identity kind is kept for debugging and gradient tests.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from . import tensorio
from .data import Dataset, Trajectory
from .rng import generator

IDENTITY = "identity"
RANDOM_FOURIER = "random-fourier"


@dataclass(frozen=True)
class Encoder:
    kind: str
    d_o: int
    d_z: int
    W: np.ndarray | None = None  # (d_f, d_o), frozen
    b: np.ndarray | None = None  # (d_f,), frozen
    seed: int = 0


def make_identity(d_o: int) -> Encoder:
    return Encoder(IDENTITY, d_o, d_o)


def make_random_fourier(d_o: int, d_z: int = 64, sigma: float = 4.0,
                        seed: int = 0) -> Encoder:
    if d_z % 2 != 0:
        raise ValueError("random-fourier d_z must be even (sin and cos banks)")
    d_f = d_z // 2
    rng = generator(seed, "encoder")
    W = sigma * rng.standard_normal((d_f, d_o))
    b = rng.uniform(0.0, 2.0 * np.pi, size=d_f)
    W.flags.writeable = False
    b.flags.writeable = False
    return Encoder(RANDOM_FOURIER, d_o, d_z, W, b, seed)


def encode(enc: Encoder, o: np.ndarray) -> np.ndarray:
    """Embed one observation (d_o,) or a batch (N, d_o)."""
    o = np.asarray(o, dtype=np.float64)
    if o.shape[-1] != enc.d_o:
        raise ValueError(f"observation dim {o.shape[-1]} != encoder d_o {enc.d_o}")
    if enc.kind == IDENTITY:
        return o.copy()
    # broadcast-sum instead of BLAS matmul: encoding a row is then bitwise
    # identical whether it arrives alone or inside a batch
    phase = (o[..., None, :] * enc.W).sum(axis=-1) + enc.b
    scale = np.sqrt(2.0 / (enc.d_z // 2))
    return scale * np.concatenate([np.sin(phase), np.cos(phase)], axis=-1)


def latent_distance(z1: np.ndarray, z2: np.ndarray) -> float:
    """Squared L2 distance between two latents."""
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise ValueError(f"latent shape mismatch {z1.shape} vs {z2.shape}")
    d = z1 - z2
    return float(d @ d)


def encode_dataset(enc: Encoder, data: Dataset) -> Dataset:
    """Return a copy of the dataset with latent sequences filled in."""
    trajs = [Trajectory(actions=t.actions, obs=t.obs, latents=encode(enc, t.obs))
             for t in data.trajectories]
    return Dataset(trajs, provenance=data.provenance)


def encoder_hash(enc: Encoder) -> str:
    h = hashlib.sha256()
    h.update(f"{enc.kind}|{enc.d_o}|{enc.d_z}|{enc.seed}".encode())
    if enc.W is not None:
        h.update(tensorio.tensor_bytes(enc.W))
        h.update(tensorio.tensor_bytes(enc.b))
    return h.hexdigest()


def save_encoder(path, enc: Encoder) -> None:
    os.makedirs(path, exist_ok=True)
    desc = {"kind": enc.kind, "d_o": enc.d_o, "d_z": enc.d_z, "seed": enc.seed}
    with open(os.path.join(path, "encoder.json"), "w") as fh:
        json.dump(desc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if enc.W is not None:
        tensorio.save_tensors(os.path.join(path, "encoder.bin"), [enc.W, enc.b])


def load_encoder(path) -> Encoder:
    with open(os.path.join(path, "encoder.json")) as fh:
        desc = json.load(fh)
    W = b = None
    bin_path = os.path.join(path, "encoder.bin")
    if os.path.exists(bin_path):
        W, b = tensorio.load_tensors(bin_path, count=2)
        W.flags.writeable = False
        b.flags.writeable = False
    return Encoder(desc["kind"], desc["d_o"], desc["d_z"], W, b, desc["seed"])

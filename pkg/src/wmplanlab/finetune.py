"""Robustness finetuning for latent world models.

Online world modeling replans over expert start/goal pairs, executes the
planned actions in the simulator, and finetunes on the corrected
trajectories, expanding coverage to the states planning actually visits.
Adversarial world modeling perturbs latent states and actions inside an
l-infinity ball in the direction that maximizes one-step prediction error
(signed-gradient attacks), keeping the prediction targets clean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import diffcore as dc
from . import envs, nets
from .data import Dataset, Trajectory, flatten_transitions
from .diffcore import AdamState, NumericFailure
from .encoder import Encoder, encode
from .planners import PlanConfig, gbp
from .rng import derive_seed, generator
from .worldmodel import (TrainResult, WorldModel, iter_trajectory_batches,
                         supervised_step)


@dataclass
class PerturbationConfig:
    """Attack geometry: scaling factors turn batch statistics into radii,
    step sizes default to 1.25x the radius."""

    lambda_a: float = 0.5
    lambda_z: float = 0.2
    eps_a: float | None = None
    eps_z: float | None = None
    alpha_a: float | None = None
    alpha_z: float | None = None
    attack: str = "fgsm"  # "fgsm" | "pgd"
    pgd_steps: int = 1
    radius_mode: str = "fixed"  # "fixed" | "adaptive"
    per_dimension_std: bool = False

    def __post_init__(self):
        if self.lambda_a < 0 or self.lambda_z < 0:
            raise ValueError("scaling factors must be >= 0")
        if self.attack not in ("fgsm", "pgd"):
            raise ValueError(f"unknown attack {self.attack!r}")
        if self.radius_mode not in ("fixed", "adaptive"):
            raise ValueError(f"unknown radius mode {self.radius_mode!r}")
        if self.lambda_a > 1.0 or self.lambda_z > 0.5:
            warnings.warn("scaling factors outside the stable ranges "
                          "(lambda_a <= 1, lambda_z <= 0.5)", stacklevel=2)


def _traj_std(arr: np.ndarray, per_dimension: bool) -> float:
    if per_dimension:
        return float(np.mean(np.std(arr, axis=0)))
    return float(np.std(arr))


def compute_radii(batch: list[Trajectory], lambda_a: float, lambda_z: float,
                  per_dimension: bool = False) -> tuple[float, float]:
    """Radii = scaling factor times the mean over trajectories of the
    standard deviation of each trajectory's action / latent sequence."""
    if not batch:
        raise ValueError("empty minibatch")
    a_stds = [_traj_std(t.actions, per_dimension) for t in batch]
    z_stds = [_traj_std(t.latents, per_dimension) for t in batch]
    eps_a = lambda_a * float(np.mean(a_stds))
    eps_z = lambda_z * float(np.mean(z_stds))
    if eps_a == 0.0 and lambda_a > 0:
        warnings.warn("zero-variance actions: eps_a = 0, attack is a no-op",
                      stacklevel=2)
    if eps_z == 0.0 and lambda_z > 0:
        warnings.warn("zero-variance latents: eps_z = 0, attack is a no-op",
                      stacklevel=2)
    return eps_a, eps_z


def _attack_deltas(f: WorldModel, Z: np.ndarray, A: np.ndarray, ZN: np.ndarray,
                   pcfg: PerturbationConfig,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Signed-gradient ascent on the one-step prediction loss; rows are
    independent transitions, so the batched attack equals the per-transition
    attack. Clipping keeps every entry inside its radius exactly."""
    eps_a, eps_z = pcfg.eps_a, pcfg.eps_z
    if eps_a is None or eps_z is None:
        raise ValueError("perturbation radii unset; compute_radii first")
    alpha_a = 1.25 * eps_a if pcfg.alpha_a is None else pcfg.alpha_a
    alpha_z = 1.25 * eps_z if pcfg.alpha_z is None else pcfg.alpha_z
    if pcfg.attack == "fgsm":
        steps = 1
        da = rng.uniform(-eps_a, eps_a, size=A.shape)
        dz = rng.uniform(-eps_z, eps_z, size=Z.shape)
    else:
        steps = pcfg.pgd_steps
        da = np.zeros_like(A)
        dz = np.zeros_like(Z)
    for _ in range(steps):
        tape = dc.Tape()
        params = nets.lift_params(tape, f.weights)
        da_node = tape.leaf(da)
        dz_node = tape.leaf(dz)
        zp = dc.add(tape.constant(Z), dz_node)
        ap = dc.add(tape.constant(A), da_node)
        pred = f.forward_nodes(params, zp, ap)
        loss = dc.sumsq(dc.sub(pred, tape.constant(ZN)))
        ga, gz = dc.grad(loss, [da_node, dz_node])
        da = np.clip(da + alpha_a * np.sign(ga), -eps_a, eps_a)
        dz = np.clip(dz + alpha_z * np.sign(gz), -eps_z, eps_z)
    return da, dz


def attack_perturb(f: WorldModel, z: np.ndarray, a: np.ndarray,
                   z_next: np.ndarray, pcfg: PerturbationConfig,
                   seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Adversarial perturbations (delta_a, delta_z) for a single transition."""
    rng = generator(seed, "attack-init")
    da, dz = _attack_deltas(
        f, np.asarray(z, dtype=np.float64)[None, :],
        np.asarray(a, dtype=np.float64)[None, :],
        np.asarray(z_next, dtype=np.float64)[None, :], pcfg, rng)
    return da[0], dz[0]


def adversarial_wm(f: WorldModel, data: Dataset, pcfg: PerturbationConfig,
                   epochs: int = 1, batch_size: int = 48, lr: float = 1e-4,
                   seed: int = 0, keep_perturbed: bool = False) -> TrainResult:
    """Finetune on perturbed-input / clean-target transition batches.

    Minibatches are whole trajectories (radii statistics are per
    trajectory); attacks are regenerated fresh every time a batch is
    visited. With both scaling factors zero this reduces exactly to
    trajectory-unit teacher forcing on the same batch schedule.
    keep_perturbed stores the final epoch's perturbed pairs as two-state
    trajectories so they can be written in the dataset format.
    """
    if not data.trajectories:
        raise ValueError("empty dataset")
    model = f.clone()
    opt = [AdamState.zeros(w.shape) for w in model.weights]
    result = TrainResult(model)
    fixed_radii: tuple[float, float] | None = None
    step_count = 0
    current_epoch, ep = 0, []
    if keep_perturbed:
        result.perturbed = Dataset([], provenance="adversarial")
    for epoch, idx in iter_trajectory_batches(len(data.trajectories),
                                              batch_size, epochs, seed):
        if epoch != current_epoch:
            result.epoch_losses.append(float(np.mean(ep)))
            current_epoch, ep = epoch, []
        batch = [data.trajectories[i] for i in idx]
        if pcfg.eps_a is not None and pcfg.eps_z is not None:
            eps_a, eps_z = pcfg.eps_a, pcfg.eps_z  # explicit radii win
        elif pcfg.radius_mode == "fixed":
            if fixed_radii is None:
                fixed_radii = compute_radii(batch, pcfg.lambda_a, pcfg.lambda_z,
                                            pcfg.per_dimension_std)
            eps_a, eps_z = fixed_radii
        else:
            eps_a, eps_z = compute_radii(batch, pcfg.lambda_a, pcfg.lambda_z,
                                         pcfg.per_dimension_std)
        Z, A, ZN = flatten_transitions(Dataset(batch))
        if eps_a == 0.0 and eps_z == 0.0:
            Zp, Ap = Z, A
        else:
            work = replace(pcfg, eps_a=eps_a, eps_z=eps_z)
            da, dz = _attack_deltas(model, Z, A, ZN, work,
                                    generator(seed, "attack", step_count))
            Zp, Ap = Z + dz, A + da
        if keep_perturbed and epoch == epochs - 1:
            for zp, ap, zn in zip(Zp, Ap, ZN):
                result.perturbed.trajectories.append(
                    Trajectory(actions=ap[None, :], latents=np.stack([zp, zn])))
        loss = supervised_step(model, opt, Zp, Ap, ZN, lr)
        if not np.isfinite(loss):
            raise NumericFailure("adversarial finetuning loss diverged",
                                 trace=result.batch_losses)
        result.batch_losses.append(loss)
        ep.append(loss)
        step_count += 1
    if ep:
        result.epoch_losses.append(float(np.mean(ep)))
    return result


@dataclass
class OnlineConfig:
    iterations: int = 40  # planner rollouts to correct
    plan_iterations: int = 100
    horizon: int = 25
    mix_ratio: float = 0.5  # fraction of each batch from the original data;
    # 0 trains on corrected trajectories only
    lr: float = 1e-4
    finetune_steps: int = 50
    batch_size: int = 64
    plan_optimizer: str = "adam"
    plan_eta: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.mix_ratio <= 1.0:
            raise ValueError("mix_ratio must lie in [0, 1]")


@dataclass
class OnlineResult:
    model: WorldModel
    corrected: Dataset
    batch_losses: list[float] = field(default_factory=list)


def online_wm(f: WorldModel, spec: envs.EnvSpec, enc: Encoder, data: Dataset,
              cfg: OnlineConfig, seed: int = 0) -> OnlineResult:
    """Plan over expert start/goal pairs, execute in the simulator, and
    finetune on the corrected trajectories (mixed with expert replay)."""
    if not data.trajectories:
        raise ValueError("empty dataset")
    model = f.clone()
    opt = [AdamState.zeros(w.shape) for w in model.weights]
    corrected = Dataset([], provenance="corrected")
    result = OnlineResult(model, corrected)
    Z0, A0, ZN0 = flatten_transitions(data)
    corr_z: list[np.ndarray] = []
    corr_a: list[np.ndarray] = []
    corr_zn: list[np.ndarray] = []
    H = cfg.horizon
    for i in range(cfg.iterations):
        rng = generator(seed, "online", i)
        traj = data.trajectories[int(rng.integers(len(data.trajectories)))]
        if len(traj) < H:
            warnings.warn(f"trajectory shorter than horizon {H}; skipped",
                          stacklevel=2)
            continue
        off = int(rng.integers(len(traj) - H + 1))
        z1 = traj.latents[off]
        z_goal = traj.latents[off + H]
        plan_cfg = PlanConfig(horizon=H, iterations=cfg.plan_iterations,
                              optimizer=cfg.plan_optimizer, eta=cfg.plan_eta,
                              a_max=spec.a_max,
                              seed=derive_seed(seed, "online-plan", i))
        pr = gbp(model, z1, z_goal, plan_cfg)
        s1 = envs.state_of_obs(spec, traj.obs[off])
        states = envs.rollout_env(spec, s1, pr.actions)
        obs_seq = np.array([traj.obs[off]] + [envs.obs_of(spec, s) for s in states])
        latents = encode(enc, obs_seq)
        corrected.trajectories.append(
            Trajectory(actions=pr.actions, obs=obs_seq, latents=latents))
        corr_z.append(latents[:-1])
        corr_a.append(pr.actions)
        corr_zn.append(latents[1:])
        Zc = np.concatenate(corr_z)
        Ac = np.concatenate(corr_a)
        ZNc = np.concatenate(corr_zn)
        for k in range(cfg.finetune_steps):
            brng = generator(seed, "online-batch", i, k)
            n_orig = int(round(cfg.mix_ratio * cfg.batch_size))
            n_corr = cfg.batch_size - n_orig
            parts_z, parts_a, parts_zn = [], [], []
            if n_orig > 0:
                io = brng.integers(len(Z0), size=n_orig)
                parts_z.append(Z0[io]); parts_a.append(A0[io]); parts_zn.append(ZN0[io])
            if n_corr > 0:
                ic = brng.integers(len(Zc), size=n_corr)
                parts_z.append(Zc[ic]); parts_a.append(Ac[ic]); parts_zn.append(ZNc[ic])
            loss = supervised_step(model, opt, np.concatenate(parts_z),
                                   np.concatenate(parts_a),
                                   np.concatenate(parts_zn), lr=cfg.lr)
            if not np.isfinite(loss):
                raise NumericFailure("online finetuning loss diverged",
                                     trace=result.batch_losses)
            result.batch_losses.append(loss)
    return result

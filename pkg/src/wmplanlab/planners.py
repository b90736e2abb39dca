"""Test-time planners over a learned latent model.

Gradient-based planning backpropagates the goal loss through a recursive
model rollout and updates the action sequence with SGD or Adam. The
sampling planners (CEM, MPPI, GradCEM) evaluate candidate sequences one at
a time through the same rollout path, so wall-clock comparisons between
the two families reflect their model-evaluation counts. The MPC harness
replans from re-encoded simulator states and executes the first K actions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import diffcore as dc
from . import envs, nets
from .diffcore import AdamState, NumericFailure
from .encoder import Encoder, encode
from .rng import derive_seed, generator
from .worldmodel import WorldModel, rollout_model, rollout_nodes


@dataclass
class GoalLossSpec:
    """Final-state distance, or a weight-normalized mean over all predicted
    states (weights stored unnormalized; they are divided by their sum)."""

    mode: str = "final"  # "final" | "weighted"
    weights: np.ndarray | None = None


def wgl_late_heavy(H: int) -> GoalLossSpec:
    """Exponentially upweight later states: w_i = 2^i for i = 2..H+1."""
    return GoalLossSpec("weighted", np.exp2(np.arange(2, H + 2, dtype=np.float64)))


def wgl_early_heavy(H: int) -> GoalLossSpec:
    """Exponentially upweight earlier states: w_i = (1/2)^i."""
    return GoalLossSpec("weighted", 0.5 ** np.arange(2, H + 2, dtype=np.float64))


def goal_loss(spec: GoalLossSpec, zs: list[dc.Node], z_goal: np.ndarray) -> dc.Node:
    """Scalar loss node over predicted latents z_2 .. z_{H+1}."""
    if not zs:
        raise ValueError("need at least one predicted latent")
    tape = zs[0].tape
    zg = tape.constant(z_goal)
    if spec.mode == "final":
        return dc.sumsq(dc.sub(zs[-1], zg))
    if spec.mode != "weighted":
        raise ValueError(f"unknown goal loss mode {spec.mode!r}")
    H = len(zs)
    w = np.asarray(spec.weights, dtype=np.float64)
    if w.shape != (H,):
        raise ValueError(f"weight list length {w.shape} != horizon {H}")
    if np.any(w <= 0):
        raise ValueError("goal loss weights must be strictly positive")
    wn = w / w.sum()
    total = None
    for wi, z in zip(wn, zs):
        term = dc.mul(dc.sumsq(dc.sub(z, zg)), tape.constant(wi))
        total = term if total is None else dc.add(total, term)
    return dc.mul(total, tape.constant(1.0 / H))


@dataclass
class PlanConfig:
    horizon: int = 25
    iterations: int = 300
    optimizer: str = "sgd"  # "sgd" | "adam"
    eta: float = 1.0
    loss: GoalLossSpec = field(default_factory=GoalLossSpec)
    init: str = "gaussian"  # "gaussian" | "initnet" | "fixed"
    init_actions: object = None  # ndarray for "fixed", callable(z1, z_goal) for "initnet"
    clamp_actions: bool = True
    a_max: float | None = None
    return_best: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1 or self.iterations < 1:
            raise ValueError("horizon and iterations must be >= 1")
        if self.eta <= 0:
            raise ValueError("step size must be positive")


@dataclass
class PlanResult:
    actions: np.ndarray
    loss_trace: list[float]
    wall_clock: float
    iterations: int
    final_loss: float
    aborted: bool = False


def _initial_actions(cfg: PlanConfig, f: WorldModel, z1, z_goal) -> np.ndarray:
    if cfg.init == "gaussian":
        return generator(cfg.seed, "gbp-init").standard_normal((cfg.horizon, f.d_a))
    if cfg.init == "initnet":
        return np.asarray(cfg.init_actions(z1, z_goal), dtype=np.float64)
    if cfg.init == "fixed":
        arr = np.asarray(cfg.init_actions, dtype=np.float64)
        if arr.shape != (cfg.horizon, f.d_a):
            raise ValueError(f"fixed init shape {arr.shape} != ({cfg.horizon}, {f.d_a})")
        return arr.copy()
    raise ValueError(f"unknown init {cfg.init!r}")


def gbp(f: WorldModel, z1: np.ndarray, z_goal: np.ndarray,
        cfg: PlanConfig) -> PlanResult:
    """Iterate rollout -> goal loss -> gradient step on the action sequence.

    Returns the best-loss iterate (switchable to the last via return_best).
    Actions are clamped to [-a_max, a_max] after every update when
    clamp_actions is set and a_max is known.
    """
    t0 = time.perf_counter()
    H = cfg.horizon
    actions = _initial_actions(cfg, f, z1, z_goal)
    clamp = cfg.clamp_actions and cfg.a_max is not None
    if clamp:
        actions = np.clip(actions, -cfg.a_max, cfg.a_max)
    opt = AdamState.zeros((H, f.d_a)) if cfg.optimizer == "adam" else None
    trace: list[float] = []
    best_loss = np.inf
    best_actions = actions.copy()
    last_actions = actions.copy()
    aborted = False
    for _ in range(cfg.iterations):
        if not np.all(np.isfinite(actions)):
            aborted = True
            break
        tape = dc.Tape()
        params = nets.lift_params(tape, f.weights)
        a_nodes = [tape.leaf(actions[t]) for t in range(H)]
        try:
            zs = rollout_nodes(f, params, tape.constant(z1), a_nodes)
            loss_node = goal_loss(cfg.loss, zs, z_goal)
            loss = float(loss_node.value)
            trace.append(loss)
            if not np.isfinite(loss):
                aborted = True
                break
            if loss < best_loss:
                best_loss = loss
                best_actions = actions.copy()
            grads = np.stack(dc.grad(loss_node, a_nodes))
        except NumericFailure:
            aborted = True
            break
        if cfg.optimizer == "sgd":
            actions = dc.sgd_step(actions, grads, cfg.eta)
        elif cfg.optimizer == "adam":
            actions, opt = dc.adam_step(actions, grads, opt, cfg.eta)
        else:
            raise ValueError(f"unknown optimizer {cfg.optimizer!r}")
        if clamp:
            actions = np.clip(actions, -cfg.a_max, cfg.a_max)
        last_actions = actions.copy()
    chosen = best_actions if cfg.return_best else last_actions
    final = best_loss if cfg.return_best else (trace[-1] if trace else np.inf)
    return PlanResult(chosen, trace, time.perf_counter() - t0, len(trace),
                      float(final), aborted)


def _final_cost(f: WorldModel, z1, actions: np.ndarray, z_goal) -> float:
    zs = rollout_model(f, z1, actions)
    d = zs[-1] - z_goal
    return float(d @ d)


@dataclass
class CemConfig:
    n_pop: int = 300
    k_elite: int = 30
    iterations: int = 30
    sigma0: float = 1.0
    cov_mode: str = "full"  # "full" (with jitter) | "diagonal"
    jitter: float = 1e-6

    def __post_init__(self):
        if not (1 <= self.k_elite <= self.n_pop):
            raise ValueError("need 1 <= k_elite <= n_pop")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class RefineConfig:
    """Per-candidate Adam refinement inside GradCEM."""

    steps: int = 2
    eta: float = 0.3


def _safe_cholesky(sigma: np.ndarray, jitter: float) -> np.ndarray | None:
    """Cholesky factor, escalating the jitter when the refit covariance is
    not positive definite. Returns None when every repair fails."""
    bump = 0.0
    for _ in range(6):
        try:
            return np.linalg.cholesky(sigma + bump * np.eye(len(sigma)))
        except np.linalg.LinAlgError:
            bump = jitter if bump == 0.0 else bump * 10.0
    return None


def _refine_candidate(f: WorldModel, z1, z_goal, actions: np.ndarray,
                      rcfg: RefineConfig) -> np.ndarray:
    opt = AdamState.zeros(actions.shape)
    for _ in range(rcfg.steps):
        tape = dc.Tape()
        params = nets.lift_params(tape, f.weights)
        a_nodes = [tape.leaf(a) for a in actions]
        zs = rollout_nodes(f, params, tape.constant(z1), a_nodes)
        loss = dc.sumsq(dc.sub(zs[-1], tape.constant(z_goal)))
        grads = np.stack(dc.grad(loss, a_nodes))
        actions, opt = dc.adam_step(actions, grads, opt, rcfg.eta)
    return actions


def _cem_engine(f: WorldModel, z1, z_goal, cfg: CemConfig, H: int, seed: int,
                refine: RefineConfig | None,
                trace_hook: Callable[[dict], None] | None) -> PlanResult:
    t0 = time.perf_counter()
    d = H * f.d_a
    mu = np.zeros(d)
    sigma = (cfg.sigma0 ** 2) * np.eye(d)
    rng = generator(seed, "cem")
    trace: list[float] = []
    for i in range(cfg.iterations):
        eps = rng.standard_normal((cfg.n_pop, d))
        if cfg.cov_mode == "diagonal":
            samples = mu + eps * np.sqrt(np.clip(np.diag(sigma), 0.0, None))
        else:
            chol = _safe_cholesky(sigma, cfg.jitter)
            if chol is None:
                samples = mu + eps * np.sqrt(np.clip(np.diag(sigma), 0.0, None))
            else:
                samples = mu + eps @ chol.T
        candidates = samples
        if refine is not None and refine.steps > 0:
            candidates = np.stack([
                _refine_candidate(f, z1, z_goal, c.reshape(H, f.d_a), refine).ravel()
                for c in samples])
        costs = np.array([_final_cost(f, z1, c.reshape(H, f.d_a), z_goal)
                          for c in candidates])
        elite_idx = np.argsort(costs, kind="stable")[: cfg.k_elite]
        elites = candidates[elite_idx]
        mu = elites.mean(axis=0)
        diffs = elites - mu
        if cfg.cov_mode == "full":
            sigma = diffs.T @ diffs / cfg.k_elite + cfg.jitter * np.eye(d)
        else:
            sigma = np.diag((diffs ** 2).mean(axis=0) + cfg.jitter)
        trace.append(float(costs[elite_idx[0]]))
        if trace_hook is not None:
            trace_hook({"iteration": i, "candidates": candidates, "costs": costs,
                        "elite_idx": elite_idx, "mu": mu.copy(),
                        "sigma": sigma.copy()})
    actions = mu.reshape(H, f.d_a)
    final = _final_cost(f, z1, actions, z_goal)
    return PlanResult(actions, trace, time.perf_counter() - t0, len(trace), final)


def cem(f: WorldModel, z1, z_goal, cfg: CemConfig, H: int, seed: int,
        trace_hook: Callable[[dict], None] | None = None) -> PlanResult:
    """Sample, rank by final-state cost, refit the Gaussian to the elites;
    the final mean is the plan."""
    return _cem_engine(f, z1, z_goal, cfg, H, seed, None, trace_hook)


def gradcem(f: WorldModel, z1, z_goal, cfg: CemConfig, refine: RefineConfig,
            H: int, seed: int,
            trace_hook: Callable[[dict], None] | None = None) -> PlanResult:
    """CEM whose sampled candidates get a few Adam steps on the final-state
    loss before cost evaluation and elite selection. With refine.steps == 0
    this is bit-for-bit plain CEM under the same seed."""
    return _cem_engine(f, z1, z_goal, cfg, H, seed, refine, trace_hook)


@dataclass
class MppiConfig:
    samples: int = 64
    sigma: float = 0.5
    temperature: float = 1.0
    iterations: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")


def mppi(f: WorldModel, z1, z_goal, cfg: MppiConfig, H: int, seed: int,
         nominal: np.ndarray | None = None) -> PlanResult:
    """Softmin-weighted perturbation averaging around a nominal sequence.

    Single-shot update by default (iterations=1); the execute-and-replan
    loop belongs to mpc().
    """
    t0 = time.perf_counter()
    rng = generator(seed, "mppi")
    nom = np.zeros((H, f.d_a)) if nominal is None else np.array(nominal, dtype=np.float64)
    trace: list[float] = []
    for _ in range(cfg.iterations):
        eps = cfg.sigma * rng.standard_normal((cfg.samples, H, f.d_a))
        costs = np.array([_final_cost(f, z1, nom + e, z_goal) for e in eps])
        shifted = costs - costs.min()
        w = np.exp(-shifted / cfg.temperature)
        w = w / w.sum()
        nom = nom + np.tensordot(w, eps, axes=1)
        trace.append(_final_cost(f, z1, nom, z_goal))
    return PlanResult(nom, trace, time.perf_counter() - t0, len(trace), trace[-1])


@dataclass
class PlannerSpec:
    """Planner selection plus the matching config, used by the MPC harness
    and the evaluation grids."""

    kind: str  # "gbp" | "cem" | "mppi" | "gradcem"
    horizon: int = 25
    plan: PlanConfig | None = None
    cem: CemConfig | None = None
    refine: RefineConfig | None = None
    mppi: MppiConfig | None = None


def run_planner(f: WorldModel, z1, z_goal, pspec: PlannerSpec,
                seed: int) -> PlanResult:
    H = pspec.horizon
    if pspec.kind == "gbp":
        cfg = replace(pspec.plan or PlanConfig(), horizon=H, seed=seed)
        return gbp(f, z1, z_goal, cfg)
    if pspec.kind == "cem":
        return cem(f, z1, z_goal, pspec.cem or CemConfig(), H, seed)
    if pspec.kind == "gradcem":
        return gradcem(f, z1, z_goal, pspec.cem or CemConfig(),
                       pspec.refine or RefineConfig(), H, seed)
    if pspec.kind == "mppi":
        return mppi(f, z1, z_goal, pspec.mppi or MppiConfig(), H, seed)
    raise ValueError(f"unknown planner kind {pspec.kind!r}")


@dataclass
class MpcConfig:
    steps: int = 10
    k_exec: int | None = None  # None executes the full horizon
    plan_iters: int | None = 100  # per-step gbp iterations override
    eta: float | None = None  # per-step gbp step size override
    warm_start: bool = False


@dataclass
class MpcResult:
    success: bool
    executed: np.ndarray
    plan_results: list[PlanResult]
    final_state: envs.EnvState


def mpc(spec: envs.EnvSpec, f: WorldModel, enc: Encoder,
        task: envs.TaskInstance, pspec: PlannerSpec, cfg: MpcConfig,
        seed: int = 0) -> MpcResult:
    """Plan, execute the first K actions in the simulator, re-encode, repeat.

    Success is credited at any visited state. The first MPC step uses the
    caller's seed unchanged, so (steps=1, k_exec=H) reproduces the open-loop
    planner exactly.
    """
    H = pspec.horizon
    k_exec = H if cfg.k_exec is None else cfg.k_exec
    if not (1 <= k_exec <= H):
        raise ValueError("need 1 <= k_exec <= horizon")
    pspec_step = pspec
    if pspec.kind == "gbp":
        plan_cfg = pspec.plan or PlanConfig()
        overrides = {}
        if cfg.plan_iters is not None:
            overrides["iterations"] = cfg.plan_iters
        if cfg.eta is not None:
            overrides["eta"] = cfg.eta
        if overrides:
            pspec_step = replace(pspec, plan=replace(plan_cfg, **overrides))
    z_goal = encode(enc, task.goal_obs)
    s = task.start
    ok = envs.success(spec, s, task)
    executed: list[np.ndarray] = []
    results: list[PlanResult] = []
    warm: np.ndarray | None = None
    for k in range(cfg.steps):
        if ok:
            break
        z1 = encode(enc, envs.obs_of(spec, s))
        step_seed = seed if k == 0 else derive_seed(seed, "mpc-step", k)
        ps = pspec_step
        if cfg.warm_start and warm is not None and ps.kind == "gbp":
            ps = replace(ps, plan=replace(ps.plan or PlanConfig(),
                                          init="fixed", init_actions=warm))
        pr = run_planner(f, z1, z_goal, ps, step_seed)
        results.append(pr)
        for a in pr.actions[:k_exec]:
            s = envs.step(spec, s, a)
            executed.append(np.asarray(a, dtype=np.float64))
            if envs.success(spec, s, task):
                ok = True
                break
        if cfg.warm_start:
            tail = pr.actions[k_exec:]
            warm = np.vstack([tail, np.zeros((H - len(tail), f.d_a))])
    return MpcResult(ok, np.array(executed).reshape(-1, f.d_a), results, s)

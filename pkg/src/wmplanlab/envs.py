"""Deterministic ground-truth dynamics for two 2D navigation environments.

Wall2D is position-controlled: two rooms in a unit box split by a vertical
wall with a door. PointMassMaze is a force-actuated, damped double
integrator in a 2x2 room grid with three doors. Both resolve collisions by
axis-separated clamp-and-slide against axis-aligned wall segments, so a
blocked axis is clamped at the wall face while the other axis still moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, Trajectory
from .rng import generator

WALL2D = "wall2d"
POINTMASS = "pointmass"

# one logical env step = `frameskip` integration substeps with the same action
CONTACT_EPS = 1e-9
SUCCESS_RADIUS_FRAC = 0.05
POINTMASS_ACCEL = 0.01  # force-to-velocity gain per substep


@dataclass(frozen=True)
class Wall:
    """Axis-aligned wall segment: the line axis==0 is vertical (x = coord,
    blocking x motion for y in [lo, hi]); axis==1 is horizontal."""

    axis: int
    coord: float
    lo: float
    hi: float


@dataclass(frozen=True)
class Door:
    axis: int
    coord: float
    lo: float
    hi: float

    @property
    def center(self) -> np.ndarray:
        mid = 0.5 * (self.lo + self.hi)
        return np.array([self.coord, mid]) if self.axis == 0 else np.array([mid, self.coord])


@dataclass(frozen=True)
class EnvSpec:
    kind: str
    size: float
    walls: tuple[Wall, ...]
    doors: tuple[Door, ...]
    a_max: float
    damping: float = 0.0
    frameskip: int = 5

    def __post_init__(self):
        if self.frameskip < 1:
            raise ValueError("frameskip must be >= 1")

    @property
    def obs_dim(self) -> int:
        return 2 if self.kind == WALL2D else 4

    @property
    def action_dim(self) -> int:
        return 2


@dataclass(eq=False)
class EnvState:
    position: np.ndarray
    velocity: np.ndarray

    def copy(self) -> "EnvState":
        return EnvState(self.position.copy(), self.velocity.copy())


@dataclass(eq=False)
class TaskInstance:
    start: EnvState
    goal_obs: np.ndarray
    goal_state: EnvState  # held out: consumed only by the success predicate
    horizon_gap: int


def wall2d_spec(frameskip: int = 5) -> EnvSpec:
    """Unit box, vertical wall at x=0.5 with a door over y in [0.4, 0.6]."""
    walls = (Wall(0, 0.5, 0.0, 0.4), Wall(0, 0.5, 0.6, 1.0))
    doors = (Door(0, 0.5, 0.4, 0.6),)
    return EnvSpec(WALL2D, 1.0, walls, doors, a_max=0.05, frameskip=frameskip)


def pointmass_spec(frameskip: int = 5) -> EnvSpec:
    """2x2 room grid with three doors; force-actuated with damping 0.1."""
    walls = (
        Wall(0, 0.5, 0.0, 0.15), Wall(0, 0.5, 0.35, 1.0),
        Wall(1, 0.5, 0.0, 0.15), Wall(1, 0.5, 0.35, 0.65), Wall(1, 0.5, 0.85, 1.0),
    )
    doors = (Door(0, 0.5, 0.15, 0.35), Door(1, 0.5, 0.15, 0.35),
             Door(1, 0.5, 0.65, 0.85))
    return EnvSpec(POINTMASS, 1.0, walls, doors, a_max=1.0, damping=0.1,
                   frameskip=frameskip)


def spec_to_dict(spec: EnvSpec) -> dict:
    return {
        "kind": spec.kind,
        "size": spec.size,
        "walls": [[w.axis, w.coord, w.lo, w.hi] for w in spec.walls],
        "doors": [[d.axis, d.coord, d.lo, d.hi] for d in spec.doors],
        "a_max": spec.a_max,
        "damping": spec.damping,
        "frameskip": spec.frameskip,
    }


def spec_from_dict(d: dict) -> EnvSpec:
    return EnvSpec(
        kind=d["kind"], size=d["size"],
        walls=tuple(Wall(int(w[0]), w[1], w[2], w[3]) for w in d["walls"]),
        doors=tuple(Door(int(x[0]), x[1], x[2], x[3]) for x in d["doors"]),
        a_max=d["a_max"], damping=d["damping"], frameskip=int(d["frameskip"]),
    )


def _move(spec: EnvSpec, pos: np.ndarray, delta: np.ndarray):
    """Axis-separated slide: apply the x move, then the y move at the new x.

    Returns the new position and a per-axis blocked mask. A move that would
    cross a solid wall span is clamped at the face minus a contact epsilon;
    box faces clamp exactly.
    """
    x, y = float(pos[0]), float(pos[1])
    blocked = [False, False]

    nx = x + float(delta[0])
    for w in spec.walls:
        if w.axis == 0 and w.lo <= y <= w.hi:
            if x < w.coord <= nx:
                nx, blocked[0] = w.coord - CONTACT_EPS, True
            elif x > w.coord >= nx:
                nx, blocked[0] = w.coord + CONTACT_EPS, True
    if nx < 0.0:
        nx, blocked[0] = 0.0, True
    elif nx > spec.size:
        nx, blocked[0] = spec.size, True

    ny = y + float(delta[1])
    for w in spec.walls:
        if w.axis == 1 and w.lo <= nx <= w.hi:
            if y < w.coord <= ny:
                ny, blocked[1] = w.coord - CONTACT_EPS, True
            elif y > w.coord >= ny:
                ny, blocked[1] = w.coord + CONTACT_EPS, True
    if ny < 0.0:
        ny, blocked[1] = 0.0, True
    elif ny > spec.size:
        ny, blocked[1] = spec.size, True

    return np.array([nx, ny]), blocked


def step(spec: EnvSpec, s: EnvState, a) -> EnvState:
    """One logical env step: clamp the action, run frameskip substeps."""
    a = np.clip(np.asarray(a, dtype=np.float64), -spec.a_max, spec.a_max)
    pos = s.position
    vel = s.velocity
    for _ in range(spec.frameskip):
        if spec.kind == WALL2D:
            pos, _ = _move(spec, pos, a)
        else:
            vel = (1.0 - spec.damping) * vel + POINTMASS_ACCEL * a
            pos, blocked = _move(spec, pos, vel)
            if blocked[0]:
                vel = np.array([0.0, vel[1]])
            if blocked[1]:
                vel = np.array([vel[0], 0.0])
    if spec.kind == WALL2D:
        vel = np.zeros(2)
    return EnvState(pos, vel)


def rollout_env(spec: EnvSpec, s1: EnvState, actions) -> list[EnvState]:
    """States s_2 .. s_{H+1} from folding `step` over the action sequence."""
    actions = np.asarray(actions, dtype=np.float64)
    if len(actions) < 1:
        raise ValueError("need at least one action")
    out = []
    s = s1
    for a in actions:
        s = step(spec, s, a)
        out.append(s)
    return out


def obs_of(spec: EnvSpec, s: EnvState) -> np.ndarray:
    if spec.kind == WALL2D:
        return s.position.copy()
    return np.concatenate([s.position, s.velocity])


def state_of_obs(spec: EnvSpec, o: np.ndarray) -> EnvState:
    o = np.asarray(o, dtype=np.float64)
    if spec.kind == WALL2D:
        return EnvState(o[:2].copy(), np.zeros(2))
    return EnvState(o[:2].copy(), o[2:4].copy())


def success_radius(spec: EnvSpec) -> float:
    return SUCCESS_RADIUS_FRAC * spec.size


def success(spec: EnvSpec, s: EnvState, task: TaskInstance) -> bool:
    """Closed-ball goal test on position only (compared in squared form so
    the boundary case is exact)."""
    d = s.position - task.goal_state.position
    r = success_radius(spec)
    return float(d @ d) <= r * r


def _sample_start(spec: EnvSpec, rng: np.random.Generator) -> EnvState:
    margin = 0.02 * spec.size
    while True:
        pos = rng.uniform(margin, spec.size - margin, size=2)
        near_wall = any(
            abs(pos[w.axis] - w.coord) < margin and w.lo <= pos[1 - w.axis] <= w.hi
            for w in spec.walls)
        if not near_wall:
            return EnvState(pos, np.zeros(2))


def _same_side(door: Door, p: np.ndarray, q: np.ndarray) -> bool:
    return (p[door.axis] - door.coord) * (q[door.axis] - door.coord) > 0


def _goal_seek_action(spec: EnvSpec, s: EnvState, waypoint: np.ndarray,
                      rng: np.random.Generator) -> np.ndarray:
    """Steer toward the waypoint, routing via the door when a wall blocks
    the straight line; uniform action noise on top."""
    pos = s.position
    target = waypoint
    if spec.kind == WALL2D:
        door = spec.doors[0]
        gap_lo, gap_hi = door.lo + 0.02, door.hi - 0.02
        if not _same_side(door, pos, waypoint) and not (gap_lo <= pos[1] <= gap_hi):
            target = door.center
        gain = 1.0 / spec.frameskip
        drive = gain * (target - pos)
    else:
        drive = 4.0 * (target - pos) - 8.0 * s.velocity
    noise = rng.uniform(-0.5 * spec.a_max, 0.5 * spec.a_max, size=2)
    return np.clip(drive + noise, -spec.a_max, spec.a_max)


def generate_dataset(spec: EnvSpec, n_traj: int, traj_len: int, policy: str,
                     seed: int) -> Dataset:
    """Roll `n_traj` trajectories of `traj_len` observations under `policy`.

    policy "random" draws uniform actions; "goal-seeking-noisy" steers
    toward resampled waypoints with additive noise (and, in Wall2D, routes
    through the door), which yields wall-crossing demonstrations.
    """
    if n_traj < 1 or traj_len < 2:
        raise ValueError("need n_traj >= 1 and traj_len >= 2")
    if policy not in ("random", "goal-seeking-noisy"):
        raise ValueError(f"unknown policy {policy!r}")
    trajs = []
    for i in range(n_traj):
        rng = generator(seed, "traj", i)
        s = _sample_start(spec, rng)
        obs = [obs_of(spec, s)]
        actions = []
        waypoint = rng.uniform(0.0, spec.size, size=2)
        for t in range(traj_len - 1):
            if policy == "random":
                a = rng.uniform(-spec.a_max, spec.a_max, size=2)
            else:
                if t > 0 and (t % 12 == 0 or
                              np.linalg.norm(s.position - waypoint) < 0.05 * spec.size):
                    waypoint = rng.uniform(0.0, spec.size, size=2)
                a = _goal_seek_action(spec, s, waypoint, rng)
            actions.append(a)
            s = step(spec, s, a)
            obs.append(obs_of(spec, s))
        trajs.append(Trajectory(actions=np.array(actions), obs=np.array(obs)))
    return Dataset(trajs, provenance="expert")


def sample_task(spec: EnvSpec, data: Dataset, horizon_gap: int, seed: int) -> TaskInstance:
    """Draw start and goal from one stored trajectory, horizon_gap steps apart."""
    eligible = [i for i, t in enumerate(data.trajectories) if len(t) >= horizon_gap]
    if not eligible:
        raise ValueError(f"dataset has no trajectory covering a {horizon_gap}-step gap")
    rng = generator(seed, "task")
    ti = eligible[int(rng.integers(len(eligible)))]
    traj = data.trajectories[ti]
    if traj.obs is None:
        raise ValueError("task sampling needs observation trajectories")
    off = int(rng.integers(len(traj) - horizon_gap + 1))
    start = state_of_obs(spec, traj.obs[off])
    goal_obs = traj.obs[off + horizon_gap].copy()
    return TaskInstance(start=start, goal_obs=goal_obs,
                        goal_state=state_of_obs(spec, goal_obs),
                        horizon_gap=horizon_gap)

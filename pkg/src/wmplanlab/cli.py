"""Command-line entry point for reproducible experiment pipelines.

Commands: gen-data, train, finetune-online, finetune-adv, train-initnet,
eval, gap, landscape. Every command is a pure function of (config file,
CLI overrides, seed): reports and checkpoints rerun byte-identically.
Exit codes: 0 success, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import envs, evalreport, finetune, initnet, presets, worldmodel
from .data import load_dataset, save_dataset
from .diffcore import NumericFailure
from .encoder import (Encoder, encode_dataset, encoder_hash, make_identity,
                      make_random_fourier)
from .planners import (CemConfig, GoalLossSpec, MpcConfig, MppiConfig,
                       PlanConfig, PlannerSpec, RefineConfig, wgl_early_heavy,
                       wgl_late_heavy)
from .rng import derive_seed

SEED_ENV_VAR = "WMPLANLAB_SEED"


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# config schema: every known key with a coarse type; unknown keys rejected

_ANY_KEY = "__any__"

_PLANNER_KEYS = {
    "kind": str, "horizon": int, "iterations": int, "optimizer": str,
    "eta": float, "loss": str, "init": str, "clamp": bool,
    "return_best": bool, "initnet_path": str,
    "n_pop": int, "k_elite": int, "sigma0": float, "cov_mode": str,
    "jitter": float, "refine_steps": int, "refine_eta": float,
    "samples": int, "sigma": float, "temperature": float,
}

_SCHEMA = {
    "seed": int,
    "out_dir": str,
    "env": {"kind": str, "frameskip": int},
    "encoder": {"kind": str, "d_z": int, "sigma": float, "seed": int},
    "dataset": {"path": str, "n_traj": int, "traj_len": int, "policy": str},
    "model": {"path": str, "hidden": list, "residual": bool,
              "train": {"epochs": int, "batch_size": int, "lr": float}},
    "finetune": {
        "adversarial": {"out_path": str, "lambda_a": float, "lambda_z": float,
                        "eps_a": float, "eps_z": float, "alpha_a": float,
                        "alpha_z": float, "attack": str, "pgd_steps": int,
                        "radius_mode": str, "per_dimension_std": bool,
                        "epochs": int, "batch_size": int, "lr": float,
                        "dump_perturbed": bool, "perturbed_path": str},
        "online": {"out_path": str, "corrected_path": str, "iterations": int,
                   "plan_iterations": int, "horizon": int, "mix_ratio": float,
                   "lr": float, "finetune_steps": int, "batch_size": int,
                   "plan_optimizer": str, "plan_eta": float},
    },
    "initnet": {"path": str, "horizon": int, "lr": float, "iterations": int},
    "planners": {_ANY_KEY: _PLANNER_KEYS},
    "eval": {"out_path": str, "n_tasks": int, "mode": str, "horizon_gap": int,
             "models": {_ANY_KEY: str}, "planners": list,
             "mpc": {"steps": int, "k_exec": int, "plan_iters": int,
                     "eta": float, "warm_start": bool},
             "require_cross_room": bool},
    "gap": {"out_path": str, "n": int, "horizon": int,
            "models": {_ANY_KEY: str},
            "plan": {"iterations": int, "optimizer": str, "eta": float}},
    "landscape": {"out_path": str, "baseline": str, "adversarial": str,
                  "n_tasks": int, "resolution": int, "c_min": float,
                  "c_max": float, "horizon": int,
                  "plan": {"iterations": int, "optimizer": str, "eta": float}},
}


def _check_type(value, expect, path: str) -> None:
    if value is None:
        return
    if expect is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected number, got {value!r}")
    elif expect is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
    elif not isinstance(value, expect):
        raise ConfigError(f"{path}: expected {expect.__name__}, got {value!r}")


def validate_config(cfg: dict, schema: dict | None = None, path: str = "") -> None:
    """Reject unknown keys and badly typed values, naming the field path."""
    schema = _SCHEMA if schema is None else schema
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    for key, value in cfg.items():
        sub = schema.get(key, schema.get(_ANY_KEY))
        here = f"{path}.{key}" if path else key
        if sub is None:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(sub, dict):
            validate_config(value, sub, here)
        else:
            _check_type(value, sub, here)


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _set_override(cfg: dict, spec: str) -> None:
    if "=" not in spec:
        raise ConfigError(f"--set expects key=value, got {spec!r}")
    key, raw = spec.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {key!r} crosses a non-object")
    node[parts[-1]] = value


def load_config(args) -> dict:
    if args.preset:
        try:
            cfg = presets.get_preset(args.preset)
        except KeyError as err:
            raise ConfigError(str(err)) from err
    elif args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        with open(args.config) as fh:
            cfg = json.load(fh)
    else:
        raise ConfigError("provide --config FILE or --preset NAME")
    for spec in args.set or []:
        _set_override(cfg, spec)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError as err:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from err
    validate_config(cfg)
    if "seed" not in cfg:
        raise ConfigError("config must set an explicit seed")
    return cfg


# --------------------------------------------------------------------------
# builders


def _need(cfg: dict, *path: str):
    node = cfg
    for part in path:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"missing config section: {'.'.join(path)}")
        node = node[part]
    return node


def build_env(cfg: dict) -> envs.EnvSpec:
    section = _need(cfg, "env")
    kind = section.get("kind", "wall2d")
    frameskip = section.get("frameskip", 5)
    if kind == "wall2d":
        return envs.wall2d_spec(frameskip=frameskip)
    if kind == "pointmass":
        return envs.pointmass_spec(frameskip=frameskip)
    raise ConfigError(f"env.kind: unknown environment {kind!r}")


def build_encoder(cfg: dict, spec: envs.EnvSpec) -> Encoder:
    section = _need(cfg, "encoder")
    kind = section.get("kind", "random-fourier")
    if kind == "identity":
        return make_identity(spec.obs_dim)
    if kind == "random-fourier":
        return make_random_fourier(spec.obs_dim, d_z=section.get("d_z", 64),
                                   sigma=section.get("sigma", 4.0),
                                   seed=section.get("seed", 0))
    raise ConfigError(f"encoder.kind: unknown encoder {kind!r}")


def _build_goal_loss(name: str, horizon: int) -> GoalLossSpec:
    if name == "final":
        return GoalLossSpec()
    if name == "late-heavy":
        return wgl_late_heavy(horizon)
    if name == "early-heavy":
        return wgl_early_heavy(horizon)
    raise ConfigError(f"unknown goal loss {name!r}")


def build_planner(name: str, section: dict, spec: envs.EnvSpec) -> PlannerSpec:
    kind = section.get("kind")
    horizon = section.get("horizon", 25)
    if kind == "gbp":
        init = section.get("init", "gaussian")
        init_actions = None
        if init == "initnet":
            path = section.get("initnet_path")
            if not path or not os.path.exists(path):
                raise ConfigError(f"planners.{name}.initnet_path missing")
            net, _ = initnet.load_initnet(path)
            init_actions = initnet.as_planner_init(net)
        plan = PlanConfig(
            horizon=horizon, iterations=section.get("iterations", 300),
            optimizer=section.get("optimizer", "sgd"),
            eta=section.get("eta", 1.0),
            loss=_build_goal_loss(section.get("loss", "final"), horizon),
            init=init, init_actions=init_actions,
            clamp_actions=section.get("clamp", True), a_max=spec.a_max,
            return_best=section.get("return_best", True))
        return PlannerSpec("gbp", horizon, plan=plan)
    if kind in ("cem", "gradcem"):
        cem_cfg = CemConfig(
            n_pop=section.get("n_pop", 300), k_elite=section.get("k_elite", 30),
            iterations=section.get("iterations", 30),
            sigma0=section.get("sigma0", 1.0),
            cov_mode=section.get("cov_mode", "full"),
            jitter=section.get("jitter", 1e-6))
        refine = None
        if kind == "gradcem":
            refine = RefineConfig(steps=section.get("refine_steps", 2),
                                  eta=section.get("refine_eta", 0.3))
        return PlannerSpec(kind, horizon, cem=cem_cfg, refine=refine)
    if kind == "mppi":
        mcfg = MppiConfig(samples=section.get("samples", 64),
                          sigma=section.get("sigma", 0.5),
                          temperature=section.get("temperature", 1.0),
                          iterations=section.get("iterations", 1))
        return PlannerSpec("mppi", horizon, mppi=mcfg)
    raise ConfigError(f"planners.{name}.kind: unknown kind {kind!r}")


def _load_encoded_dataset(cfg: dict, spec: envs.EnvSpec, enc: Encoder):
    path = _need(cfg, "dataset", "path")
    if not os.path.isdir(path):
        raise ConfigError(f"dataset directory not found: {path}")
    data, manifest = load_dataset(path)
    return encode_dataset(enc, data), manifest


def _load_model(path: str):
    if not path or not os.path.isdir(path):
        raise ConfigError(f"model checkpoint not found: {path}")
    return worldmodel.load_model(path)


def _write_run_manifest(outdir: str, cfg: dict, enc: Encoder | None,
                        extra: dict | None = None) -> None:
    os.makedirs(outdir, exist_ok=True)
    manifest = {"config_hash": config_hash(cfg), "seed": cfg["seed"]}
    if enc is not None:
        manifest["encoder_hash"] = encoder_hash(enc)
    manifest.update(extra or {})
    with open(os.path.join(outdir, "run.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# commands


def cmd_gen_data(cfg: dict, args) -> int:
    spec = build_env(cfg)
    section = _need(cfg, "dataset")
    path = section["path"]
    if os.path.isdir(path) and os.listdir(path) and not args.force:
        raise ConfigError(f"dataset directory {path} is not empty "
                          "(use --force to overwrite)")
    seed = derive_seed(cfg["seed"], "dataset")
    data = envs.generate_dataset(spec, section.get("n_traj", 100),
                                 section.get("traj_len", 50),
                                 section.get("policy", "random"), seed)
    save_dataset(path, data, env=envs.spec_to_dict(spec), seed=seed, force=True)
    _write_run_manifest(path, cfg, None, {"n_traj": len(data.trajectories)})
    print(f"wrote {len(data.trajectories)} trajectories to {path}")
    return 0


def cmd_train(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    section = _need(cfg, "model")
    train = section.get("train", {})
    model = worldmodel.init_world_model(
        enc.d_z, spec.action_dim, hidden=tuple(section.get("hidden", [128, 128])),
        residual=section.get("residual", True),
        seed=derive_seed(cfg["seed"], "model-init"))
    result = worldmodel.train_teacher_forcing(
        model, data, epochs=train.get("epochs", 50),
        batch_size=train.get("batch_size", 64), lr=train.get("lr", 1e-3),
        seed=derive_seed(cfg["seed"], "train"))
    meta = {"encoder_hash": encoder_hash(enc), "config_hash": config_hash(cfg),
            "train": train}
    worldmodel.save_model(section["path"], result.model, meta)
    _write_trace(section["path"], result)
    _write_run_manifest(section["path"], cfg, enc)
    print(f"trained model -> {section['path']} "
          f"(final epoch loss {result.epoch_losses[-1]:.6g})")
    return 0


def _write_trace(outdir: str, result) -> None:
    trace = {"batch_losses": result.batch_losses}
    if getattr(result, "epoch_losses", None):
        trace["epoch_losses"] = result.epoch_losses
    with open(os.path.join(outdir, "train_trace.json"), "w") as fh:
        json.dump(trace, fh, sort_keys=True)
        fh.write("\n")


def cmd_finetune_adv(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    model, _ = _load_model(_need(cfg, "model", "path"))
    section = _need(cfg, "finetune", "adversarial")
    pcfg = finetune.PerturbationConfig(
        lambda_a=section.get("lambda_a", 0.5),
        lambda_z=section.get("lambda_z", 0.2),
        eps_a=section.get("eps_a"), eps_z=section.get("eps_z"),
        alpha_a=section.get("alpha_a"), alpha_z=section.get("alpha_z"),
        attack=section.get("attack", "fgsm"),
        pgd_steps=section.get("pgd_steps", 1),
        radius_mode=section.get("radius_mode", "fixed"),
        per_dimension_std=section.get("per_dimension_std", False))
    dump = section.get("dump_perturbed", False)
    result = finetune.adversarial_wm(
        model, data, pcfg, epochs=section.get("epochs", 1),
        batch_size=section.get("batch_size", 48), lr=section.get("lr", 1e-4),
        seed=derive_seed(cfg["seed"], "finetune-adv"), keep_perturbed=dump)
    out = section["out_path"]
    meta = {"encoder_hash": encoder_hash(enc), "config_hash": config_hash(cfg),
            "finetune": "adversarial"}
    worldmodel.save_model(out, result.model, meta)
    _write_trace(out, result)
    _write_run_manifest(out, cfg, enc)
    if dump and result.perturbed is not None:
        save_dataset(section.get("perturbed_path", os.path.join(out, "perturbed")),
                     result.perturbed, env=envs.spec_to_dict(spec),
                     seed=cfg["seed"], force=True)
    print(f"adversarial finetune -> {out} "
          f"(final loss {result.batch_losses[-1]:.6g})")
    return 0


def cmd_finetune_online(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    model, _ = _load_model(_need(cfg, "model", "path"))
    section = _need(cfg, "finetune", "online")
    ocfg = finetune.OnlineConfig(
        iterations=section.get("iterations", 40),
        plan_iterations=section.get("plan_iterations", 100),
        horizon=section.get("horizon", 25),
        mix_ratio=section.get("mix_ratio", 0.5),
        lr=section.get("lr", 1e-4),
        finetune_steps=section.get("finetune_steps", 50),
        batch_size=section.get("batch_size", 64),
        plan_optimizer=section.get("plan_optimizer", "adam"),
        plan_eta=section.get("plan_eta", 0.3))
    result = finetune.online_wm(model, spec, enc, data, ocfg,
                                seed=derive_seed(cfg["seed"], "finetune-online"))
    out = section["out_path"]
    meta = {"encoder_hash": encoder_hash(enc), "config_hash": config_hash(cfg),
            "finetune": "online"}
    worldmodel.save_model(out, result.model, meta)
    _write_trace(out, result)
    _write_run_manifest(out, cfg, enc)
    corrected_path = section.get("corrected_path")
    if corrected_path and result.corrected.trajectories:
        save_dataset(corrected_path, result.corrected,
                     env=envs.spec_to_dict(spec), seed=cfg["seed"], force=True)
    n_corr = len(result.corrected.trajectories)
    print(f"online finetune -> {out} ({n_corr} corrected trajectories)")
    return 0


def cmd_train_initnet(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    section = _need(cfg, "initnet")
    result = initnet.train_initnet(
        data, section.get("horizon", 25), iterations=section.get("iterations"),
        lr=section.get("lr", 0.02), seed=derive_seed(cfg["seed"], "initnet"),
        a_max=spec.a_max)
    meta = {"encoder_hash": encoder_hash(enc), "config_hash": config_hash(cfg)}
    initnet.save_initnet(section["path"], result.net, meta)
    _write_run_manifest(section["path"], cfg, enc)
    print(f"trained initnet -> {section['path']} "
          f"(final loss {result.losses[-1]:.6g})")
    return 0


def _cross_room_predicate(spec: envs.EnvSpec):
    door = spec.doors[0]

    def predicate(task: envs.TaskInstance) -> bool:
        return (task.start.position[door.axis] - door.coord) * \
            (task.goal_state.position[door.axis] - door.coord) < 0

    return predicate


def cmd_eval(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    section = _need(cfg, "eval")
    model_paths = section.get("models", {})
    if args.models:
        keep = set(args.models.split(","))
        model_paths = {k: v for k, v in model_paths.items() if k in keep}
    models = {}
    for name, path in model_paths.items():
        models[name], _ = _load_model(path)
    if not models:
        raise ConfigError("eval.models selected no checkpoints")
    planner_names = section.get("planners", list(cfg.get("planners", {})))
    if args.planners:
        keep = set(args.planners.split(","))
        planner_names = [p for p in planner_names if p in keep]
    planner_cfgs = cfg.get("planners", {})
    planners = {}
    for name in planner_names:
        if name not in planner_cfgs:
            raise ConfigError(f"eval.planners references unknown planner {name!r}")
        planners[name] = build_planner(name, planner_cfgs[name], spec)
    if not planners:
        raise ConfigError("eval selected no planners")
    mode = args.mode or section.get("mode", "mpc")
    mpc_section = section.get("mpc", {})
    mpc_cfg = MpcConfig(steps=mpc_section.get("steps", 10),
                        k_exec=mpc_section.get("k_exec"),
                        plan_iters=mpc_section.get("plan_iters", 100),
                        eta=mpc_section.get("eta"),
                        warm_start=mpc_section.get("warm_start", False))
    predicate = _cross_room_predicate(spec) if section.get("require_cross_room") else None
    report = evalreport.evaluate(
        spec, enc, models, planners, n_tasks=section.get("n_tasks", 100),
        mode=mode, seed=cfg["seed"], data=data,
        horizon_gap=section.get("horizon_gap", 25), mpc_cfg=mpc_cfg,
        workers=args.workers, task_predicate=predicate,
        config_hash=config_hash(cfg))
    out = section["out_path"]
    evalreport.emit_report(report, out)
    _write_run_manifest(out, cfg, enc)
    for cell in report.cells:
        print(f"{cell.model:>14s} x {cell.planner:<10s} [{cell.mode}] "
              f"success {cell.success_rate:6.1%} "
              f"({cell.wilson_lo:.2f}-{cell.wilson_hi:.2f}) "
              f"plan {cell.mean_plan_seconds:.3f}s")
    return 0


def cmd_gap(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    section = _need(cfg, "gap")
    plan = section.get("plan", {})
    horizon = section.get("horizon", 25)
    plan_cfg = PlanConfig(horizon=horizon,
                          iterations=plan.get("iterations", 300),
                          optimizer=plan.get("optimizer", "sgd"),
                          eta=plan.get("eta", 1.0), a_max=spec.a_max)
    out_root = section["out_path"]
    for name, path in section.get("models", {}).items():
        model, _ = _load_model(path)
        report = evalreport.train_test_gap(
            model, spec, enc, data, plan_cfg, n=section.get("n", 50),
            seed=derive_seed(cfg["seed"], "gap", name))
        outdir = os.path.join(out_root, name)
        evalreport.emit_report(report, outdir)
        _write_run_manifest(outdir, cfg, enc)
        print(f"{name:>14s} gap: expert {report.mean_expert:.6g} "
              f"planned {report.mean_planned:.6g} "
              f"difference {report.difference:.6g}")
    return 0


def cmd_landscape(cfg: dict, args) -> int:
    spec = build_env(cfg)
    enc = build_encoder(cfg, spec)
    data, _ = _load_encoded_dataset(cfg, spec, enc)
    section = _need(cfg, "landscape")
    f_base, _ = _load_model(section.get("baseline"))
    f_adv, _ = _load_model(section.get("adversarial"))
    horizon = section.get("horizon", 25)
    plan = section.get("plan", {})
    plan_cfg = PlanConfig(horizon=horizon,
                          iterations=plan.get("iterations", 300),
                          optimizer=plan.get("optimizer", "adam"),
                          eta=plan.get("eta", 1e-3), a_max=spec.a_max)
    out_root = section["out_path"]
    n_tasks = section.get("n_tasks", 10)
    smoother = 0
    rows = []
    for t in range(n_tasks):
        window = evalreport.expert_window(
            data, enc, horizon, seed=derive_seed(cfg["seed"], "landscape", t))
        pair = evalreport.landscape(
            f_base, f_adv, window, plan_cfg,
            resolution=section.get("resolution", 50),
            coeff_range=(section.get("c_min", -1.25), section.get("c_max", 1.25)),
            seed=derive_seed(cfg["seed"], "landscape-init", t))
        evalreport.emit_report(pair, os.path.join(out_root, f"task_{t}"))
        tv_base = evalreport.total_variation(pair.baseline.values)
        tv_adv = evalreport.total_variation(pair.adversarial.values)
        smoother += tv_adv <= tv_base
        rows.append({"task": t, "tv_baseline": tv_base, "tv_adversarial": tv_adv})
        print(f"task {t}: total variation baseline {tv_base:.6g} "
              f"adversarial {tv_adv:.6g}")
    summary = {"n_tasks": n_tasks, "adversarial_smoother": smoother,
               "fraction": smoother / n_tasks, "rows": rows,
               "config_hash": config_hash(cfg)}
    os.makedirs(out_root, exist_ok=True)
    with open(os.path.join(out_root, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    _write_run_manifest(out_root, cfg, enc)
    print(f"adversarial grid smoother on {smoother}/{n_tasks} tasks")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wmplanlab",
        description="Latent world-model planning laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "gen-data": cmd_gen_data,
        "train": cmd_train,
        "finetune-online": cmd_finetune_online,
        "finetune-adv": cmd_finetune_adv,
        "train-initnet": cmd_train_initnet,
        "eval": cmd_eval,
        "gap": cmd_gap,
        "landscape": cmd_landscape,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.set_defaults(func=fn)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"named preset: {sorted(presets.PRESETS)}")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (dotted path)")
        if name == "gen-data":
            p.add_argument("--force", action="store_true",
                           help="overwrite an existing dataset directory")
        if name == "eval":
            p.add_argument("--models", help="comma-separated model filter")
            p.add_argument("--planners", help="comma-separated planner filter")
            p.add_argument("--mode", choices=["open-loop", "mpc"],
                           help="override eval.mode")
            p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                           help="parallel task workers")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except FileExistsError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericFailure as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Config sweep for the scaled success-rate criterion (not shipped)."""
import itertools
import sys
import time

import numpy as np

from wmplanlab import envs, evalreport, finetune, worldmodel
from wmplanlab.encoder import encode_dataset, make_random_fourier
from wmplanlab.planners import MpcConfig, PlanConfig, PlannerSpec, wgl_late_heavy
from wmplanlab.rng import derive_seed

t0 = time.perf_counter()
spec = envs.wall2d_spec()
enc = make_random_fourier(2, d_z=64, sigma=4.0, seed=0)
raw = envs.generate_dataset(spec, 500, 50, "goal-seeking-noisy", seed=0)
data = encode_dataset(enc, raw)

models = {}


def get_base(epochs):
    key = f"base{epochs}"
    if key not in models:
        f0 = worldmodel.init_world_model(64, 2, seed=derive_seed(0, "model-init"))
        res = worldmodel.train_teacher_forcing(f0, data, epochs=epochs,
                                               batch_size=64, lr=1e-3,
                                               seed=derive_seed(0, "train"))
        models[key] = res.model
        print(f"[{time.perf_counter()-t0:6.1f}s] {key}: final loss {res.epoch_losses[-1]:.4g}", flush=True)
    return models[key]


def get_adv(epochs, lam_a, lam_z, ft_epochs=2):
    key = f"adv{epochs}-{lam_a}-{lam_z}-{ft_epochs}"
    if key not in models:
        pcfg = finetune.PerturbationConfig(lambda_a=lam_a, lambda_z=lam_z)
        res = finetune.adversarial_wm(get_base(epochs), data, pcfg,
                                      epochs=ft_epochs, batch_size=48, lr=1e-4,
                                      seed=derive_seed(0, "ft-adv"))
        models[key] = res.model
        print(f"[{time.perf_counter()-t0:6.1f}s] {key} done", flush=True)
    return models[key]


def cross_room(task):
    return (task.start.position[0] - 0.5) * (task.goal_state.position[0] - 0.5) < 0


def run_eval(tag, base, adv, loss_mode, n=50):
    loss = wgl_late_heavy(25) if loss_mode == "wgl" else None
    kwargs = {"loss": loss} if loss else {}
    plan = PlanConfig(horizon=25, iterations=100, optimizer="adam", eta=0.2,
                      a_max=spec.a_max, **kwargs)
    pspec = PlannerSpec("gbp", horizon=25, plan=plan)
    mpc_cfg = MpcConfig(steps=10, k_exec=None, plan_iters=100, eta=0.2)
    report = evalreport.evaluate(spec, enc, {"base": base, "adv": adv},
                                 {"gbp_adam": pspec}, n_tasks=n, mode="mpc",
                                 seed=2, data=data, horizon_gap=25,
                                 mpc_cfg=mpc_cfg, workers=2,
                                 task_predicate=cross_room)
    rates = {c.model: c.success_rate for c in report.cells}
    print(f"[{time.perf_counter()-t0:6.1f}s] {tag}: base {rates['base']:.2f} "
          f"adv {rates['adv']:.2f} delta {rates['adv']-rates['base']:+.2f}", flush=True)


combos = [
    ("A ep50 l(.5,.2) final", 50, 0.5, 0.2, 2, "final"),
    ("B ep30 l(.5,.2) wgl", 30, 0.5, 0.2, 2, "wgl"),
    ("C ep50 l(.5,.2) wgl", 50, 0.5, 0.2, 2, "wgl"),
]
for tag, ep, la, lz, fte, mode in combos:
    run_eval(tag, get_base(ep), get_adv(ep, la, lz, fte), mode)

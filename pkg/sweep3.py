"""Baseline difficulty sweep (not shipped)."""
import time
import numpy as np
from wmplanlab import envs, evalreport, finetune, worldmodel
from wmplanlab.encoder import encode_dataset, make_random_fourier
from wmplanlab.planners import MpcConfig, PlanConfig, PlannerSpec
from wmplanlab.rng import derive_seed

t0 = time.perf_counter()
spec = envs.wall2d_spec()

def cross_room(task):
    return (task.start.position[0] - 0.5) * (task.goal_state.position[0] - 0.5) < 0

plan = PlanConfig(horizon=25, iterations=100, optimizer="adam", eta=0.2, a_max=spec.a_max)
pspec = PlannerSpec("gbp", horizon=25, plan=plan)
mpc_cfg = MpcConfig(steps=10, k_exec=None, plan_iters=100, eta=0.2)

for sigma, ntraj in ((8.0, 500), (4.0, 300)):
    enc = make_random_fourier(2, d_z=64, sigma=sigma, seed=0)
    raw = envs.generate_dataset(spec, ntraj, 50, "goal-seeking-noisy", seed=0)
    data = encode_dataset(enc, raw)
    f0 = worldmodel.init_world_model(64, 2, seed=derive_seed(0, "model-init"))
    tr = worldmodel.train_teacher_forcing(f0, data, epochs=30, batch_size=64,
                                          lr=1e-3, seed=derive_seed(0, "train"))
    base = tr.model
    models = {"base": base}
    for la, lz in ((0.2, 0.1), (0.5, 0.2)):
        pcfg = finetune.PerturbationConfig(lambda_a=la, lambda_z=lz)
        models[f"adv{la}_{lz}"] = finetune.adversarial_wm(
            base, data, pcfg, epochs=2, batch_size=48, lr=1e-4,
            seed=derive_seed(0, "ft-adv")).model
    report = evalreport.evaluate(spec, enc, models, {"gbp_adam": pspec},
                                 n_tasks=50, mode="mpc", seed=2, data=data,
                                 horizon_gap=25, mpc_cfg=mpc_cfg, workers=2,
                                 task_predicate=cross_room)
    line = " ".join(f"{c.model}={c.success_rate:.2f}" for c in report.cells)
    print(f"[{time.perf_counter()-t0:6.1f}s] sigma={sigma} ntraj={ntraj} "
          f"(train loss {tr.epoch_losses[-1]:.3g}): {line}", flush=True)

"""AWM finetune-schedule sweep (not shipped)."""
import time
import numpy as np
from wmplanlab import envs, evalreport, finetune, worldmodel
from wmplanlab.encoder import encode_dataset, make_random_fourier
from wmplanlab.planners import MpcConfig, PlanConfig, PlannerSpec
from wmplanlab.rng import derive_seed

t0 = time.perf_counter()
spec = envs.wall2d_spec()
enc = make_random_fourier(2, d_z=64, sigma=4.0, seed=0)
raw = envs.generate_dataset(spec, 500, 50, "goal-seeking-noisy", seed=0)
data = encode_dataset(enc, raw)
f0 = worldmodel.init_world_model(64, 2, seed=derive_seed(0, "model-init"))
base = worldmodel.train_teacher_forcing(f0, data, epochs=30, batch_size=64,
                                        lr=1e-3, seed=derive_seed(0, "train")).model

def cross_room(task):
    return (task.start.position[0] - 0.5) * (task.goal_state.position[0] - 0.5) < 0

plan = PlanConfig(horizon=25, iterations=100, optimizer="adam", eta=0.2, a_max=spec.a_max)
pspec = PlannerSpec("gbp", horizon=25, plan=plan)
mpc_cfg = MpcConfig(steps=10, k_exec=None, plan_iters=100, eta=0.2)

models = {"base": base}
variants = {
    "g_lr3e5_e6": (0.2, 0.1, 3e-5, 6),
    "g_lr5e5_e4": (0.2, 0.1, 5e-5, 4),
    "s_lr3e5_e6": (0.5, 0.2, 3e-5, 6),
    "s_lr1e4_e4": (0.5, 0.2, 1e-4, 4),
}
for name, (la, lz, lr, ep) in variants.items():
    pcfg = finetune.PerturbationConfig(lambda_a=la, lambda_z=lz)
    models[name] = finetune.adversarial_wm(base, data, pcfg, epochs=ep,
                                          batch_size=48, lr=lr,
                                          seed=derive_seed(0, "ft-adv")).model
print(f"[{time.perf_counter()-t0:6.1f}s] finetunes ready", flush=True)
for seed in (2, 3):
    report = evalreport.evaluate(spec, enc, models, {"gbp_adam": pspec},
                                 n_tasks=50, mode="mpc", seed=seed, data=data,
                                 horizon_gap=25, mpc_cfg=mpc_cfg, workers=2,
                                 task_predicate=cross_room)
    line = " ".join(f"{c.model}={c.success_rate:.2f}" for c in report.cells)
    print(f"[{time.perf_counter()-t0:6.1f}s] eval seed {seed}: {line}", flush=True)

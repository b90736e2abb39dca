"""Pilot run for the acceptance-scale Wall2D experiments (not shipped)."""
import sys
import time

import numpy as np

from wmplanlab import envs, evalreport, finetune, worldmodel
from wmplanlab.encoder import encode_dataset, make_random_fourier
from wmplanlab.planners import CemConfig, MpcConfig, PlanConfig, PlannerSpec
from wmplanlab.rng import derive_seed

t0 = time.perf_counter()


def log(msg):
    print(f"[{time.perf_counter()-t0:7.1f}s] {msg}", flush=True)


spec = envs.wall2d_spec()
enc = make_random_fourier(2, d_z=64, sigma=4.0, seed=0)

N_TRAJ = int(sys.argv[1]) if len(sys.argv) > 1 else 500
EPOCHS = int(sys.argv[2]) if len(sys.argv) > 2 else 30
LAM_A = float(sys.argv[3]) if len(sys.argv) > 3 else 0.5
LAM_Z = float(sys.argv[4]) if len(sys.argv) > 4 else 0.2
N_EVAL = int(sys.argv[5]) if len(sys.argv) > 5 else 30

raw = envs.generate_dataset(spec, N_TRAJ, 50, "goal-seeking-noisy", seed=0)
data = encode_dataset(enc, raw)
log(f"dataset: {data.n_transitions()} transitions")

f0 = worldmodel.init_world_model(64, 2, seed=derive_seed(0, "model-init"))
res = worldmodel.train_teacher_forcing(f0, data, epochs=EPOCHS, batch_size=64,
                                       lr=1e-3, seed=derive_seed(0, "train"))
base = res.model
log(f"baseline trained: epoch losses {res.epoch_losses[0]:.4g} -> {res.epoch_losses[-1]:.4g}")

pcfg = finetune.PerturbationConfig(lambda_a=LAM_A, lambda_z=LAM_Z)
adv_res = finetune.adversarial_wm(base, data, pcfg, epochs=2, batch_size=48,
                                  lr=1e-4, seed=derive_seed(0, "ft-adv"))
adv = adv_res.model
log(f"AWM finetuned: losses {adv_res.batch_losses[0]:.4g} -> {adv_res.batch_losses[-1]:.4g}")

ocfg = finetune.OnlineConfig(iterations=40, plan_iterations=100, horizon=25,
                             mix_ratio=0.5, lr=1e-4, finetune_steps=50,
                             batch_size=64)
owm_res = finetune.online_wm(base, spec, enc, data, ocfg, seed=derive_seed(0, "ft-owm"))
owm = owm_res.model
log(f"OWM finetuned: {len(owm_res.corrected.trajectories)} corrected trajs")

# --- train-test gap (App B.6 protocol: GD 300 steps eta 1.0) ---
gap_cfg = PlanConfig(horizon=25, iterations=300, optimizer="sgd", eta=1.0,
                     a_max=spec.a_max)
for name, model in (("baseline", base), ("adv", adv), ("owm", owm)):
    rep = evalreport.train_test_gap(model, spec, enc, data, gap_cfg, n=20, seed=1)
    log(f"gap[{name}]: expert {rep.mean_expert:.5g} planned {rep.mean_planned:.5g} "
        f"diff {rep.difference:.5g}")

# --- MPC eval: GBP+Adam per Table 4c ---
plan = PlanConfig(horizon=25, iterations=100, optimizer="adam", eta=0.2,
                  a_max=spec.a_max)
pspec = PlannerSpec("gbp", horizon=25, plan=plan)
mpc_cfg = MpcConfig(steps=10, k_exec=None, plan_iters=100, eta=0.2)
door = spec.doors[0]


def cross_room(task):
    return (task.start.position[0] - 0.5) * (task.goal_state.position[0] - 0.5) < 0


report = evalreport.evaluate(spec, enc, {"baseline": base, "adv": adv, "owm": owm},
                             {"gbp_adam": pspec}, n_tasks=N_EVAL, mode="mpc",
                             seed=2, data=data, horizon_gap=25, mpc_cfg=mpc_cfg,
                             workers=2, task_predicate=cross_room)
for cell in report.cells:
    log(f"MPC success[{cell.model}]: {cell.success_rate:.2f} "
        f"({cell.successes}/{cell.n_tasks}) plan {cell.mean_plan_seconds:.2f}s")

# --- wall clock: gbp N=300 vs cem 300/30/30 (criterion 7 shape) ---
task = envs.sample_task(spec, data, 25, seed=9)
from wmplanlab.encoder import encode
z1 = encode(enc, envs.obs_of(spec, task.start))
zg = encode(enc, task.goal_obs)
gbp_cfg = PlanConfig(horizon=25, iterations=300, optimizer="sgd", eta=1.0,
                     a_max=spec.a_max, seed=0)
from wmplanlab.planners import cem, gbp
pr_g = gbp(base, z1, zg, gbp_cfg)
pr_c = cem(base, z1, zg, CemConfig(n_pop=300, k_elite=30, iterations=30,
                                   sigma0=0.05), H=25, seed=0)
log(f"wall-clock gbp {pr_g.wall_clock:.2f}s vs cem {pr_c.wall_clock:.2f}s "
    f"ratio {pr_c.wall_clock/pr_g.wall_clock:.1f}")

# --- landscape TV on 4 tasks, R=20 ---
ls_cfg = PlanConfig(horizon=25, iterations=300, optimizer="adam", eta=1e-3,
                    a_max=spec.a_max)
wins = 0
for t in range(4):
    window = evalreport.expert_window(data, enc, 25, seed=derive_seed(3, "ls", t))
    pair = evalreport.landscape(base, adv, window, ls_cfg, resolution=20,
                                seed=derive_seed(3, "ls-init", t))
    tv_b = evalreport.total_variation(pair.baseline.values)
    tv_a = evalreport.total_variation(pair.adversarial.values)
    wins += tv_a <= tv_b
    log(f"landscape task {t}: TV base {tv_b:.4g} adv {tv_a:.4g}")
log(f"adv smoother on {wins}/4")

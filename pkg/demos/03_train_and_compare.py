"""Train the structured agent and both baselines, then evaluate them.

The default budget is small so the script finishes in a few minutes; pass
a larger step count (the acceptance run uses 2000000) for meaningful
numbers.

Run: python3 demos/03_train_and_compare.py [steps]
"""
import sys
import time

from attrplan.agents import train
from attrplan.baselines import CurriculumSchedule, curriculum_rl_train
from attrplan.config import default_config
from attrplan.controllers import ScriptedController
from attrplan.envs import ModularSwitches
from attrplan.harness import evaluate
from attrplan.tasks import eval_tasks

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
cfg = default_config("modular", env_params={"q": 2}, explore_steps=steps, execute_steps=steps,
                     rl_steps=steps, log_interval=max(steps // 5, 1))
env = ModularSwitches(q=2)
tasks = eval_tasks(env, cfg.eval_tasks, cfg.seed, cfg.eval_min_dist, cfg.eval_max_dist)


def progress(row):
    print("   ", row)


models = {}
for method in ("structured", "unstructured"):
    t = time.time()
    print(f"training {method} ({steps} exploration + {steps} execution steps)")
    models[method] = train(cfg, env, method, metrics_sink=progress)
    print(f"   done in {time.time() - t:.0f}s, buffer has {len(models[method].memory.buffer)}"
          " deltas")

t = time.time()
schedule = CurriculumSchedule(cfg.max_stage, cfg.promote_threshold, cfg.promote_window)
models["rl"] = curriculum_rl_train(env, schedule, cfg)
print(f"curriculum rl reached stage {schedule.stage} in {time.time() - t:.0f}s")

print("\nsuccess on", len(tasks), "tasks with a", cfg.eval_budget, "step budget")
for method in ("rl", "unstructured", "structured"):
    r = evaluate(method, models[method], env, tasks, cfg, cfg.seed)
    print(f"  {method:>12}: {r.success_rate:.0%}")

# How much of the structured agent's shortfall is the low-level policy?
r = evaluate("structured", models["structured"], env, tasks, cfg, cfg.seed,
             controller=ScriptedController())
print(f"  structured graph + scripted controller: {r.success_rate:.0%}")

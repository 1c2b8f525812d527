"""Plan on Modular Switches with a perfect edge model and a scripted walker.

This isolates the planner from everything learned: if the graph and the
costs are right, nearly every task should be solved inside 150 steps.

Run: python3 demos/02_planning_with_an_oracle.py
"""
import numpy as np

from attrplan.controllers import ScriptedController
from attrplan.edge import OracleEdge
from attrplan.envs import ModularSwitches
from attrplan.memory import TransitionBuffer
from attrplan.planner import plan, replan_on_failure
from attrplan.tasks import eval_tasks

env = ModularSwitches(q=2)
buf = TransitionBuffer(env.space)
for d in env.delta_forms():
    buf.insert_transition(d)
ed = OracleEdge.for_env(env)

map_seed, goal = eval_tasks(env, 1, 3, 5, 15)[0]
state = env.reset(map_seed)
print(env.render(state))
print("goal (None = anything):", goal.to_list())
p = plan(buf, ed, env.attributes(state), goal)
print(p.to_text())

ok, used = replan_on_failure(env, state, lambda r: plan(buf, ed, r, goal), ScriptedController(),
                             goal, 150, 15, np.random.default_rng(0))
print(f"reached goal: {ok} in {used} steps")
print(env.render(state))

wins = 0
for i, (seed, g) in enumerate(eval_tasks(env, 50, 0, 5, 15)):
    s = env.reset(seed)
    wins += replan_on_failure(env, s, lambda r: plan(buf, ed, r, g), ScriptedController(), g,
                              150, 15, np.random.default_rng(i))[0]
print(f"50 tasks: {wins} solved")

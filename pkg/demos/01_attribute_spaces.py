"""Walk through the three environments and their attribute spaces.

Run: python3 demos/01_attribute_spaces.py
"""
import numpy as np

from attrplan.algebra import compose, diff, encode, quantize
from attrplan.envs import Constrained, Exchangeable, ModularSwitches
from attrplan.envs.grid import INTERACT


def show(env, seed=0):
    state = env.reset(seed)
    print(f"== {env.name}")
    print(env.render(state))
    rho = env.attributes(state)
    print("blocks:", [b.kind for b in env.space.blocks])
    print("encoding:", np.round(encode(env.space, rho), 3))
    print("admissible deltas here:")
    for d in env.oracle_admissible_deltas(rho):
        print("  ", d)
    print()


show(ModularSwitches(q=3))
show(Exchangeable(q=3))
show(Constrained())

# Deltas are group elements: they compose, invert, and can be invalid.
env = ModularSwitches(q=3)
rho = env.attributes(env.reset(0))
toggle = env.toggle_delta()
three = compose(env.space, compose(env.space, compose(env.space, rho, toggle), toggle), toggle)
print("three toggles return the switch to", three[-1], "(it started at", rho[-1], ")")
print("picking a type with nothing left:", compose(env.space, (0,) * len(rho),
                                                    env.pick_delta(0)))

# The same delta observed in two different states is one buffer entry.
state = env.reset(1)
ys, xs = np.nonzero(state.grid == env.switch_code)
state.agent_pos = (int(xs[0]), int(ys[0]))
before = env.attributes(state)
env.step(state, INTERACT)
print("stepping on the switch and interacting gives delta", diff(env.space,
                                                                 env.attributes(state), before))

# Real coordinates are binned for counting and goal matching.
c = Constrained()
print("constrained attributes", c.attributes(c.reset(2)), "quantized",
      quantize(c.space, c.attributes(c.reset(2))))

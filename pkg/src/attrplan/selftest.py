"""Quick in-process property checks behind ``attrplan selftest``.

Each check returns ``(ok, detail)``. These are smaller versions of the
test-suite properties, meant as a smoke test of an installed package.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .algebra import AttributeSpace, Int, ModQ, Nat, Real, compose, diff
from .controllers import ScriptedController
from .edge import OracleEdge
from .envs import ModularSwitches
from .memory import TransitionBuffer
from .nn import (LOGISTIC, SOFTMAX, Mlp, finite_difference_grads, logistic_loss,
                 max_relative_error, softmax_xent_loss)
from .planner import dijkstra, plan, replan_on_failure
from .tasks import eval_tasks


def check_group_laws(n: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    space = AttributeSpace((Nat(), Int(), ModQ(5), Real(-8, 8, bins=16)))
    for _ in range(n):
        rho = (int(rng.integers(0, 10)), int(rng.integers(-9, 10)), int(rng.integers(5)),
               int(rng.integers(-32, 33)) / 4)
        delta = (int(rng.integers(-10, 11)), int(rng.integers(-9, 10)), int(rng.integers(5)),
                 int(rng.integers(-32, 33)) / 4)
        if compose(space, rho, space.zero()) != rho:
            return False, f"identity fails at {rho}"
        out = compose(space, rho, delta)
        if out is None:
            if rho[0] + delta[0] >= 0:
                return False, f"spurious invalidation {rho} + {delta}"
            continue
        if diff(space, out, rho) != delta or not 0 <= out[2] < 5:
            return False, f"inverse fails at {rho} + {delta}"
    return True, f"{n} instances"


def check_gradients(n: int = 20, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        head = (LOGISTIC, SOFTMAX)[i % 2]
        n_out = 1 if head == LOGISTIC else 4
        m = Mlp(5, n_out, head, hidden=6, rng=rng, out_scale=1.0)
        x = rng.normal(size=(3, 5))
        if head == LOGISTIC:
            y = rng.integers(0, 2, size=3)

            def loss(model):
                return logistic_loss(model.logits(x)[:, 0], y)
        else:
            y = rng.integers(0, n_out, size=3)

            def loss(model):
                return softmax_xent_loss(model.logits(x), y)
        z, cache = m.logits(x, cache=True)
        _, gz = loss(m)
        g = m.backward(cache, gz)
        fd = finite_difference_grads(m, lambda mm: loss(mm)[0])
        worst = max(worst, max_relative_error(g, fd))
    return worst < 1e-4, f"max relative error {worst:.2e}"


def _brute_force(n, edges, src, dst):
    best = math.inf
    for k in range(n - 1):
        for mid in itertools.permutations([v for v in range(n) if v not in (src, dst)], k):
            path = (src, *mid, dst)
            c = 0.0
            for a, b in zip(path, path[1:]):
                if (a, b) not in edges:
                    break
                c += edges[(a, b)]
            else:
                best = min(best, c)
    return best


def check_dijkstra(n_graphs: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(n_graphs):
        n = int(rng.integers(2, 7))
        edges = {(a, b): float(rng.uniform(0, 5)) for a in range(n) for b in range(n)
                 if a != b and rng.random() < 0.4}
        out = dijkstra(0, lambda v: v == n - 1,
                       lambda v: [(b, b, c) for (a, b), c in sorted(edges.items()) if a == v])
        ref = _brute_force(n, edges, 0, n - 1)
        got = math.inf if out is None else out.cost
        if not (got == ref == math.inf or abs(got - ref) <= 1e-9):
            return False, f"dijkstra {got} vs brute force {ref}"
    return True, f"{n_graphs} graphs"


def check_oracle_pipeline(n_tasks: int = 10, seed: int = 0):
    env = ModularSwitches(q=2)
    buf = TransitionBuffer(env.space)
    for d in env.delta_forms():
        buf.insert_transition(d)
    ed = OracleEdge.for_env(env)
    ctrl = ScriptedController()
    wins = 0
    for i, (map_seed, goal) in enumerate(eval_tasks(env, n_tasks, seed, 1, 15)):
        state = env.reset(map_seed)
        ok, _ = replan_on_failure(env, state, lambda r: plan(buf, ed, r, goal), ctrl, goal,
                                  150, 15, np.random.default_rng([seed, i]))
        wins += ok
    return wins >= 0.9 * n_tasks, f"{wins}/{n_tasks} tasks solved"


CHECKS = {"group_laws": check_group_laws, "gradients": check_gradients,
          "dijkstra": check_dijkstra, "oracle_pipeline": check_oracle_pipeline}


def run_all(out=print) -> bool:
    ok_all = True
    for name, fn in CHECKS.items():
        ok, detail = fn()
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok_all

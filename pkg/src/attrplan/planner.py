"""Dijkstra planning over the attribute graph induced by buffer deltas.

Edge (u, d) costs ``-log ED(u, d)``. The graph is expanded lazily as nodes
are popped, bounded by ``max_nodes`` expansions and ``depth_limit`` edges.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional

import numpy as np

from .algebra import AttributeSpace, compose, quantize

MAX_NODES = 20_000
DEPTH_LIMIT = 40


@dataclass(frozen=True)
class Goal:
    """Target attribute values; ``None`` entries are unconstrained."""
    values: tuple

    @classmethod
    def on(cls, space: AttributeSpace, coords: Iterable[int], values: Iterable) -> "Goal":
        full = [None] * len(space)
        for k, v in zip(coords, values):
            full[k] = v
        return cls(tuple(full))

    def matches(self, space: AttributeSpace, rho) -> bool:
        qr = quantize(space, rho)
        filled = tuple(0 if g is None else g for g in self.values)
        qg = quantize(space, filled)
        return all(g is None or a == b for g, a, b in zip(self.values, qr, qg))

    def to_list(self) -> list:
        return list(self.values)


@dataclass
class Plan:
    nodes: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    cost: float = 0.0
    edge_costs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.deltas)

    def to_text(self) -> str:
        lines = [f"start {list(self.nodes[0])}"] if self.nodes else []
        for d, n, c in zip(self.deltas, self.nodes[1:], self.edge_costs):
            lines.append(f"delta {list(d)} -> {list(n)} cost {c:.6f}")
        lines.append(f"total_cost {self.cost:.6f} edges {len(self.deltas)}")
        return "\n".join(lines)


def dijkstra(start, is_goal: Callable, successors: Callable, key: Callable = lambda n: n,
             max_nodes: int = MAX_NODES, depth_limit: int = DEPTH_LIMIT) -> Optional[Plan]:
    """Minimum-cost path from ``start`` to the first node satisfying ``is_goal``.

    ``successors(node)`` yields ``(label, next_node, cost)`` with cost >= 0.
    Ties are broken by fewer edges, then by the ordering of node keys.
    """
    k0 = key(start)
    best: dict[Hashable, tuple] = {k0: (0.0, 0)}
    parent: dict[Hashable, tuple] = {k0: (None, None, start, 0.0)}
    heap = [(0.0, 0, k0)]
    done = set()
    expanded = 0
    while heap:
        cost, depth, k = heapq.heappop(heap)
        if k in done or best[k] != (cost, depth):
            continue
        done.add(k)
        node = parent[k][2]
        if is_goal(node):
            return _unwind(parent, k, cost)
        if expanded >= max_nodes:
            break
        expanded += 1
        if depth >= depth_limit:
            continue
        for label, nxt, c in successors(node):
            if c < 0 or not math.isfinite(c):
                raise ValueError("edge costs must be finite and non-negative")
            nk = key(nxt)
            if nk in done:
                continue
            cand = (cost + c, depth + 1)
            if nk not in best or cand < best[nk]:
                best[nk] = cand
                parent[nk] = (k, label, nxt, c)
                heapq.heappush(heap, (cand[0], cand[1], nk))
    return None


def _unwind(parent, k, cost) -> Plan:
    nodes, labels, costs = [], [], []
    while k is not None:
        pk, label, node, c = parent[k]
        nodes.append(node)
        if pk is not None:
            labels.append(label)
            costs.append(c)
        k = pk
    return Plan(nodes[::-1], labels[::-1], cost, costs[::-1])


def plan(buffer, ed, start, goal: Goal, max_nodes: int = MAX_NODES,
         depth_limit: int = DEPTH_LIMIT) -> Optional[Plan]:
    """Cheapest path under -log ED from ``start`` to any node matching ``goal``."""
    space = buffer.space
    deltas = list(buffer)

    def successors(node):
        cands, nexts = [], []
        for d in deltas:
            n = compose(space, node, d)
            if n is not None:
                cands.append(d)
                nexts.append(n)
        if not cands:
            return []
        probs = ed.predict_many(node, cands)
        return [(d, n, -math.log(p)) for d, n, p in zip(cands, nexts, probs)]

    return dijkstra(tuple(start), lambda n: goal.matches(space, n), successors,
                    key=lambda n: quantize(space, n), max_nodes=max_nodes,
                    depth_limit=depth_limit)


# -- executing plans in the environment

SUCCESS, WRONG, TIMEOUT, BUDGET = "success", "wrong", "timeout", "budget"


def run_subgoal(env, state, controller, delta, max_steps: int, budget: int,
                rng: np.random.Generator):
    """Drive ``controller`` towards ``attributes + delta``.

    Returns ``(status, steps)``. The attempt ends at the first attribute
    change; it succeeds when the new attributes match the target on the
    quantization grid.
    """
    space = env.space
    rho = env.attributes(state)
    target = compose(space, rho, delta)
    if target is None:
        return WRONG, 0
    qtarget = quantize(space, target)
    for t in range(max_steps):
        if t >= budget:
            return BUDGET, t
        env.step(state, controller.act(env, state, rho, delta, rng))
        new = env.attributes(state)
        if new != rho:
            return (SUCCESS if quantize(space, new) == qtarget else WRONG), t + 1
    return TIMEOUT, max_steps


def execute_plan(env, state, controller, the_plan: Plan, budget: int, max_steps: int,
                 rng: np.random.Generator, goal: Goal | None = None):
    """Feed each planned delta to the controller; abort on the first failure.

    Returns ``(success, steps_used)``. Without an explicit goal, success means
    reaching the plan's final node (same quantization bin).
    """
    space = env.space
    used = 0
    for d in the_plan.deltas:
        status, n = run_subgoal(env, state, controller, d, max_steps, budget - used, rng)
        used += n
        if status != SUCCESS:
            return False, used
    final = env.attributes(state)
    if goal is not None:
        return goal.matches(space, final), used
    end = the_plan.nodes[-1] if the_plan.nodes else final
    return quantize(space, final) == quantize(space, end), used


def replan_on_failure(env, state, planner_fn: Callable, controller, goal: Goal, budget: int,
                      max_steps: int, rng: np.random.Generator, replan: bool = True):
    """Plan, execute, and re-plan from wherever a failed sub-goal left the agent.

    ``planner_fn(rho)`` returns a :class:`Plan` or None. Returns
    ``(success, steps_used)``.
    """
    space = env.space
    used = 0
    while True:
        rho = env.attributes(state)
        if goal.matches(space, rho):
            return True, used
        if used >= budget:
            return False, used
        p = planner_fn(rho)
        if p is None or len(p) == 0:
            return False, used
        ok = True
        for d in p.deltas:
            status, n = run_subgoal(env, state, controller, d, max_steps, budget - used, rng)
            used += n
            if status != SUCCESS:
                ok = False
                break
        if ok and goal.matches(space, env.attributes(state)):
            return True, used
        # a failed sub-goal, or every sub-goal met on the grid but the goal
        # missed (representative deltas of stochastic changes can drift)
        if not replan:
            return False, used

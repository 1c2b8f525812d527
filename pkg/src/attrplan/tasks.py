"""Goal sampling and attribute-graph distances for evaluation and curricula."""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .algebra import compose, quantize
from .envs import Constrained
from .planner import Goal


def attribute_distances(env, rho0, max_depth: int = 60) -> dict:
    """BFS over the true admissible deltas from ``rho0``.

    Returns the minimum number of transitions needed to reach each projection
    of the attributes onto ``env.goal_coords()``.
    """
    coords = env.goal_coords()
    start = tuple(rho0)
    seen = {start: 0}
    out = {tuple(start[k] for k in coords): 0}
    queue = deque([start])
    while queue:
        rho = queue.popleft()
        d = seen[rho]
        if d >= max_depth:
            continue
        for delta in env.oracle_admissible_deltas(rho):
            nxt = compose(env.space, rho, delta)
            if nxt is None or nxt in seen:
                continue
            seen[nxt] = d + 1
            proj = tuple(nxt[k] for k in coords)
            if proj not in out:
                out[proj] = d + 1
            queue.append(nxt)
    return out


def sample_discrete_goal(env, rho0, rng: np.random.Generator, dmin: int, dmax: int):
    """A goal on the env's goal coordinates at graph distance in [dmin, dmax].

    Falls back to the farthest reachable projections when the range is empty.
    Returns ``(goal, distance)``.
    """
    dist = attribute_distances(env, rho0, max_depth=dmax)
    cands = sorted(p for p, d in dist.items() if dmin <= d <= dmax)
    if not cands:
        far = max(dist.values())
        cands = sorted(p for p, d in dist.items() if d == far)
    proj = cands[int(rng.integers(len(cands)))]
    return Goal.on(env.space, env.goal_coords(), proj), dist[proj]


def sample_constrained_goal(env: Constrained, rho0, rng: np.random.Generator,
                            rmin: float, rmax: float, tries: int = 10_000) -> Goal:
    """Uniform point of the support at euclidean distance in [rmin, rmax] from rho0."""
    m0 = np.array(rho0[:env.q], dtype=float)
    for _ in range(tries):
        m = rng.uniform(0.0, env.upper, env.q)
        if env.in_support(m) and rmin <= math.dist(m, m0) <= rmax:
            return Goal.on(env.space, env.goal_coords(), tuple(float(v) for v in m))
    raise RuntimeError("no goal found in the requested distance band")


def one_step_goal(env, rho0, rng: np.random.Generator) -> Goal:
    """Goal one representative transition away (first curriculum stage)."""
    forms = [d for d in env.delta_forms() if compose(env.space, rho0, d) is not None]
    if isinstance(env, Constrained):
        forms = [d for d in forms
                 if env.in_support(compose(env.space, rho0, d)[:env.q])]
    d = forms[int(rng.integers(len(forms)))]
    target = compose(env.space, rho0, d)
    coords = env.goal_coords()
    return Goal.on(env.space, coords, [target[k] for k in coords])


def eval_tasks(env, n: int, seed: int, dmin: int, dmax: int):
    """``n`` (map_seed, goal) pairs on fresh maps."""
    rng = np.random.default_rng([seed, 7])
    out = []
    for _ in range(n):
        map_seed = int(rng.integers(2 ** 31))
        rho0 = env.attributes(env.reset(map_seed))
        if isinstance(env, Constrained):
            goal = sample_constrained_goal(env, rho0, rng, float(dmin), float(dmax))
        else:
            goal, _ = sample_discrete_goal(env, rho0, rng, dmin, dmax)
        out.append((map_seed, goal))
    return out


def same_bin(env, a, b) -> bool:
    return quantize(env.space, a) == quantize(env.space, b)

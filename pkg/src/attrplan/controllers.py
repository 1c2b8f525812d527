"""Scripted low-level controller used to test planning independently of RL."""
from __future__ import annotations

import numpy as np

from .algebra import compose, diff


def same_form(a, b) -> bool:
    """Deltas change the same coordinates in the same directions."""
    return all((x > 0) == (y > 0) and (x < 0) == (y < 0) for x, y in zip(a, b))


class ScriptedController:
    """Walks (BFS) to the nearest cell where some interact action produces a
    change of the requested form, then presses it. Falls back to a random
    action when no such cell exists."""

    def __init__(self):
        self._cache: dict = {}

    def _targets(self, env, state, rho, delta):
        key = (state.grid.tobytes(), state.counts.tobytes(), state.switch, state.hammers,
               tuple(delta))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = {}
        for y in range(env.height):
            for x in range(env.width):
                if state.grid[y, x] < 0:
                    continue
                for a in env.interact_actions():
                    s = state.copy()
                    s.agent_pos = (x, y)
                    env.step(s, a)
                    d = diff(env.space, env.attributes(s), rho)
                    if not env.space.is_zero(d) and same_form(d, delta):
                        out.setdefault((x, y), a)
                        break
        if len(self._cache) > 10_000:
            self._cache.clear()
        self._cache[key] = out
        return out

    def act(self, env, state, rho, delta, rng: np.random.Generator) -> int:
        if compose(env.space, rho, delta) is None:
            return int(rng.integers(env.n_actions))
        targets = self._targets(env, state, rho, delta)
        if state.agent_pos in targets:
            return targets[state.agent_pos]
        path = env.shortest_path_actions(state, set(targets))
        if path:
            return path[0]
        return int(rng.integers(env.n_actions))

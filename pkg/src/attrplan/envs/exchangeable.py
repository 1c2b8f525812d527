"""Exchangeable Attributes: pick objects, trade collected items at fixed rates.

Attributes are ``(remaining_0..remaining_{q-1}, collected_0..collected_{q-1})`` in N^{2q}.
Trade(i, j) turns ``give[i][j]`` items of type i into ``get[i][j]`` items of type j.
"""
from __future__ import annotations

import itertools

import numpy as np

from ..algebra import AttributeSpace, Nat
from .grid import BASE_ACTIONS, GridEnv, GridState, INTERACT


class Exchangeable(GridEnv):
    name = "exchangeable"

    def __init__(self, q: int = 3, objects_per_type=(2, 4), give=2, get=1, **kw):
        if q < 2:
            raise ValueError("q must be >= 2")
        self.q = q
        self.objects_per_type = tuple(objects_per_type)
        self.give = self._rate_matrix(give, q)
        self.get = self._rate_matrix(get, q)
        for i, j in self.pairs:
            if not self.give[i][j] > self.get[i][j] >= 1:
                raise ValueError("exchange rates need give > get >= 1 for every pair")
        self.n_codes = q
        self.glyphs = "abcdefghij"[:q]
        super().__init__(**kw)

    @staticmethod
    def _rate_matrix(r, q):
        if np.isscalar(r):
            return [[int(r)] * q for _ in range(q)]
        return [[int(v) for v in row] for row in r]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in itertools.product(range(self.q), repeat=2) if i != j]

    @property
    def action_names(self) -> tuple[str, ...]:
        return BASE_ACTIONS + tuple(f"trade_{i}_{j}" for i, j in self.pairs)

    def params(self) -> dict:
        return {**super().params(), "q": self.q, "objects_per_type": list(self.objects_per_type),
                "give": self.give, "get": self.get}

    def make_space(self) -> AttributeSpace:
        hi = float(self.objects_per_type[1])
        return AttributeSpace(tuple(Nat(scale=hi) for _ in range(2 * self.q)))

    def populate(self, state: GridState, rng) -> None:
        lo, hi = self.objects_per_type
        for j in range(self.q):
            for _ in range(int(rng.integers(lo, hi + 1))):
                self.place(state, j + 1, rng)
        state.counts = np.zeros(self.q, dtype=np.int64)

    def interact(self, state: GridState, action: int) -> None:
        if action == INTERACT:
            c = self.cell(state)
            if 1 <= c <= self.q:
                x, y = state.agent_pos
                state.grid[y, x] = 0
                state.counts[c - 1] += 1
            return
        i, j = self.pairs[action - INTERACT - 1]
        if state.counts[i] >= self.give[i][j]:
            state.counts[i] -= self.give[i][j]
            state.counts[j] += self.get[i][j]

    def attributes(self, state: GridState) -> tuple:
        remaining = [int(np.count_nonzero(state.grid == j + 1)) for j in range(self.q)]
        return tuple(remaining) + tuple(int(v) for v in state.counts)

    def pick_delta(self, j: int) -> tuple:
        d = [0] * (2 * self.q)
        d[j] = -1
        d[self.q + j] = 1
        return tuple(d)

    def trade_delta(self, i: int, j: int) -> tuple:
        d = [0] * (2 * self.q)
        d[self.q + i] = -self.give[i][j]
        d[self.q + j] = self.get[i][j]
        return tuple(d)

    def delta_forms(self) -> list[tuple]:
        return [self.pick_delta(j) for j in range(self.q)] + \
            [self.trade_delta(i, j) for i, j in self.pairs]

    def oracle_admissible_deltas(self, rho) -> list[tuple]:
        out = [self.pick_delta(j) for j in range(self.q) if rho[j] > 0]
        out += [self.trade_delta(i, j) for i, j in self.pairs
                if rho[self.q + i] >= self.give[i][j]]
        return out

    def goal_coords(self) -> list[int]:
        return list(range(self.q, 2 * self.q))

    def interact_actions(self) -> list[int]:
        return list(range(INTERACT, self.n_actions))

"""Modular Switches: a switch selects which object type may be picked up.

Attributes are ``(remaining_0..remaining_{q-1}, collected_0..collected_{q-1}, switch)``
in N^{2q} x Z/qZ.
"""
from __future__ import annotations

import numpy as np

from ..algebra import AttributeSpace, ModQ, Nat
from .grid import GridEnv, GridState


class ModularSwitches(GridEnv):
    name = "modular"

    def __init__(self, q: int = 3, objects_per_type=(2, 4), **kw):
        if q < 2:
            raise ValueError("q must be >= 2")
        self.q = q
        self.objects_per_type = tuple(objects_per_type)
        self.n_codes = q + 1
        self.glyphs = "".join("abcdefghij"[j] for j in range(q)) + "S"
        super().__init__(**kw)

    @property
    def switch_code(self) -> int:
        return self.q + 1

    def params(self) -> dict:
        return {**super().params(), "q": self.q, "objects_per_type": list(self.objects_per_type)}

    def make_space(self) -> AttributeSpace:
        hi = float(self.objects_per_type[1])
        return AttributeSpace(tuple(Nat(scale=hi) for _ in range(2 * self.q)) + (ModQ(self.q),))

    def populate(self, state: GridState, rng) -> None:
        lo, hi = self.objects_per_type
        for j in range(self.q):
            for _ in range(int(rng.integers(lo, hi + 1))):
                self.place(state, j + 1, rng)
        self.place(state, self.switch_code, rng)
        state.counts = np.zeros(self.q, dtype=np.int64)   # collected per type
        state.switch = 0

    def interact(self, state: GridState, action: int) -> None:
        c = self.cell(state)
        if c == self.switch_code:
            state.switch = (state.switch + 1) % self.q
        elif 1 <= c <= self.q and c - 1 == state.switch:
            x, y = state.agent_pos
            state.grid[y, x] = 0
            state.counts[c - 1] += 1

    def attributes(self, state: GridState) -> tuple:
        remaining = [int(np.count_nonzero(state.grid == j + 1)) for j in range(self.q)]
        return tuple(remaining) + tuple(int(v) for v in state.counts) + (int(state.switch),)

    def pick_delta(self, j: int) -> tuple:
        d = [0] * (2 * self.q + 1)
        d[j] = -1
        d[self.q + j] = 1
        return tuple(d)

    def toggle_delta(self) -> tuple:
        return (0,) * (2 * self.q) + (1,)

    def delta_forms(self) -> list[tuple]:
        return [self.pick_delta(j) for j in range(self.q)] + [self.toggle_delta()]

    def oracle_admissible_deltas(self, rho) -> list[tuple]:
        out = []
        sw = int(rho[-1])
        if rho[sw] > 0:
            out.append(self.pick_delta(sw))
        out.append(self.toggle_delta())
        return out

    def goal_coords(self) -> list[int]:
        """Coordinates an evaluation goal constrains (the collected counts)."""
        return list(range(self.q, 2 * self.q))

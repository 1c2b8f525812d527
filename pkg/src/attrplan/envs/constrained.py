"""Constrained Attributes: mine minerals with single-use hammers inside an annulus.

Attributes are ``(mineral_0..mineral_{q-1}, hammers)`` in R^q x N. Every change
must keep the mineral vector inside the support set
``{v >= 0 : r_in <= |v - center| <= r_out}``; changes that would leave it are
no-ops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..algebra import AttributeSpace, Nat, Real
from .grid import GridEnv, GridState


@dataclass(frozen=True)
class UniformGain:
    """Marks a coordinate whose change is drawn from Uniform[lo, hi]."""
    lo: float
    hi: float

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi


class Constrained(GridEnv):
    name = "constrained"

    def __init__(self, q: int = 2, deposits_per_type: int = 2, dump_amount: float = 1.0,
                 gain_range=(0.5, 1.5), center=(6.0, 1.0), radii=(2.5, 7.0),
                 start_band: float = 0.5, bins: int = 20, **kw):
        if len(center) != q:
            raise ValueError("center must have one coordinate per mineral type")
        if not 0 <= radii[0] < radii[1]:
            raise ValueError("radii must satisfy 0 <= r_in < r_out")
        self.q = q
        self.deposits_per_type = deposits_per_type
        self.dump_amount = float(dump_amount)
        self.gain_range = (float(gain_range[0]), float(gain_range[1]))
        self.center = tuple(float(c) for c in center)
        self.radii = (float(radii[0]), float(radii[1]))
        self.start_band = float(start_band)
        self.bins = bins
        self.n_codes = 2 * q + 1
        self.glyphs = "abcdefghij"[:q] + "ABCDEFGHIJ"[:q] + "H"
        super().__init__(**kw)

    @property
    def store_code(self) -> int:
        return 2 * self.q + 1

    def params(self) -> dict:
        return {**super().params(), "q": self.q, "deposits_per_type": self.deposits_per_type,
                "dump_amount": self.dump_amount, "gain_range": list(self.gain_range),
                "center": list(self.center), "radii": list(self.radii),
                "start_band": self.start_band, "bins": self.bins}

    @property
    def upper(self) -> float:
        return max(self.center) + self.radii[1]

    def make_space(self) -> AttributeSpace:
        return AttributeSpace(tuple(Real(0.0, self.upper, bins=self.bins) for _ in range(self.q))
                              + (Nat(scale=10.0),))

    def in_support(self, minerals) -> bool:
        m = np.asarray(minerals, dtype=float)
        if np.any(m < 0):
            return False
        d = math.dist(m, self.center)
        return self.radii[0] <= d <= self.radii[1]

    def populate(self, state: GridState, rng) -> None:
        for j in range(self.q):
            for _ in range(self.deposits_per_type):
                self.place(state, j + 1, rng)
            self.place(state, self.q + j + 1, rng)
        self.place(state, self.store_code, rng)
        for _ in range(10000):
            m = rng.uniform(0.0, self.upper, self.q)
            m[-1] = rng.uniform(0.0, self.start_band)
            if self.in_support(m):
                break
        else:
            raise RuntimeError("could not sample a start point inside the support")
        state.counts = m
        state.hammers = 0

    def interact(self, state: GridState, action: int) -> None:
        c = self.cell(state)
        if c == self.store_code:
            state.hammers += 1
        elif 1 <= c <= self.q:
            if state.hammers < 1:
                return
            m = state.counts.copy()
            m[c - 1] += state.rng.uniform(*self.gain_range)
            if self.in_support(m):
                state.counts = m
                state.hammers -= 1
        elif self.q < c <= 2 * self.q:
            m = state.counts.copy()
            m[c - self.q - 1] -= self.dump_amount
            if self.in_support(m):
                state.counts = m

    def attributes(self, state: GridState) -> tuple:
        return tuple(float(v) for v in state.counts) + (int(state.hammers),)

    def oracle_admissible_deltas(self, rho) -> list[tuple]:
        """Admissible single-step deltas; mining gains appear as :class:`UniformGain`."""
        m = np.array(rho[:self.q], dtype=float)
        hammers = int(rho[self.q])
        zero = [0.0] * self.q
        out = [tuple(zero) + (1,)]
        for j in range(self.q):
            dumped = m.copy()
            dumped[j] -= self.dump_amount
            if self.in_support(dumped):
                d = list(zero)
                d[j] = -self.dump_amount
                out.append(tuple(d) + (0,))
            if hammers >= 1:
                for c in np.linspace(*self.gain_range, 101):
                    mined = m.copy()
                    mined[j] += c
                    if self.in_support(mined):
                        d = list(zero)
                        d[j] = UniformGain(*self.gain_range)
                        out.append(tuple(d) + (-1,))
                        break
        return out

    @staticmethod
    def matches_oracle(delta, oracle: list[tuple], tol: float = 1e-9) -> bool:
        for o in oracle:
            ok = True
            for a, b in zip(delta, o):
                if isinstance(b, UniformGain):
                    ok = b.contains(a)
                else:
                    ok = abs(a - b) <= tol
                if not ok:
                    break
            if ok:
                return True
        return False

    def delta_forms(self) -> list[tuple]:
        """Representative single-step deltas (mining uses the mean gain)."""
        zero = [0.0] * self.q
        mid = 0.5 * sum(self.gain_range)
        out = [tuple(zero) + (1,)]
        for j in range(self.q):
            d = list(zero)
            d[j] = -self.dump_amount
            out.append(tuple(d) + (0,))
            d = list(zero)
            d[j] = mid
            out.append(tuple(d) + (-1,))
        return out

    def goal_coords(self) -> list[int]:
        return list(range(self.q))

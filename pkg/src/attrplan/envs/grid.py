"""Shared machinery for the Mazebase-style grid worlds."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..algebra import AttributeSpace

UP, DOWN, LEFT, RIGHT, INTERACT = range(5)
MOVES = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0)}
BASE_ACTIONS = ("up", "down", "left", "right", "interact")

EMPTY = 0
BLOCK = -1


@dataclass
class GridState:
    width: int
    height: int
    grid: np.ndarray               # int codes, indexed [y, x]
    agent_pos: tuple[int, int]      # (x, y)
    counts: np.ndarray              # env-specific integer/real inventory vector
    switch: int = 0
    hammers: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    seed: int = 0
    t: int = 0

    def copy(self) -> "GridState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return GridState(self.width, self.height, self.grid.copy(), self.agent_pos,
                         self.counts.copy(), self.switch, self.hammers, rng, self.seed, self.t)

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "grid": self.grid.tolist(),
                "agent_pos": list(self.agent_pos), "counts": self.counts.tolist(),
                "switch": self.switch, "hammers": self.hammers, "seed": self.seed, "t": self.t}

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class GridEnv:
    """Base class. Subclasses define the cell codes, mechanics and attributes.

    ``step`` mutates the state in place and returns it.
    """

    name = "grid"
    n_codes = 0          # non-empty cell codes are 1..n_codes
    glyphs = ""          # one character per code for the ASCII renderer

    def __init__(self, width: int = 7, height: int = 7, n_blocks: int = 0, view_radius: int = 2):
        if not (7 <= width <= 10 and 7 <= height <= 10):
            raise ValueError("maps are between 7 and 10 cells in each dimension")
        self.width, self.height, self.n_blocks = width, height, n_blocks
        self.view_radius = view_radius
        self.space: AttributeSpace = self.make_space()

    # -- to be provided by subclasses
    def make_space(self) -> AttributeSpace:
        raise NotImplementedError

    def populate(self, state: GridState, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def interact(self, state: GridState, action: int) -> None:
        raise NotImplementedError

    def attributes(self, state: GridState) -> tuple:
        raise NotImplementedError

    def oracle_admissible_deltas(self, rho) -> list:
        raise NotImplementedError

    @property
    def action_names(self) -> tuple[str, ...]:
        return BASE_ACTIONS

    @property
    def n_actions(self) -> int:
        return len(self.action_names)

    def interact_actions(self) -> list[int]:
        return [INTERACT]

    # -- shared
    def params(self) -> dict:
        return {"width": self.width, "height": self.height, "n_blocks": self.n_blocks,
                "view_radius": self.view_radius}

    def reset(self, seed: int) -> GridState:
        rng = np.random.default_rng(seed)
        grid = np.zeros((self.height, self.width), dtype=np.int64)
        state = GridState(self.width, self.height, grid, (0, 0), np.zeros(0), rng=rng, seed=seed)
        self._place_blocks(state, rng)
        self.populate(state, rng)
        state.agent_pos = self.free_cell(state, rng)
        return state

    def _place_blocks(self, state: GridState, rng) -> None:
        for _ in range(100):
            state.grid[:] = EMPTY
            if self.n_blocks == 0:
                return
            cells = rng.choice(self.width * self.height, self.n_blocks, replace=False)
            for c in cells:
                state.grid[c // self.width, c % self.width] = BLOCK
            if self._connected(state.grid):
                return
        state.grid[:] = EMPTY

    def _connected(self, grid: np.ndarray) -> bool:
        free = list(zip(*np.nonzero(grid != BLOCK)))
        seen = {free[0]}
        queue = deque([free[0]])
        while queue:
            y, x = queue.popleft()
            for dx, dy in MOVES.values():
                n = (y + dy, x + dx)
                if 0 <= n[0] < self.height and 0 <= n[1] < self.width and n not in seen \
                        and grid[n] != BLOCK:
                    seen.add(n)
                    queue.append(n)
        return len(seen) == len(free)

    def free_cell(self, state: GridState, rng) -> tuple[int, int]:
        ys, xs = np.nonzero(state.grid == EMPTY)
        i = int(rng.integers(len(xs)))
        return int(xs[i]), int(ys[i])

    def place(self, state: GridState, code: int, rng) -> None:
        x, y = self.free_cell(state, rng)
        state.grid[y, x] = code

    def step(self, state: GridState, action: int) -> GridState:
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} outside the action set")
        state.t += 1
        if action in MOVES:
            dx, dy = MOVES[action]
            x, y = state.agent_pos[0] + dx, state.agent_pos[1] + dy
            if 0 <= x < self.width and 0 <= y < self.height and state.grid[y, x] != BLOCK:
                state.agent_pos = (x, y)
        else:
            self.interact(state, action)
        return state

    def cell(self, state: GridState) -> int:
        x, y = state.agent_pos
        return int(state.grid[y, x])

    @property
    def feature_size(self) -> int:
        side = 2 * self.view_radius + 1
        return (self.n_codes + 1) * side * side + 2 + 3 * self.n_codes

    def features(self, state: GridState) -> np.ndarray:
        """Egocentric one-hot view (walls + each cell code), scaled position, and
        for each cell code the offset to its nearest cell plus a presence flag."""
        r = self.view_radius
        side = 2 * r + 1
        C = self.n_codes + 1
        view = np.zeros((C, side, side))
        view[0] = 1.0                       # outside the map reads as wall
        x, y = state.agent_pos
        # map rows/cols visible from (x, y), and where they land in the view
        mx0, mx1 = max(0, x - r), min(self.width, x + r + 1)
        my0, my1 = max(0, y - r), min(self.height, y + r + 1)
        sub = state.grid[my0:my1, mx0:mx1]
        win = view[:, my0 - y + r:my1 - y + r, mx0 - x + r:mx1 - x + r]
        win[0] = sub == BLOCK
        for c in range(1, C):
            win[c] = sub == c
        sub = state.grid
        sx, sy = self.width - 1, self.height - 1
        near = np.zeros((self.n_codes, 3))
        for c in range(1, C):
            ys, xs = np.nonzero(sub == c)
            if len(xs):
                i = int(np.argmin(np.abs(xs - x) + np.abs(ys - y)))
                near[c - 1] = ((xs[i] - x) / sx, (ys[i] - y) / sy, 1.0)
        pos = np.array([x / sx, y / sy])
        return np.concatenate([view.reshape(-1), pos, near.reshape(-1)])

    def render(self, state: GridState) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == state.agent_pos:
                    row.append("@")
                    continue
                c = int(state.grid[y, x])
                row.append("#" if c == BLOCK else "." if c == EMPTY else self.glyphs[c - 1])
            rows.append("".join(row))
        rows.append(f"attributes: {self.attributes(state)}")
        return "\n".join(rows)

    def shortest_path_actions(self, state: GridState, targets: set[tuple[int, int]]):
        """BFS over free cells; first move towards the nearest target cell, or
        None when unreachable. Returns INTERACT-free move lists."""
        start = state.agent_pos
        if start in targets:
            return []
        prev = {start: None}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for a, (dx, dy) in MOVES.items():
                n = (cur[0] + dx, cur[1] + dy)
                if n in prev or not (0 <= n[0] < self.width and 0 <= n[1] < self.height):
                    continue
                if state.grid[n[1], n[0]] == BLOCK:
                    continue
                prev[n] = (cur, a)
                if n in targets:
                    path = []
                    while prev[n] is not None:
                        n, a = prev[n]
                        path.append(a)
                    return path[::-1]
                queue.append(n)
        return None

"""Baselines: the unstructured attribute planner and curriculum-trained RL."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .agents import PolicyNet, make_reinforce
from .algebra import compose, diff, quantize
from .edge import EPS, NEGATIVE, POSITIVE
from .envs import Constrained
from .planner import DEPTH_LIMIT, MAX_NODES, Goal, Plan, dijkstra
from .tasks import one_step_goal, sample_constrained_goal, sample_discrete_goal


class TransitionTable:
    """Empirical success counts for (quantized rho_i, quantized rho_j) pairs."""

    def __init__(self, space):
        self.space = space
        self.pairs: dict[tuple, list[int]] = {}
        self.succ: dict[tuple, set] = {}
        self.reps: dict[tuple, tuple] = {}

    def table_record(self, rho_i, rho_j, success: bool) -> None:
        ki, kj = quantize(self.space, rho_i), quantize(self.space, rho_j)
        self.reps.setdefault(ki, tuple(rho_i))
        self.reps.setdefault(kj, tuple(rho_j))
        entry = self.pairs.setdefault((ki, kj), [0, 0])
        entry[0] += int(bool(success))
        entry[1] += 1
        self.succ.setdefault(ki, set()).add(kj)

    def probability(self, rho_i, rho_j) -> float:
        """success / attempts, 0 for a pair never attempted."""
        key = (quantize(self.space, rho_i), quantize(self.space, rho_j))
        s, n = self.pairs.get(key, (0, 0))
        return s / n if n else 0.0

    def to_dict(self) -> dict:
        return {"pairs": [[list(ki), list(kj), s, n] for (ki, kj), (s, n) in self.pairs.items()],
                "reps": [[list(k), list(v)] for k, v in self.reps.items()]}

    @classmethod
    def from_dict(cls, space, d: dict) -> "TransitionTable":
        t = cls(space)
        for ki, kj, s, n in d["pairs"]:
            ki, kj = tuple(ki), tuple(kj)
            t.pairs[(ki, kj)] = [s, n]
            t.succ.setdefault(ki, set()).add(kj)
        t.reps = {tuple(k): tuple(v) for k, v in d["reps"]}
        return t


class TableEdge:
    """Edge-model interface backed by a transition table (no generalization)."""

    def __init__(self, space, table: TransitionTable | None = None):
        self.space = space
        self.table = table or TransitionTable(space)
        self.pushed = {POSITIVE: 0, NEGATIVE: 0}

    def predict(self, rho, delta) -> float:
        target = compose(self.space, rho, delta)
        p = 0.0 if target is None else self.table.probability(rho, target)
        return min(max(p, EPS), 1.0 - EPS)

    def predict_many(self, rho, deltas) -> np.ndarray:
        return np.array([self.predict(rho, d) for d in deltas])

    def push_label(self, sample) -> None:
        target = compose(self.space, sample.rho, sample.delta)
        if target is not None:
            self.table.table_record(sample.rho, target, sample.label == POSITIVE)
        self.pushed[sample.label] += 1


def unstructured_plan(table: TransitionTable, start, goal: Goal, max_nodes: int = MAX_NODES,
                      depth_limit: int = DEPTH_LIMIT):
    """Dijkstra restricted to observed pairs, cost -log(success / attempts)."""
    space = table.space

    def successors(node):
        k = quantize(space, node)
        out = []
        for nk in sorted(table.succ.get(k, ())):
            s, n = table.pairs[(k, nk)]
            if s == 0:
                continue
            p = min(s / n, 1.0 - EPS)
            nxt = table.reps[nk]
            out.append((diff(space, nxt, node), nxt, -math.log(p)))
        return out

    return dijkstra(tuple(start), lambda n: goal.matches(space, n), successors,
                    key=lambda n: quantize(space, n), max_nodes=max_nodes,
                    depth_limit=depth_limit)


# -- curriculum RL

@dataclass
class CurriculumSchedule:
    max_stage: int
    promote_threshold: float = 0.7
    window: int = 200
    stage: int = 1
    history: deque = field(default_factory=deque)
    promotions: list = field(default_factory=list)

    def record(self, success: bool, episode: int = 0) -> bool:
        """Add an outcome; promote when the rolling success rate clears the bar."""
        self.history.append(bool(success))
        if len(self.history) > self.window:
            self.history.popleft()
        if self.stage < self.max_stage and len(self.history) == self.window \
                and sum(self.history) / self.window >= self.promote_threshold:
            self.stage += 1
            self.history.clear()
            self.promotions.append(episode)
            return True
        return False


def goal_inputs(env, rho, goal: Goal):
    """Masked goal offset and mask for goal-conditioned policies."""
    filled = tuple(v if g is None else g for v, g in zip(rho, goal.values))
    offset = diff(env.space, filled, rho)
    mask = [0.0 if g is None else 1.0 for g in goal.values]
    return offset, mask


class GoalPolicy:
    """Goal-conditioned policy wrapper: state, attributes, goal offset and mask."""

    def __init__(self, env, hidden: int = 128, lr: float = 1e-3, rng=None):
        self.net = PolicyNet(env, conditioned=True, goal_mask=True, hidden=hidden, lr=lr, rng=rng)
        self.mlp = self.net.mlp

    def inputs(self, env, state, rho, goal: Goal) -> np.ndarray:
        offset, mask = goal_inputs(env, rho, goal)
        return self.net.inputs(env, state, rho, offset, mask)

    def act(self, env, state, goal: Goal, rng) -> int:
        return self.net.sample(self.inputs(env, state, env.attributes(state), goal), rng)


def stage_goal(env, rho0, stage: int, rng):
    if isinstance(env, Constrained):
        if stage == 1:
            return one_step_goal(env, rho0, rng)
        return sample_constrained_goal(env, rho0, rng, float(stage - 1), float(stage))
    goal, _ = sample_discrete_goal(env, rho0, rng, stage, stage)
    return goal


def rl_episode(env, state, policy: GoalPolicy, goal: Goal, horizon: int, r0: float, rng):
    xs, acts, rews = [], [], []
    for _ in range(horizon):
        rho = env.attributes(state)
        x = policy.inputs(env, state, rho, goal)
        a = policy.net.sample(x, rng)
        env.step(state, a)
        xs.append(x)
        acts.append(a)
        rews.append(0.0)
        if goal.matches(env.space, env.attributes(state)):
            rews[-1] = r0
            return xs, acts, rews, True
    return xs, acts, rews, False


def curriculum_rl_train(env, schedule: CurriculumSchedule, cfg, metrics_sink=None):
    """Train a goal-conditioned policy on tasks of growing start-to-goal distance."""
    rng = np.random.default_rng([cfg.seed, 3])
    policy = GoalPolicy(env, hidden=cfg.hidden, lr=cfg.lr, rng=rng)
    pg = make_reinforce(cfg, policy.net, [cfg.seed, 6])
    steps = episodes = 0
    window = [0, 0]
    next_log = cfg.log_interval
    while steps < cfg.rl_steps:
        state = env.reset(int(rng.integers(2 ** 31)))
        rho0 = env.attributes(state)
        goal = stage_goal(env, rho0, schedule.stage, rng)
        horizon = min(cfg.eval_budget, cfg.m_max * schedule.stage)
        xs, acts, rews, ok = rl_episode(env, state, policy, goal, horizon, cfg.r0, rng)
        pg.add(xs, acts, rews)
        steps += len(acts)
        window[0] += ok
        window[1] += 1
        episodes += 1
        schedule.record(ok, episodes)
        while steps >= next_log:
            _log(metrics_sink, steps, window)
            next_log += cfg.log_interval
    if steps and steps + cfg.log_interval != next_log:
        _log(metrics_sink, steps, window)
    return policy


def _log(sink, steps, window):
    """Rows share the agents' metrics schema; label columns are 0 and the
    success column is the episode success rate since the previous row."""
    if sink is not None:
        won, tried = window
        sink({"env_steps": steps, "pos_labels": 0, "neg_labels": 0, "expl_transitions_found": 0,
              "exec_success_rate": round(won / tried, 6) if tried else 0.0})
    window[:] = [0, 0]

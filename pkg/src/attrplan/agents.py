"""Exploration/execution policies, their rewards and episodes, and the training loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import compose, diff, encode, quantize, quantize_delta
from .edge import NEGATIVE, POSITIVE, EdgeDetector, TransitionSample
from .memory import MarginalCounts, Memory
from .nn import LINEAR, SOFTMAX, Adam, Mlp, entropy_bonus, mse_loss, softmax_xent_loss
from .proposals import propose

NOVELTY_CAP = 1.0
METRIC_COLUMNS = ("env_steps", "pos_labels", "neg_labels", "expl_transitions_found",
                  "exec_success_rate")


# -- rewards

def novelty_h(counts: MarginalCounts, rho1, rho2, cap: float = NOVELTY_CAP) -> float:
    """min_k 1[rho1[k] != rho2[k]] * count_k(rho1[k])^-1/2 over quantized coordinates.

    An unseen value (count 0) contributes ``cap`` instead of infinity.
    """
    q1 = quantize(counts.space, rho1)
    q2 = quantize(counts.space, rho2)
    terms = []
    for k, (a, b) in enumerate(zip(q1, q2)):
        if a == b:
            terms.append(0.0)
        else:
            n = counts.marginal(k, a)
            terms.append(cap if n == 0 else n ** -0.5)
    return min(terms)


def exploration_reward(ed, counts: MarginalCounts, rho_i, rho_end, delta: Optional[tuple],
                       alpha1: float, alpha2: float) -> float:
    """-alpha1 log ED(rho_i, delta) + alpha2 h(rho_end, rho_i) when a transition
    was achieved; 0 otherwise."""
    if delta is None:
        return 0.0
    r = 0.0
    if alpha1:
        r -= alpha1 * math.log(ed.predict(rho_i, delta))
    if alpha2:
        r += alpha2 * novelty_h(counts, rho_end, rho_i)
    return r


# -- policies

class PolicyNet:
    """Softmax policy over the environment's actions.

    Inputs are the egocentric state features followed by the attribute
    encoding and, for goal-conditioned policies, a target encoding.
    """

    def __init__(self, env, conditioned: bool = False, goal_mask: bool = False,
                 hidden: int = 128, lr: float = 1e-3, rng: np.random.Generator | None = None):
        self.conditioned = conditioned
        self.goal_mask = goal_mask
        k = env.space.encoding_size
        n_in = env.feature_size + k + (k if conditioned else 0) + (len(env.space) if goal_mask else 0)
        self.mlp = Mlp(n_in, env.n_actions, SOFTMAX, hidden, rng=rng)
        self.opt = Adam(lr=lr)

    def inputs(self, env, state, rho, target=None, mask=None) -> np.ndarray:
        parts = [env.features(state), encode(env.space, rho)]
        if self.conditioned:
            parts.append(encode(env.space, target))
        if self.goal_mask:
            parts.append(np.asarray(mask, dtype=float))
        return np.concatenate(parts)

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> int:
        p = self.mlp.forward(x)
        c = np.cumsum(p)
        return min(int(np.searchsorted(c, rng.random() * c[-1], side="right")), len(p) - 1)

    def act(self, env, state, rho, delta, rng) -> int:
        """Controller interface used by the planner."""
        return self.sample(self.inputs(env, state, rho, delta), rng)


@dataclass
class Reinforce:
    """Episodic score-function updates with a running-mean baseline.

    Episodes are buffered until ``batch_steps`` steps are available, then
    a single optimizer step is taken on the whole batch. Episodes may carry
    a ``key`` (the execution policy passes its quantized target delta); each
    key keeps its own running mean, so a hard target is not judged against
    the returns of an easy one.

    With ``value`` set (an Mlp with a linear head), the baseline is instead
    a learned estimate of the return from each state, fitted by squared
    error on the batch returns before the policy step.
    """
    policy: PolicyNet
    batch_steps: int = 5000
    discount: float = 0.95
    entropy_coef: float = 0.01
    baseline_momentum: float = 0.9
    max_grad_norm: float = 10.0
    normalize: bool = True
    pooled: float = 0.0
    pooled_baseline: float = 0.0
    baselines: dict = field(default_factory=dict)
    value: Optional[Mlp] = None
    value_opt: Optional[Adam] = None
    updates: int = 0
    _xs: list = field(default_factory=list)
    _acts: list = field(default_factory=list)
    _rets: list = field(default_factory=list)
    _keys: list = field(default_factory=list)

    @property
    def baseline(self) -> float:
        return self.baselines.get(None, 0.0)

    def returns(self, rewards) -> np.ndarray:
        g = 0.0
        out = np.empty(len(rewards))
        for t in range(len(rewards) - 1, -1, -1):
            g = rewards[t] + self.discount * g
            out[t] = g
        return out

    def add(self, xs, actions, rewards, key=None) -> None:
        if not xs:
            return
        self._xs.extend(xs)
        self._acts.extend(actions)
        self._rets.extend(self.returns(rewards))
        self._keys.extend([key] * len(xs))
        if len(self._xs) >= self.batch_steps:
            self.update()

    def update(self) -> float:
        x = np.stack(self._xs)
        a = np.array(self._acts)
        g = np.array(self._rets)
        if self.value is not None:
            vz, vcache = self.value.logits(x, cache=True)
            _, vgrad = mse_loss(vz, g[:, None])
            b = vz[:, 0]
            self.value_opt.step(self.value, self.value.backward(vcache, vgrad),
                                max_norm=self.max_grad_norm)
        else:
            b = np.array([self.baselines.get(k, 0.0) for k in self._keys])
            b = (1.0 - self.pooled) * b + self.pooled * self.pooled_baseline
        adv = g - b
        if self.normalize:
            adv = adv / (adv.std() + 1e-8)
        m = self.baseline_momentum
        groups: dict = {}
        for k, r in zip(self._keys, g):
            groups.setdefault(k, []).append(r)
        for k, rs in groups.items():
            self.baselines[k] = m * self.baselines.get(k, 0.0) + (1.0 - m) * float(np.mean(rs))
        self.pooled_baseline = m * self.pooled_baseline + (1.0 - m) * float(g.mean())
        mlp = self.policy.mlp
        z, cache = mlp.logits(x, cache=True)
        loss, grad = softmax_xent_loss(z, a, adv)
        if self.entropy_coef:
            _, gh = entropy_bonus(z)
            grad = grad - self.entropy_coef * gh
        self.policy.opt.step(mlp, mlp.backward(cache, grad), max_norm=self.max_grad_norm)
        self._xs, self._acts, self._rets, self._keys = [], [], [], []
        self.updates += 1
        return loss


def make_reinforce(cfg, policy: PolicyNet, seed) -> Reinforce:
    pg = Reinforce(policy, batch_steps=cfg.batch_steps, discount=cfg.discount,
                   entropy_coef=cfg.entropy_coef, pooled=cfg.baseline_pooling)
    if cfg.baseline == "value":
        pg.value = Mlp(policy.mlp.n_in, 1, LINEAR, cfg.hidden, rng=np.random.default_rng(seed))
        pg.value_opt = Adam(lr=cfg.lr)
    elif cfg.baseline != "mean":
        raise ValueError(f"unknown baseline {cfg.baseline!r}")
    return pg


# -- episodes

@dataclass
class EpisodeResult:
    xs: list
    actions: list
    rewards: list
    rho_start: tuple
    rho_end: tuple
    delta: Optional[tuple] = None
    success: bool = False
    sample: Optional[TransitionSample] = None

    @property
    def steps(self) -> int:
        return len(self.actions)


def explore_episode(env, state, policy: PolicyNet, ed, memory: Memory, cfg,
                    rng: np.random.Generator) -> EpisodeResult:
    """Act until the attributes change or ``m_max`` steps pass.

    A realized transition is rewarded, pushed to the edge model as a positive
    sample, stored in the buffer, and counted in the exploration marginals.
    """
    space = env.space
    rho = env.attributes(state)
    res = EpisodeResult([], [], [], rho, rho)
    for _ in range(cfg.m_max):
        x = policy.inputs(env, state, rho)
        a = policy.sample(x, rng)
        env.step(state, a)
        res.xs.append(x)
        res.actions.append(a)
        res.rewards.append(0.0)
        new = env.attributes(state)
        if new != rho:
            d = diff(space, new, rho)
            res.rho_end, res.delta = new, d
            res.rewards[-1] = exploration_reward(ed, memory.expl, rho, new, d,
                                                 cfg.alpha1, cfg.alpha2)
            res.sample = TransitionSample(rho, d, POSITIVE)
            ed.push_label(res.sample)
            memory.buffer.insert_transition(d)
            memory.expl.record_visit(new)
            res.success = True
            break
    return res


def execute_episode(env, state, policy: PolicyNet, ed, memory: Memory, target_delta, cfg,
                    rng: np.random.Generator) -> EpisodeResult:
    """Try to realize ``target_delta`` within ``m_exec_max`` steps.

    Success earns ``r0`` and counts in the execution marginals. A timeout or a
    different attribute change pushes (rho, delta) to the edge model as a
    negative sample.
    """
    space = env.space
    rho = env.attributes(state)
    if len(target_delta) != len(space):
        raise ValueError("target delta arity does not match the attribute space")
    target = compose(space, rho, target_delta)
    qtarget = quantize(space, target) if target is not None else None
    res = EpisodeResult([], [], [], rho, rho, delta=tuple(target_delta))
    for _ in range(cfg.m_exec_max):
        x = policy.inputs(env, state, rho, target_delta)
        a = policy.sample(x, rng)
        env.step(state, a)
        res.xs.append(x)
        res.actions.append(a)
        res.rewards.append(0.0)
        new = env.attributes(state)
        if new != rho:
            res.rho_end = new
            if qtarget is not None and quantize(space, new) == qtarget:
                res.rewards[-1] = cfg.r0
                res.success = True
                memory.exec.record_visit(new)
            break
    if not res.success:
        res.sample = TransitionSample(rho, tuple(target_delta), NEGATIVE)
        ed.push_label(res.sample)
    return res


# -- training

@dataclass
class Agent:
    """Everything a structured (or unstructured) training run produces."""
    env: object
    ed: object
    explorer: PolicyNet
    executor: PolicyNet
    memory: Memory
    metrics: list = field(default_factory=list)
    env_steps: int = 0
    expl_steps: int = 0
    exec_steps: int = 0


def build_agent(cfg, env, method: str = "structured") -> Agent:
    from .baselines import TableEdge

    rng = np.random.default_rng([cfg.seed, 1])
    if method == "structured":
        ed = EdgeDetector(env.space, hidden=cfg.hidden, capacity=cfg.ed_capacity,
                          lr=cfg.ed_lr, rng=rng)
    elif method == "unstructured":
        ed = TableEdge(env.space)
    else:
        raise ValueError(f"unknown method {method!r}")
    explorer = PolicyNet(env, hidden=cfg.hidden, lr=cfg.lr, rng=rng)
    executor = PolicyNet(env, conditioned=True, hidden=cfg.hidden, lr=cfg.lr, rng=rng)
    return Agent(env, ed, explorer, executor, Memory(env.space))


class Trainer:
    """Alternates exploration and execution games until both step budgets are spent."""

    def __init__(self, cfg, env, method: str = "structured", agent: Agent | None = None,
                 metrics_sink=None, trace_sink=None):
        self.cfg = cfg
        self.env = env
        self.agent = agent or build_agent(cfg, env, method)
        self.rng = np.random.default_rng([cfg.seed, 2])
        self.expl_pg = make_reinforce(cfg, self.agent.explorer, [cfg.seed, 4])
        self.exec_pg = make_reinforce(cfg, self.agent.executor, [cfg.seed, 5])
        self.metrics_sink = metrics_sink
        self.trace_sink = trace_sink
        self.found: set = set()
        self._next_log = cfg.log_interval
        self._ed_debt = 0
        self._exec_window = [0, 0]

    # bookkeeping
    def _after_episode(self, ep: EpisodeResult, explore: bool) -> None:
        a = self.agent
        a.env_steps += ep.steps
        if explore:
            a.expl_steps += ep.steps
            if ep.success:
                space = self.env.space
                self.found.add((quantize(space, ep.rho_start), quantize(space, ep.rho_end)))
        else:
            a.exec_steps += ep.steps
            self._exec_window[0] += int(ep.success)
            self._exec_window[1] += 1
        self._ed_debt += ep.steps
        while self._ed_debt >= self.cfg.ed_train_interval:
            self._ed_debt -= self.cfg.ed_train_interval
            if hasattr(a.ed, "train_batch"):
                a.ed.train_batch(self.cfg.ed_batch, self.rng)
        while a.env_steps >= self._next_log:
            self.log()
            self._next_log += self.cfg.log_interval

    def log(self) -> dict:
        a = self.agent
        won, tried = self._exec_window
        row = {"env_steps": a.env_steps, "pos_labels": a.ed.pushed[POSITIVE],
               "neg_labels": a.ed.pushed[NEGATIVE], "expl_transitions_found": len(self.found),
               "exec_success_rate": round(won / tried, 6) if tried else 0.0}
        self._exec_window = [0, 0]
        a.metrics.append(row)
        if self.metrics_sink is not None:
            self.metrics_sink(row)
        return row

    def _trace(self, kind: str, seed: int, episodes: list) -> None:
        if self.trace_sink is None:
            return
        self.trace_sink({"game": kind, "seed": seed,
                         "episodes": [{"rho_start": list(e.rho_start), "rho_end": list(e.rho_end),
                                       "delta": None if e.delta is None else list(e.delta),
                                       "success": e.success, "actions": e.actions}
                                      for e in episodes]})

    # games
    def explore_game(self) -> None:
        cfg, a, env = self.cfg, self.agent, self.env
        seed = int(self.rng.integers(2 ** 31))
        state = env.reset(seed)
        a.memory.expl.record_visit(env.attributes(state))
        fails = steps = 0
        episodes = []
        while fails < cfg.restart_after and steps < cfg.max_game_steps \
                and a.expl_steps < cfg.explore_steps:
            ep = explore_episode(env, state, a.explorer, a.ed, a.memory, cfg, self.rng)
            episodes.append(ep)
            steps += ep.steps
            fails = 0 if ep.success else fails + 1
            if not cfg.continuous_rewards:
                self.expl_pg.add(ep.xs, ep.actions, ep.rewards)
            self._after_episode(ep, True)
        if cfg.continuous_rewards and episodes:
            self.expl_pg.add([x for e in episodes for x in e.xs],
                             [u for e in episodes for u in e.actions],
                             [r for e in episodes for r in e.rewards])
        self._trace("explore", seed, episodes)

    def execute_game(self) -> None:
        cfg, a, env = self.cfg, self.agent, self.env
        seed = int(self.rng.integers(2 ** 31))
        state = env.reset(seed)
        fails = steps = 0
        episodes = []
        while fails < cfg.restart_after and steps < cfg.max_game_steps \
                and a.exec_steps < cfg.execute_steps:
            rho = env.attributes(state)
            target = propose(a.memory, a.ed, rho, cfg.s0, cfg.p0, self.rng)
            if target is None:
                break
            ep = execute_episode(env, state, a.executor, a.ed, a.memory, target, cfg, self.rng)
            episodes.append(ep)
            steps += ep.steps
            fails = 0 if ep.success else fails + 1
            self.exec_pg.add(ep.xs, ep.actions, ep.rewards,
                             key=quantize_delta(env.space, target))
            self._after_episode(ep, False)
        self._trace("execute", seed, episodes)

    def run(self) -> Agent:
        """Alternate games, always running the phase that has spent the smaller
        share of its step budget, so both phases progress together."""
        cfg, a = self.cfg, self.agent
        while a.expl_steps < cfg.explore_steps or a.exec_steps < cfg.execute_steps:
            explore_share = a.expl_steps / cfg.explore_steps if cfg.explore_steps else 1.0
            exec_share = a.exec_steps / cfg.execute_steps if cfg.execute_steps else 1.0
            if explore_share <= exec_share:
                self.explore_game()
            else:
                before = a.exec_steps
                self.execute_game()
                if a.exec_steps == before:
                    if a.expl_steps >= cfg.explore_steps:
                        break       # nothing to execute and nothing left to explore
                    self.explore_game()
        if a.env_steps and (not a.metrics or a.metrics[-1]["env_steps"] != a.env_steps):
            self.log()
        return a


def train(cfg, env=None, method: str = "structured", metrics_sink=None, trace_sink=None) -> Agent:
    from .config import make_env_from_config

    env = env or make_env_from_config(cfg)
    return Trainer(cfg, env, method, metrics_sink=metrics_sink, trace_sink=trace_sink).run()

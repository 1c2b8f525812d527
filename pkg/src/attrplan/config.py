"""Run configuration: defaults per environment and JSON (de)serialization."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .algebra import AttributeSpace
from .envs import make_env

SCHEMA_VERSION = 1

# Exploration reward weights per game.
ALPHAS = {"modular": (1.0, 0.0), "exchangeable": (0.0, 1.0), "constrained": (0.0, 1.0)}


@dataclass
class RunConfig:
    env: str = "modular"
    env_params: dict = field(default_factory=dict)
    seed: int = 0
    # exploration reward
    alpha1: float = 1.0
    alpha2: float = 0.0
    continuous_rewards: bool = False
    # episodes
    m_max: int = 15
    m_exec_max: int = 15
    r0: float = 1.0
    restart_after: int = 3
    max_game_steps: int = 300
    # proposals
    p0: float = 0.1
    s0: float = 0.5
    # budgets
    explore_steps: int = 2_000_000
    execute_steps: int = 2_000_000
    rl_steps: int = 2_000_000
    # learning
    hidden: int = 128
    batch_steps: int = 5000
    lr: float = 3e-3
    discount: float = 0.95
    entropy_coef: float = 0.01
    baseline: str = "mean"
    baseline_pooling: float = 0.0
    ed_lr: float = 1e-3
    ed_batch: int = 256
    ed_train_interval: int = 100
    ed_capacity: int = 50_000
    log_interval: int = 50_000
    # curriculum baseline
    max_stage: int = 15
    promote_threshold: float = 0.7
    promote_window: int = 200
    # evaluation and planning
    eval_tasks: int = 50
    eval_budget: int = 150
    eval_min_dist: float = 5
    eval_max_dist: float = 15
    replan: bool = True
    max_nodes: int = 20_000
    depth_limit: int = 40
    space: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema version {version}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def default_config(env: str = "modular", **overrides) -> RunConfig:
    a1, a2 = ALPHAS[env]
    cfg = RunConfig(env=env, alpha1=a1, alpha2=a2, continuous_rewards=(env == "exchangeable"))
    if env == "modular":
        cfg.env_params = {"q": 3}
        cfg.eval_min_dist, cfg.eval_max_dist, cfg.max_stage = 5, 15, 15
    elif env == "exchangeable":
        cfg.env_params = {"q": 3}
        cfg.eval_min_dist, cfg.eval_max_dist, cfg.max_stage = 5, 30, 30
    elif env == "constrained":
        cfg.env_params = {"q": 2}
        cfg.eval_min_dist, cfg.eval_max_dist, cfg.max_stage = 2.0, 8.0, 9
    else:
        raise ValueError(f"unknown environment {env!r}")
    cfg = cfg.replace(**overrides)
    cfg.space = make_env_from_config(cfg).space.to_list()
    return cfg


def make_env_from_config(cfg: RunConfig):
    env = make_env(cfg.env, **cfg.env_params)
    if cfg.space and AttributeSpace.from_list(cfg.space) != env.space:
        raise ValueError("config attribute space does not match the environment's")
    return env


def load_config(path) -> RunConfig:
    with open(path) as f:
        return RunConfig.from_dict(json.load(f))


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as f:
        f.write(cfg.to_json() + "\n")

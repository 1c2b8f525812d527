"""Evaluation protocol, metric/trace sinks and checkpoint persistence."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .agents import METRIC_COLUMNS, Agent, PolicyNet
from .baselines import GoalPolicy, TableEdge, TransitionTable, unstructured_plan
from .edge import EdgeDetector
from .memory import Memory
from .nn import checkpoint_arrays, from_checkpoint_arrays
from .planner import plan, replan_on_failure

METHOD_ORDER = ("rl", "unstructured", "structured")
CHECKPOINT_FORMAT = 1


@dataclass
class EvalReport:
    method: str
    successes: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def tasks(self) -> int:
        return len(self.successes)

    @property
    def success_rate(self) -> float:
        return sum(self.successes) / len(self.successes) if self.successes else 0.0

    @property
    def mean_steps(self) -> float:
        return float(np.mean(self.steps)) if self.steps else 0.0

    def row(self) -> dict:
        return {"method": self.method, "tasks": self.tasks,
                "success_rate": round(self.success_rate, 6),
                "mean_steps": round(self.mean_steps, 3)}


def evaluate(method: str, model, env, tasks, cfg, seed: int = 0, controller=None) -> EvalReport:
    """Run every (map_seed, goal) task on a fresh map under ``cfg.eval_budget`` steps.

    ``model`` is an :class:`Agent` for the planning methods and a
    :class:`GoalPolicy` for ``rl``. ``controller`` overrides the low-level
    policy used to execute planned deltas.
    """
    report = EvalReport(method)
    for i, (map_seed, goal) in enumerate(tasks):
        rng = np.random.default_rng([seed, i, 11])
        state = env.reset(map_seed)
        if method == "rl":
            ok, used = _run_goal_policy(env, state, model, goal, cfg.eval_budget, rng)
        else:
            ok, used = run_planning_task(method, model, env, state, goal, cfg, rng, controller)
        report.successes.append(bool(ok))
        report.steps.append(used)
    return report


def run_planning_task(method, agent, env, state, goal, cfg, rng, controller=None):
    if method == "structured":
        def planner_fn(rho):
            return plan(agent.memory.buffer, agent.ed, rho, goal, cfg.max_nodes, cfg.depth_limit)
    elif method == "unstructured":
        def planner_fn(rho):
            return unstructured_plan(agent.ed.table, rho, goal, cfg.max_nodes, cfg.depth_limit)
    else:
        raise ValueError(f"unknown method {method!r}")
    ctrl = controller or agent.executor
    return replan_on_failure(env, state, planner_fn, ctrl, goal, cfg.eval_budget,
                             cfg.m_exec_max, rng, replan=cfg.replan)


def _run_goal_policy(env, state, policy: GoalPolicy, goal, budget, rng):
    if goal.matches(env.space, env.attributes(state)):
        return True, 0
    for t in range(budget):
        env.step(state, policy.act(env, state, goal, rng))
        if goal.matches(env.space, env.attributes(state)):
            return True, t + 1
    return False, budget


def order_reports(reports: list[EvalReport]) -> list[EvalReport]:
    return sorted(reports, key=lambda r: METHOD_ORDER.index(r.method))


def write_report(reports: list[EvalReport], path) -> None:
    rows = [r.row() for r in order_reports(reports)]
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["method", "tasks", "success_rate", "mean_steps"])
        w.writeheader()
        w.writerows(rows)


def write_task_report(reports: list[EvalReport], tasks, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "task", "map_seed", "goal", "success", "steps"])
        for r in order_reports(reports):
            for i, ((seed, goal), ok, n) in enumerate(zip(tasks, r.successes, r.steps)):
                w.writerow([r.method, i, seed, json.dumps(goal.to_list()), int(ok), n])


class CsvSink:
    """Appends one metrics row per call; the header is written on open."""

    def __init__(self, path, columns=METRIC_COLUMNS):
        self.columns = list(columns)
        self.f = open(path, "w", newline="")
        self.w = csv.DictWriter(self.f, fieldnames=self.columns)
        self.w.writeheader()
        self.f.flush()

    def __call__(self, row: dict) -> None:
        self.w.writerow({k: row[k] for k in self.columns})
        self.f.flush()

    def close(self) -> None:
        self.f.close()


class JsonlSink:
    def __init__(self, path):
        self.f = open(path, "w")

    def __call__(self, record: dict) -> None:
        self.f.write(json.dumps(record, sort_keys=True) + "\n")

    def close(self) -> None:
        self.f.close()


# -- checkpoints

def _json_array(obj) -> np.ndarray:
    return np.array(json.dumps(obj, sort_keys=True))


def save_agent(agent: Agent, path, cfg=None) -> None:
    arrays = {"format": np.array(CHECKPOINT_FORMAT)}
    if cfg is not None:
        arrays["config"] = np.array(cfg.to_json())
    arrays.update(checkpoint_arrays(agent.explorer.mlp, "explorer/"))
    arrays.update(checkpoint_arrays(agent.executor.mlp, "executor/"))
    arrays["memory"] = _json_array(agent.memory.to_dict())
    arrays["metrics"] = _json_array(agent.metrics)
    arrays["steps"] = np.array([agent.env_steps, agent.expl_steps, agent.exec_steps])
    if isinstance(agent.ed, TableEdge):
        arrays["method"] = np.array("unstructured")
        arrays["table"] = _json_array(agent.ed.table.to_dict())
        arrays["pushed"] = np.array([agent.ed.pushed[0], agent.ed.pushed[1]])
    else:
        arrays["method"] = np.array("structured")
        arrays.update(checkpoint_arrays(agent.ed.mlp, "ed/"))
        arrays["pushed"] = np.array([agent.ed.pushed[0], agent.ed.pushed[1]])
    np.savez(path, **arrays)


def load_agent(path, env, cfg) -> Agent:
    with np.load(path) as z:
        a = dict(z)
    if int(a["format"]) != CHECKPOINT_FORMAT:
        raise ValueError("unsupported checkpoint format")
    space = env.space
    explorer = PolicyNet(env, hidden=cfg.hidden, lr=cfg.lr)
    explorer.mlp = from_checkpoint_arrays(a, "explorer/")
    executor = PolicyNet(env, conditioned=True, hidden=cfg.hidden, lr=cfg.lr)
    executor.mlp = from_checkpoint_arrays(a, "executor/")
    if str(a["method"]) == "unstructured":
        ed = TableEdge(space, TransitionTable.from_dict(space, json.loads(str(a["table"]))))
    else:
        ed = EdgeDetector(space, hidden=cfg.hidden, capacity=cfg.ed_capacity, lr=cfg.ed_lr)
        ed.mlp = from_checkpoint_arrays(a, "ed/")
    ed.pushed = {0: int(a["pushed"][0]), 1: int(a["pushed"][1])}
    memory = Memory.from_dict(space, json.loads(str(a["memory"])))
    env_steps, expl_steps, exec_steps = (int(v) for v in a["steps"])
    return Agent(env, ed, explorer, executor, memory, json.loads(str(a["metrics"])),
                 env_steps, expl_steps, exec_steps)


def save_goal_policy(policy: GoalPolicy, path, cfg=None) -> None:
    arrays = {"format": np.array(CHECKPOINT_FORMAT), "method": np.array("rl")}
    if cfg is not None:
        arrays["config"] = np.array(cfg.to_json())
    arrays.update(checkpoint_arrays(policy.mlp, "policy/"))
    np.savez(path, **arrays)


def load_goal_policy(path, env, cfg) -> GoalPolicy:
    with np.load(path) as z:
        a = dict(z)
    if int(a["format"]) != CHECKPOINT_FORMAT:
        raise ValueError("unsupported checkpoint format")
    p = GoalPolicy(env, hidden=cfg.hidden, lr=cfg.lr)
    p.net.mlp = p.mlp = from_checkpoint_arrays(a, "policy/")
    return p


def checkpoint_info(path) -> tuple[str, dict | None]:
    """(method, stored config dict or None) without rebuilding any model."""
    with np.load(path) as z:
        method = str(z["method"])
        cfg = json.loads(str(z["config"])) if "config" in z.files else None
    return method, cfg


def checkpoint_bytes(agent: Agent) -> bytes:
    buf = io.BytesIO()
    save_agent(agent, buf)
    return buf.getvalue()

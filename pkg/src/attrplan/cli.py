"""Command line entry point: ``attrplan {train,eval,plan,inspect,selftest}``.

train     train one method and write metrics.csv, trace.jsonl, checkpoint.npz
eval      evaluate checkpoints (or untrained models) and write report.csv
plan      print a plan from a start attribute vector to a goal
inspect   dump a checkpoint's buffer, visit counts and label counts
selftest  run quick property checks
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .agents import Trainer, build_agent
from .baselines import CurriculumSchedule, GoalPolicy, curriculum_rl_train, unstructured_plan
from .config import RunConfig, default_config, load_config, make_env_from_config, save_config
from .harness import (CsvSink, JsonlSink, checkpoint_info, evaluate, load_agent, load_goal_policy,
                      save_agent, save_goal_policy, write_report, write_task_report)
from .planner import Goal, plan
from .tasks import eval_tasks

METHODS = ("structured", "unstructured", "rl")


def _config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config(args.env)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "budget", None) is not None:
        cfg = cfg.replace(explore_steps=args.budget, execute_steps=args.budget,
                          rl_steps=args.budget)
    return cfg


def _checkpoint_config(path, args) -> RunConfig:
    _, stored = checkpoint_info(path)
    if args.config or stored is None:
        return _config(args)
    cfg = RunConfig.from_dict(stored)
    return cfg if args.seed is None else cfg.replace(seed=args.seed)


def cmd_train(args) -> int:
    cfg = _config(args)
    env = make_env_from_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    save_config(cfg, os.path.join(args.out, "config.json"))
    ckpt = os.path.join(args.out, "checkpoint.npz")
    metrics = CsvSink(os.path.join(args.out, "metrics.csv"))
    if args.method == "rl":
        try:
            schedule = CurriculumSchedule(cfg.max_stage, cfg.promote_threshold, cfg.promote_window)
            policy = curriculum_rl_train(env, schedule, cfg, metrics)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        finally:
            metrics.close()
        save_goal_policy(policy, ckpt, cfg)
        print(f"trained rl to stage {schedule.stage}; wrote {ckpt}")
        return 0
    trace = JsonlSink(os.path.join(args.out, "trace.jsonl"))
    trainer = Trainer(cfg, env, args.method, metrics_sink=metrics, trace_sink=trace)
    try:
        trainer.run()
    except OSError as e:
        # keep whatever was learned before the sink failed
        print(f"error: {e}; saving checkpoint and aborting", file=sys.stderr)
        try:
            save_agent(trainer.agent, ckpt, cfg)
        except OSError as e2:
            print(f"error: could not save checkpoint: {e2}", file=sys.stderr)
        return 1
    finally:
        metrics.close()
        trace.close()
    save_agent(trainer.agent, ckpt, cfg)
    a = trainer.agent
    print(f"trained {args.method}: {a.env_steps} env steps, "
          f"{len(a.memory.buffer.deltas)} buffer deltas; wrote {ckpt}")
    return 0


def _load_model(path, env, cfg):
    method, _ = checkpoint_info(path)
    if method == "rl":
        return method, load_goal_policy(path, env, cfg)
    return method, load_agent(path, env, cfg)


def _untrained(method, env, cfg):
    if method == "rl":
        return GoalPolicy(env, hidden=cfg.hidden, lr=cfg.lr, rng=np.random.default_rng(cfg.seed))
    return build_agent(cfg, env, method)


def cmd_eval(args) -> int:
    if args.checkpoint:
        cfg = _checkpoint_config(args.checkpoint[0], args)
    else:
        cfg = _config(args)
    env = make_env_from_config(cfg)
    models = [_load_model(p, env, cfg) for p in args.checkpoint]
    if not models:
        models = [(m, _untrained(m, env, cfg)) for m in (args.method or METHODS)]
    tasks = eval_tasks(env, cfg.eval_tasks, cfg.seed, cfg.eval_min_dist, cfg.eval_max_dist)
    reports = [evaluate(m, model, env, tasks, cfg, cfg.seed) for m, model in models]
    os.makedirs(args.out, exist_ok=True)
    write_report(reports, os.path.join(args.out, "report.csv"))
    write_task_report(reports, tasks, os.path.join(args.out, "tasks.csv"))
    for r in reports:
        print(f"{r.method:>12}  success {r.success_rate:6.1%}  mean steps {r.mean_steps:.1f}")
    return 0


def _vector(text):
    return tuple(json.loads(text))


def cmd_plan(args) -> int:
    cfg = _checkpoint_config(args.checkpoint, args)
    env = make_env_from_config(cfg)
    method, agent = _load_model(args.checkpoint, env, cfg)
    if method == "rl":
        print("error: rl checkpoints have no planner", file=sys.stderr)
        return 2
    start = _vector(args.start) if args.start else \
        env.attributes(env.reset(cfg.seed if args.seed is None else args.seed))
    goal = Goal(_vector(args.goal))
    if len(start) != len(env.space) or len(goal.values) != len(env.space):
        print(f"error: start and goal need {len(env.space)} coordinates", file=sys.stderr)
        return 2
    if method == "structured":
        p = plan(agent.memory.buffer, agent.ed, start, goal, cfg.max_nodes, cfg.depth_limit)
    else:
        p = unstructured_plan(agent.ed.table, start, goal, cfg.max_nodes, cfg.depth_limit)
    if p is None:
        print(f"no plan from {list(start)} to {goal.to_list()}")
        return 1
    print(p.to_text())
    return 0


def cmd_inspect(args) -> int:
    cfg = _checkpoint_config(args.checkpoint, args)
    env = make_env_from_config(cfg)
    method, model = _load_model(args.checkpoint, env, cfg)
    print(f"method {method}  env {cfg.env} {cfg.env_params}  seed {cfg.seed}")
    if method == "rl":
        return 0
    mem = model.memory
    print(f"env steps {model.env_steps} (explore {model.expl_steps}, execute {model.exec_steps})")
    print(f"labels pushed: positive {model.ed.pushed[1]}, negative {model.ed.pushed[0]}")
    print(f"buffer ({len(mem.buffer.deltas)} deltas):")
    for d in mem.buffer.deltas:
        print(f"  {list(d)}")
    for name, counts in (("exploration", mem.expl), ("execution", mem.exec)):
        print(f"{name} visit counts by coordinate:")
        for k, c in enumerate(counts.counts):
            print(f"  {k}: " + ", ".join(f"{v}:{n}" for v, n in sorted(c.items())))
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_all
    return 0 if run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="attrplan", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", metavar="{train,eval,plan,inspect,selftest}")
    sub.required = True

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--env", default="modular",
                        choices=("modular", "exchangeable", "constrained"),
                        help="environment defaults when no --config is given")
        sp.add_argument("--seed", type=int)

    t = sub.add_parser("train", help="train one method")
    common(t)
    t.add_argument("--method", choices=METHODS, default="structured")
    t.add_argument("--budget", type=int, help="steps per phase (exploration, execution, rl)")
    t.add_argument("--out", default="run")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate on sampled attribute goals")
    common(e)
    e.add_argument("--checkpoint", action="append", default=[])
    e.add_argument("--method", choices=METHODS, action="append",
                   help="untrained method(s) to evaluate when no checkpoint is given")
    e.add_argument("--out", default="run")
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plan", help="print a plan")
    common(pl)
    pl.add_argument("--checkpoint", required=True)
    pl.add_argument("--start", help="JSON attribute vector (default: a fresh map's attributes)")
    pl.add_argument("--goal", required=True, help="JSON vector, null for unconstrained")
    pl.set_defaults(func=cmd_plan)

    i = sub.add_parser("inspect", help="dump buffer and counts")
    common(i)
    i.add_argument("--checkpoint", required=True)
    i.set_defaults(func=cmd_inspect)

    s = sub.add_parser("selftest", help="quick property checks")
    s.set_defaults(func=cmd_selftest)
    return p


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

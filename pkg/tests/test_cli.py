import csv
import json

import numpy as np
import pytest

from attrplan.cli import run_cli
from attrplan.config import default_config, save_config
from attrplan.envs import ModularSwitches
from attrplan.harness import (EvalReport, checkpoint_bytes, checkpoint_info, evaluate, load_agent,
                              order_reports, save_agent, write_report)
from attrplan.agents import train
from attrplan.tasks import eval_tasks

BUDGET = ["--budget", "1500"]


@pytest.fixture
def cfg_path(tmp_path):
    cfg = default_config("modular", env_params={"q": 2}, batch_steps=500, hidden=16,
                         log_interval=500, eval_tasks=4, ed_batch=32)
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    return str(path)


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as e:
        run_cli(["dance"])
    assert e.value.code == 2


def test_eval_untrained_models(tmp_path, cfg_path, capsys):
    out = tmp_path / "ev"
    assert run_cli(["eval", "--config", cfg_path, "--out", str(out)]) == 0
    rows = read_csv(out / "report.csv")
    assert [r["method"] for r in rows] == ["rl", "unstructured", "structured"]
    assert all(int(r["tasks"]) == 4 for r in rows)
    # an empty buffer plans nothing and the untrained policy is random
    assert float(rows[1]["success_rate"]) == 0.0
    assert len(read_csv(out / "tasks.csv")) == 12
    assert "structured" in capsys.readouterr().out


def test_train_then_eval_roundtrip(tmp_path, cfg_path, capsys):
    run = tmp_path / "run"
    assert run_cli(["train", "--config", cfg_path, *BUDGET, "--out", str(run)]) == 0
    for name in ("config.json", "metrics.csv", "trace.jsonl", "checkpoint.npz"):
        assert (run / name).exists()
    rows = read_csv(run / "metrics.csv")
    steps = [int(r["env_steps"]) for r in rows]
    assert steps == sorted(steps) and steps[-1] >= 3000
    first = json.loads((run / "trace.jsonl").read_text().splitlines()[0])
    assert first["game"] in ("explore", "execute")
    ckpt = str(run / "checkpoint.npz")
    assert checkpoint_info(ckpt)[0] == "structured"
    assert run_cli(["eval", "--checkpoint", ckpt, "--out", str(tmp_path / "ev")]) == 0
    assert read_csv(tmp_path / "ev" / "report.csv")[0]["method"] == "structured"
    assert run_cli(["inspect", "--checkpoint", ckpt]) == 0
    out = capsys.readouterr().out
    assert "buffer (" in out and "labels pushed" in out


def test_plan_command(tmp_path, cfg_path, capsys):
    run = tmp_path / "run"
    run_cli(["train", "--config", cfg_path, *BUDGET, "--out", str(run)])
    ckpt = str(run / "checkpoint.npz")
    capsys.readouterr()
    code = run_cli(["plan", "--checkpoint", ckpt, "--start", "[1, 1, 0, 0, 0]",
                    "--goal", "[null, null, 1, null, null]"])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert out.startswith("start") or out.startswith("no plan")
    assert run_cli(["plan", "--checkpoint", ckpt, "--goal", "[1, 2]"]) == 2
    assert run_cli(["plan", "--checkpoint", ckpt, "--goal", "[0, 0, 0, 0, 0]",
                    "--start", "[0, 0, 0, 0, 0]"]) == 0
    assert "total_cost 0.000000 edges 0" in capsys.readouterr().out


def test_rl_checkpoint(tmp_path, cfg_path, capsys):
    run = tmp_path / "rl"
    assert run_cli(["train", "--config", cfg_path, "--method", "rl", *BUDGET,
                    "--out", str(run)]) == 0
    ckpt = str(run / "checkpoint.npz")
    assert checkpoint_info(ckpt)[0] == "rl"
    assert run_cli(["plan", "--checkpoint", ckpt, "--goal", "[0, 0, 0, 0, 0]"]) == 2
    assert run_cli(["eval", "--checkpoint", ckpt, "--out", str(tmp_path / "ev")]) == 0


def test_missing_checkpoint_is_an_error(tmp_path):
    assert run_cli(["inspect", "--checkpoint", str(tmp_path / "nope.npz")]) == 1


def test_selftest_passes(capsys):
    assert run_cli(["selftest"]) == 0
    assert capsys.readouterr().out.count("PASS") == 4


def test_same_seed_gives_identical_files(tmp_path, cfg_path):
    for name in ("a", "b"):
        run_cli(["train", "--config", cfg_path, *BUDGET, "--out", str(tmp_path / name)])
    for f in ("metrics.csv", "trace.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


# -- harness

def test_checkpoint_roundtrip_predictions(tmp_path):
    env = ModularSwitches(q=2)
    cfg = default_config("modular", env_params={"q": 2}, explore_steps=1500,
                         execute_steps=1500, batch_steps=500, hidden=16, ed_batch=32)
    for method in ("structured", "unstructured"):
        agent = train(cfg, env, method)
        path = tmp_path / f"{method}.npz"
        save_agent(agent, path, cfg)
        back = load_agent(path, env, cfg)
        assert checkpoint_bytes(back) == checkpoint_bytes(agent)
        rho = env.attributes(env.reset(1))
        deltas = list(agent.memory.buffer)
        np.testing.assert_array_equal(back.ed.predict_many(rho, deltas),
                                      agent.ed.predict_many(rho, deltas))
        x = agent.executor.inputs(env, env.reset(1), rho, env.toggle_delta())
        np.testing.assert_array_equal(back.executor.mlp.forward(x), agent.executor.mlp.forward(x))


def test_evaluation_is_deterministic():
    env = ModularSwitches(q=2)
    cfg = default_config("modular", env_params={"q": 2}, explore_steps=1000,
                         execute_steps=1000, batch_steps=500, hidden=16, ed_batch=32)
    agent = train(cfg, env)
    tasks = eval_tasks(env, 3, 0, 1, 5)
    r1 = evaluate("structured", agent, env, tasks, cfg)
    r2 = evaluate("structured", agent, env, tasks, cfg)
    assert r1.successes == r2.successes and r1.steps == r2.steps


def test_report_order_and_format(tmp_path):
    reports = [EvalReport("structured", [True, False], [10, 150]), EvalReport("rl", [False], [150]),
               EvalReport("unstructured", [True], [5])]
    assert [r.method for r in order_reports(reports)] == ["rl", "unstructured", "structured"]
    write_report(reports, tmp_path / "r.csv")
    rows = read_csv(tmp_path / "r.csv")
    assert rows[2] == {"method": "structured", "tasks": "2", "success_rate": "0.5",
                       "mean_steps": "80.0"}

import math

import numpy as np
import pytest

from attrplan.algebra import AttributeSpace, ModQ, Nat, compose
from attrplan.baselines import (CurriculumSchedule, GoalPolicy, TableEdge, TransitionTable,
                                curriculum_rl_train, goal_inputs, stage_goal, unstructured_plan)
from attrplan.config import default_config
from attrplan.edge import NEGATIVE, POSITIVE, TransitionSample
from attrplan.envs import Constrained, ModularSwitches
from attrplan.memory import TransitionBuffer
from attrplan.planner import Goal, plan
from attrplan.tasks import attribute_distances

SPACE = AttributeSpace((Nat(), ModQ(3)))


def test_table_record_examples():
    t = TransitionTable(SPACE)
    t.table_record((0, 0), (1, 0), True)
    assert t.pairs[((0, 0), (1, 0))] == [1, 1]
    t.table_record((0, 0), (0, 1), False)
    assert t.pairs[((0, 0), (0, 1))] == [0, 1]
    assert t.probability((5, 0), (6, 0)) == 0.0
    t.table_record((0, 0), (1, 0), False)
    assert t.probability((0, 0), (1, 0)) == 0.5


def test_table_roundtrip():
    t = TransitionTable(SPACE)
    t.table_record((0, 0), (1, 0), True)
    t.table_record((1, 0), (1, 1), False)
    t2 = TransitionTable.from_dict(SPACE, t.to_dict())
    assert t2.pairs == t.pairs and t2.reps == t.reps and t2.succ == t.succ


def test_table_edge_counts_labels():
    ed = TableEdge(SPACE)
    ed.push_label(TransitionSample((0, 0), (1, 0), POSITIVE))
    ed.push_label(TransitionSample((0, 0), (1, 0), NEGATIVE))
    ed.push_label(TransitionSample((0, 0), (-1, 0), NEGATIVE))     # not composable
    assert ed.pushed == {POSITIVE: 1, NEGATIVE: 2}
    assert ed.predict((0, 0), (1, 0)) == 0.5
    assert ed.predict((3, 0), (1, 0)) == pytest.approx(1e-6)


def test_unobserved_pair_has_no_edge():
    t = TransitionTable(SPACE)
    t.table_record((0, 0), (1, 0), True)
    assert unstructured_plan(t, (0, 0), Goal((2, None))) is None
    # a structured model generalizes the same delta to the unseen state
    b = TransitionBuffer(SPACE)
    b.insert_transition((1, 0))
    ed = TableEdge(SPACE, t)

    class Shared:
        def predict_many(self, rho, deltas):
            return np.full(len(deltas), 0.9)
    assert plan(b, Shared(), (0, 0), Goal((2, None))) is not None
    assert ed.predict((1, 0), (1, 0)) == pytest.approx(1e-6)


def test_single_chain_is_returned():
    t = TransitionTable(SPACE)
    chain = [(0, 0), (1, 0), (1, 1), (2, 1)]
    for a, b in zip(chain, chain[1:]):
        t.table_record(a, b, True)
    p = unstructured_plan(t, (0, 0), Goal((2, 1)))
    assert p.nodes == chain and p.cost == pytest.approx(3 * -math.log(1 - 1e-6))


def test_failed_pairs_are_not_edges():
    t = TransitionTable(SPACE)
    t.table_record((0, 0), (1, 0), False)
    assert unstructured_plan(t, (0, 0), Goal((1, 0))) is None


def test_matches_structured_planner_on_fully_observed_graph():
    """Same graph, ED = empirical success rate: both planners agree on cost."""
    rng = np.random.default_rng(0)
    deltas = [(1, 0), (0, 1), (1, 2)]
    t = TransitionTable(SPACE)
    for a in range(5):
        for m in range(3):
            for d in deltas:
                n = int(rng.integers(1, 6))
                s = int(rng.integers(1, n + 1))
                nxt = compose(SPACE, (a, m), d)
                for i in range(n):
                    t.table_record((a, m), nxt, i < s)
    b = TransitionBuffer(SPACE)
    for d in deltas:
        b.insert_transition(d)
    ed = TableEdge(SPACE, t)
    for goal in [Goal((3, 1)), Goal((4, None)), Goal((2, 2))]:
        pu = unstructured_plan(t, (0, 0), goal, depth_limit=6)
        ps = plan(b, ed, (0, 0), goal, depth_limit=6)
        assert pu.cost == pytest.approx(ps.cost, abs=1e-9)


# -- curriculum

def test_schedule_promotes_and_caps():
    s = CurriculumSchedule(max_stage=3, promote_threshold=0.5, window=4)
    for i in range(40):
        s.record(True, i)
    assert s.stage == 3
    assert s.promotions == [3, 7]


def test_schedule_needs_a_full_window():
    s = CurriculumSchedule(max_stage=5, promote_threshold=0.5, window=10)
    for _ in range(9):
        assert not s.record(True)
    assert s.record(True) and s.stage == 2


def test_stage_goals_have_the_right_distance():
    env = ModularSwitches(q=2)
    rng = np.random.default_rng(0)
    for seed in range(10):
        rho0 = env.attributes(env.reset(seed))
        dist = attribute_distances(env, rho0)
        for stage in (1, 3):
            g = stage_goal(env, rho0, stage, rng)
            proj = tuple(g.values[k] for k in env.goal_coords())
            assert dist[proj] == stage


def test_constrained_stage_goals_stay_in_support():
    env = Constrained()
    rng = np.random.default_rng(0)
    rho0 = env.attributes(env.reset(0))
    for stage in (1, 2, 5):
        g = stage_goal(env, rho0, stage, rng)
        m = [g.values[k] for k in env.goal_coords()]
        assert env.in_support(m)


def test_goal_inputs_mask_unconstrained():
    env = ModularSwitches(q=2)
    rho = (1, 1, 0, 0, 0)
    offset, mask = goal_inputs(env, rho, Goal((None, None, 1, None, None)))
    assert offset == (0, 0, 1, 0, 0) and mask == [0, 0, 1, 0, 0]


def test_curriculum_training_is_deterministic():
    env = ModularSwitches(q=2)
    cfg = default_config("modular", env_params={"q": 2}, rl_steps=2000, batch_steps=500,
                         hidden=8, log_interval=500)

    def run():
        rows = []
        s = CurriculumSchedule(cfg.max_stage, 0.3, 20)
        p = curriculum_rl_train(env, s, cfg, rows.append)
        return rows, s.promotions, p.mlp.to_bytes()
    a, b = run(), run()
    assert a == b
    assert [r["env_steps"] for r in a[0]] == sorted(r["env_steps"] for r in a[0])
    assert isinstance(GoalPolicy(env, hidden=4).act(env, env.reset(0), Goal((None,) * 5),
                                                    np.random.default_rng(0)), int)

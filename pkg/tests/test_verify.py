import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eqts.core import make_system, replay
from eqts.equalize import ERR, build_equalized, check_initial_clustering, check_proper, identity
from eqts.errors import ProperNessError
from eqts.policy import MUTANTS, EmptyPlanner, Reach0, phi_b
from eqts.scenario import PolicySpec
from eqts.verify import (audit_reach_completeness, audit_reach_soundness, concretize,
                         concretize_run, policy_graph, policy_works, reachable_set, replay_run,
                         state_reachable)

from conftest import shipped, unlabeled_blocksworld
from oracles import (brute_phi, enumerate_runs, formula, random_policy, random_system,
                     three_state_merge)

seeds = st.integers(0, 2 ** 32)


def random_case(seed):
    rng = random.Random(seed)
    ts, c = random_system(rng, n_states=rng.randint(3, 7))
    es = build_equalized(ts, c)
    return es, random_policy(rng, ts)


@given(seeds)
def test_verdict_matches_run_enumeration(seed):
    es, policy = random_case(seed)
    bound = len(es.estates)
    is_goal = es.lift_formula(policy.goal)
    failures = enumerate_runs(lambda i: brute_phi(es, policy, i, bound), es.initial, is_goal)
    v = policy_works(es, policy, Reach0())
    assert v.works == (not failures)
    if not v.works:
        assert v.kind in failures


@given(seeds)
def test_counterexamples_replay(seed):
    es, policy = random_case(seed)
    v = policy_works(es, policy, Reach0())
    if v.works:
        assert v.counterexample is None and v.exit_code == 0
        return
    run = v.counterexample
    assert replay_run(es, policy, Reach0(), run)
    is_goal = es.lift_formula(policy.goal)
    assert not any(is_goal(i) for i in run.states)
    if v.kind == "lasso":
        assert v.exit_code == 2
        cycle = run.states[run.loop_start:]
        assert run.states[run.loop_start] in phi_b(es, policy, Reach0(), cycle[-1])
    else:
        assert v.exit_code == 3
        last = run.states[-1]
        assert last == ERR or not phi_b(es, policy, Reach0(), last)


@given(seeds)
def test_choice_points_branch(seed):
    es, policy = random_case(seed)
    v = policy_works(es, policy, Reach0())
    for i in v.choice_points:
        assert len(phi_b(es, policy, Reach0(), i)) > 1


@given(seeds)
def test_reachable_set_is_closed(seed):
    es, policy = random_case(seed)
    r = reachable_set(es, policy, Reach0())
    assert es.initial <= r
    for i in r:
        assert phi_b(es, policy, Reach0(), i) <= r


@given(seeds)
def test_parallel_graph_equals_sequential(seed):
    es, policy = random_case(seed)
    one = policy_graph(es, policy, Reach0(), jobs=1)
    es.cache.clear()
    many = policy_graph(es, policy, Reach0(), jobs=4)
    assert one == many


def line_system():
    """0 -a-> 1 -a-> 2, identity classification; goal is state 2."""
    ts = make_system(("f0", "f1"), ("a",), [0, 1, 2], [0], {(0, "a"): {1}, (1, "a"): {2}})
    return build_equalized(ts, identity(ts))


def test_dead_end_when_mapping_is_missing():
    es = line_system()
    policy = PolicySpec((("q", formula("-f1")),), {}, formula("f1"))
    v = policy_works(es, policy, Reach0())
    assert v.kind == "dead-end" and v.exit_code == 3


def test_empty_planner_gives_dead_end():
    es = line_system()
    policy = PolicySpec((), {frozenset(): (formula("f1"),)}, formula("f1"))
    assert policy_works(es, policy, Reach0()).works
    assert policy_works(es, policy, EmptyPlanner()).kind == "dead-end"


def test_goal_unreachable_is_reported():
    es = line_system()
    policy = PolicySpec((), {frozenset(): (formula("f0 & f1"),)}, formula("f0 & f1"))
    v = policy_works(es, policy, Reach0(), require_goal_reachable=True)
    assert v.kind == "goal-unreachable" and v.exit_code == 2


def test_state_reachable():
    es = line_system()
    policy = PolicySpec((), {frozenset(): (formula("f1"),)}, formula("f1"))
    assert state_reachable(es, policy, Reach0(), 2)
    assert not state_reachable(es, policy, Reach0(), 1)


def test_loop_semantics_expands_goals():
    es = line_system()
    policy = PolicySpec((), {frozenset(): (formula("f1"),)}, formula("f1"))
    stop = policy_works(es, policy, Reach0())
    loop = policy_works(es, policy, Reach0(), goal_semantics="loop")
    assert stop.works and loop.works
    with pytest.raises(ValueError):
        policy_works(es, policy, Reach0(), goal_semantics="forever")


def test_grid_counterexamples():
    sc, ts, es = shipped("grid_b")
    v = policy_works(es, sc.policy, Reach0())
    assert v.kind == "lasso" and v.choice_points == ()
    assert all(w is not None for w in v.counterexample.witnesses)
    sc, ts, es = shipped("grid_c")
    v = policy_works(es, sc.policy, Reach0())
    assert v.kind == "lasso" and len(v.choice_points) == 1


@pytest.mark.parametrize("name", ["grid_a", "grid_b"])
def test_reach0_passes_both_audits(name):
    sc, ts, es = shipped(name)
    assert audit_reach_soundness(es, sc.policy, Reach0()).ok
    assert audit_reach_completeness(es, sc.policy, Reach0()).ok


def test_dropping_mutant_misses_exactly_multi_step_edges():
    sc, ts, es = shipped("grid_a")
    report = audit_reach_completeness(es, sc.policy, MUTANTS["drop"]())
    assert report.violations
    assert all(len(v["plan"]) >= 2 for v in report.violations)


def test_sampled_audit_is_not_exhaustive():
    sc, ts, es = shipped("grid_a")
    report = audit_reach_soundness(es, sc.policy, Reach0(), samples=5, seed=1)
    assert not report.exhaustive and report.ok


def test_concretize_on_grid():
    sc, ts, es = shipped("grid_a")
    v = policy_works(es, sc.policy, Reach0())
    (i, j) = v.goal_run.states[-2:]
    _, plan = v.goal_run.witnesses[-1]
    traj = concretize(ts, es, i, j, plan)
    assert replay(ts, traj)
    assert es.of_state[traj.start] == i and es.of_state[traj.end] == j


def test_concretize_every_initial_state_of_unlabeled_blocksworld():
    sc, ts, es = unlabeled_blocksworld(4)
    assert not check_proper(ts, es.classification, es=es)
    assert check_initial_clustering(ts, es.classification, es)
    goal = es.lift_formula(sc.policy.goal, sc.policy.defs)
    edges = policy_graph(es, sc.policy, Reach0())
    from eqts.verify import Run
    for i0 in sorted(es.initial):
        path = [i0]
        while not goal(path[-1]):
            path.append(min(edges[path[-1]]))
        traj = concretize_run(ts, es, sc.policy, Reach0(), Run(tuple(path), "goal"))
        assert replay(ts, traj) and traj.start in ts.initial
        assert goal(es.of_state[traj.end])


def test_concretize_fails_without_properness():
    ts, c = three_state_merge()
    es = build_equalized(ts, c)
    with pytest.raises(ProperNessError):
        concretize(ts, es, 0, 1, (frozenset({"a"}),), s2=2)

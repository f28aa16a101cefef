"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import os
import random
import subprocess
import sys
import time

from conftest import load, shipped, unlabeled_blocksworld
from oracles import (brute_conformant, brute_res, executability_merge, ground_text,
                     oracle_transitions, random_description, random_system, system_triples,
                     three_state_merge)

from eqts.core import label, replay
from eqts.equalize import (ERR, Violation, check_initial_clustering,
                           check_proper, check_strong_proper, identity)
from eqts.langc import build_transition_system
from eqts.policy import MUTANTS, Reach0, holds_fn, reach0
from eqts.scenarios import bundle_path
from eqts.scenarios.blocksworld import decode_profile
from eqts.verify import (all_targets, audit_reach_completeness, audit_reach_soundness,
                         concretize_run, policy_graph, policy_works, replay_run)


def verdict_line(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_1_blocksworld4_structure():
    t0 = time.perf_counter()
    sc, ts, es = load(str(bundle_path("blocksworld4")))
    edges = policy_graph(es, sc.policy, Reach0())
    verdict = policy_works(es, sc.policy, Reach0())
    elapsed = time.perf_counter() - t0
    prof = {i: decode_profile(es, i) for i in es.ids}
    got = {(prof[i], prof[j]) for i, succ in edges.items() for j in succ}
    want = {((0, 2, 0, 0), (2, 1, 0, 0)), ((1, 0, 1, 0), (2, 1, 0, 0)),
            ((2, 1, 0, 0), (4, 0, 0, 0)), ((4, 0, 0, 0), (0, 0, 0, 1))}
    initial = {prof[i] for i in es.initial}
    ok = (len(es.estates) == 5
          and sorted(prof.values()) == sorted([(4, 0, 0, 0), (2, 1, 0, 0), (0, 2, 0, 0),
                                               (1, 0, 1, 0), (0, 0, 0, 1)])
          and got == want
          and initial == set(prof.values()) - {(0, 0, 0, 1)}
          and verdict.works and elapsed < 5.0)
    verdict_line(1, ok, f"{len(es.estates)} equalized states, edges match={got == want}, "
                        f"verdict={verdict.kind}, {elapsed:.2f}s")


def test_criterion_2_profile_member_count():
    sc, ts, es = load(str(bundle_path("blocksworld4")))
    by_profile = {decode_profile(es, i): len(es.members(i)) for i in es.ids}
    count = by_profile.get((1, 0, 1, 0))
    verdict_line(2, count == 24, f"<1,0,1,0> has {count} concrete states")


def test_criterion_3_grid_trichotomy():
    t0 = time.perf_counter()
    kinds, details = {}, []
    for key in "abc":
        sc, ts, es = shipped(f"grid_{key}")
        v = policy_works(es, sc.policy, Reach0())
        kinds[key] = v
        if v.counterexample is not None:
            details.append(replay_run(es, sc.policy, Reach0(), v.counterexample))
    elapsed = time.perf_counter() - t0
    a, b, c = kinds["a"], kinds["b"], kinds["c"]
    ok = (a.works
          and b.kind == "lasso" and not b.choice_points
          and c.kind == "lasso" and bool(c.choice_points)
          and all(details) and elapsed < 30.0)
    verdict_line(3, ok, f"a={a.kind}, b={b.kind} (choices {len(b.choice_points)}), "
                        f"c={c.kind} (choices {len(c.choice_points)}), replays ok={all(details)}, "
                        f"{elapsed:.2f}s")


def test_criterion_4_semantics_oracle():
    bad = 0
    for seed in range(50):
        ad = ground_text(random_description(random.Random(seed), max_fluents=8, max_actions=3))
        states, initial, triples = oracle_transitions(ad)
        ts = build_transition_system(ad)
        got_states = {frozenset(ts.true_fluents(s)) for s in ts.states}
        got_init = {frozenset(ts.true_fluents(s)) for s in ts.initial}
        if got_states != set(states) or got_init != set(initial) or system_triples(ts) != triples:
            bad += 1
    verdict_line(4, bad == 0, f"50 random descriptions, {bad} discrepancies")


def _conformance_fixtures():
    out = []
    for key in "abc":
        sc, ts, es = shipped(f"grid_{key}")
        out.append((f"grid_{key}", es, sc.policy, 6))
    # label alphabets grow quickly with labeled moves; the bound keeps enumeration exhaustive
    for n, bound in ((2, 6), (3, 4), (4, 3)):
        sc, ts, es = shipped(f"blocksworld{n}")
        out.append((f"blocksworld{n}", es, sc.policy, bound))
    for n in (2, 3, 4):
        sc, ts, es = unlabeled_blocksworld(n)
        out.append((f"blocksworld{n}-unlabeled", es, sc.policy, 6))
    return out


def test_criterion_5_reach0_conformance():
    unsound = incomplete = pairs = 0
    for name, es, policy, bound in _conformance_fixtures():
        assert len(es.estates) <= 2 ** 10
        for g in all_targets(policy):
            holds = holds_fn(es, g, policy.defs)
            for i in es.ids:
                plans = reach0(es, i, g, bound, defs=policy.defs)
                for p in plans:
                    prefixes_ok = all(ERR not in brute_res(es, i, p[:k])
                                      for k in range(1, len(p) + 1))
                    if not prefixes_ok or not all(holds(j) for j in brute_res(es, i, p)):
                        unsound += 1
                if set(plans) != set(brute_conformant(es, i, holds, bound)):
                    incomplete += 1
                pairs += 1
    ok = unsound == 0 and incomplete == 0
    verdict_line(5, ok, f"{pairs} (state, target) pairs, {unsound} unsound plans, "
                        f"{incomplete} incomplete plan sets")


def test_criterion_6_mutant_audits():
    sc, ts, es = shipped("grid_a")
    policy = sc.policy
    results = {}
    for name, planner in [("reach0", Reach0())] + [(k, cls()) for k, cls in MUTANTS.items()
                                                    if k != "empty"]:
        sound = audit_reach_soundness(es, policy, planner)
        compl = audit_reach_completeness(es, policy, planner)
        conds = {v["condition"] for v in sound.violations}
        results[name] = (conds, len(sound.violations), len(compl.violations))
    ok = (results["reach0"] == (set(), 0, 0)
          and results["truncate"][0] == {"target-missed"} and results["truncate"][2] == 0
          and results["prepend"][0] == {"error-prefix"} and results["prepend"][2] == 0
          and results["drop"][1] == 0 and results["drop"][2] > 0)
    summary = ", ".join(f"{k}: sound-conds={sorted(v[0])} completeness={v[2]}"
                        for k, v in sorted(results.items()))
    verdict_line(6, ok, summary)


def test_criterion_7_properness():
    identity_ok = True
    for name in ("grid_a", "grid_b", "grid_c", "blocksworld3", "blocksworld4"):
        sc, ts, es = shipped(name)
        c = identity(ts)
        identity_ok &= not check_proper(ts, c) and not check_strong_proper(ts, c)
    for seed in range(20):
        ts, _ = random_system(random.Random(seed))
        c = identity(ts)
        identity_ok &= not check_proper(ts, c) and not check_strong_proper(ts, c)
    ts, c = three_state_merge()
    merge = check_proper(ts, c)
    merge_ok = merge == [Violation("proper", 0, label("a"), 1, 2)]
    ts, c = executability_merge()
    execm = check_strong_proper(ts, c)
    exec_ok = execm == [Violation("strong-proper", 0, label("a"), 1, 2)] and not check_proper(ts, c)
    ok = identity_ok and merge_ok and exec_ok
    verdict_line(7, ok, f"identity pass={identity_ok}, merge witness ok={merge_ok}, "
                        f"executability merge ok={exec_ok}")


def _proper_fixtures():
    out = [("grid_a", shipped("grid_a")), ("grid_c", shipped("grid_c"))]
    out += [(f"blocksworld{n}-unlabeled", unlabeled_blocksworld(n)) for n in (2, 3, 4)]
    return out


def test_criterion_8_concretization():
    checked, failures = 0, []
    for name, (sc, ts, es) in _proper_fixtures():
        c = es.classification
        if check_proper(ts, c, es=es) or not check_initial_clustering(ts, c, es):
            failures.append(f"{name} is not a proper initially clustered fixture")
            continue
        v = policy_works(es, sc.policy, Reach0())
        if v.goal_run is None:
            failures.append(f"{name} has no goal-reaching run")
            continue
        traj = concretize_run(ts, es, sc.policy, Reach0(), v.goal_run)
        goal = es.lift_formula(sc.policy.goal, sc.policy.defs)
        if not (replay(ts, traj) and traj.start in ts.initial and goal(es.of_state[traj.end])):
            failures.append(f"{name}: concrete trajectory does not replay to the goal")
        checked += 1
    ok = not failures and checked == len(_proper_fixtures())
    verdict_line(8, ok, f"{checked} fixtures concretized" + (f"; {failures}" if failures else ""))


def _verify(bundle, *extra, seed="0"):
    env = dict(os.environ, PYTHONHASHSEED=seed)
    cmd = [sys.executable, "-m", "eqts.cli", "verify", str(bundle), *extra]
    return subprocess.run(cmd, capture_output=True, env=env, check=False)


def test_criterion_9_determinism():
    mismatches = []
    for name in ("grid_c", "blocksworld4"):
        bundle = bundle_path(name)
        runs = [_verify(bundle, seed="0"), _verify(bundle, seed="1"),
                _verify(bundle, "--jobs", "8", seed="2"), _verify(bundle, "--jobs", "1", seed="3")]
        outs = {(r.returncode, r.stdout) for r in runs}
        if len(outs) != 1 or not runs[0].stdout:
            mismatches.append(name)
    verdict_line(9, not mismatches, "byte-identical across runs and --jobs 8 vs 1"
                 if not mismatches else f"differences in {mismatches}")

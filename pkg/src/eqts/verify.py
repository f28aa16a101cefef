"""Deciding whether a policy works, reachable sets, audits and concretization."""

from __future__ import annotations

import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .core import Trajectory, TransitionSystem, label_text
from .equalize import ERR, EqualizedSystem
from .errors import PlannerError, ProperNessError
from .formula import Formula, to_text
from .policy import (Planner, Reach0, default_bound, edge_witness, holds_fn, phi_b,
                     plan_text, res_prefixes)
from .scenario import PolicySpec


def _order(i):
    # ERR sorts after every real state
    return (i == ERR, i)


@dataclass(frozen=True)
class Run:
    """A run prefix; ``terminal`` is ``goal``, ``lasso`` or ``dead-end``.

    For a lasso, ``loop_start`` is the index in ``states`` where the cycle
    begins; the last state steps back to ``states[loop_start]``.
    """

    states: tuple
    terminal: str
    loop_start: Optional[int] = None
    witnesses: tuple = ()  # per edge: (target, plan) or None


@dataclass
class Verdict:
    works: bool
    kind: str  # works | lasso | dead-end | goal-unreachable
    counterexample: Optional[Run] = None
    choice_points: tuple = ()
    goal_run: Optional[Run] = None
    stats: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.works:
            return 0
        return 3 if self.kind == "dead-end" else 2


def _is_goal(esys, policy, goal):
    return holds_fn(esys, goal if goal is not None else policy.goal, policy.defs)


def _phi_all(esys, policy, planner, ids, bound, jobs):
    """Phi_B for many states; parallel when ``jobs > 1`` with ordered results."""
    ids = list(ids)
    todo = [i for i in ids if ("phi_b", planner.name, id(policy), bound, i) not in esys.cache]
    if jobs and jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda i: phi_b(esys, policy, planner, i, bound), todo))
    return {i: phi_b(esys, policy, planner, i, bound) for i in ids}


def policy_graph(esys, policy, planner, bound=None, expand_goals=False, jobs=1,
                 goal: Optional[Formula] = None) -> dict:
    """Phi_B edges over the states reachable from the initial set.

    Goal states are not expanded unless ``expand_goals``; ERR never is.
    """
    bound = default_bound(esys, policy, bound)
    is_goal = _is_goal(esys, policy, goal)
    edges: dict = {}
    frontier = sorted(esys.initial)
    seen = set(frontier)
    while frontier:
        expand = [i for i in frontier if i != ERR and (expand_goals or not is_goal(i))]
        got = _phi_all(esys, policy, planner, expand, bound, jobs)
        nxt = set()
        for i in frontier:
            succ = got.get(i, frozenset())
            edges[i] = succ
            nxt |= succ - seen
        seen |= nxt
        frontier = sorted(nxt, key=_order)
    return edges


def _goal_reachable_plain(esys, is_goal) -> bool:
    seen = set(esys.initial)
    queue = deque(sorted(seen))
    while queue:
        i = queue.popleft()
        if is_goal(i):
            return True
        for lab in esys.labels:
            for j in esys.step(i, lab):
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
    return False


def policy_works(esys: EqualizedSystem, policy: PolicySpec, planner: Planner,
                 goal: Optional[Formula] = None, bound=None, goal_semantics="stop",
                 require_goal_reachable=False, jobs=1) -> Verdict:
    """Decide whether every run from every initial state reaches the goal.

    Runs stop at the first goal state.  The counterexample is the first one
    met by a depth-first search visiting states in ascending id order.
    """
    if goal_semantics not in ("stop", "loop"):
        raise ValueError(f"unknown goal semantics {goal_semantics!r}")
    bound = default_bound(esys, policy, bound)
    is_goal = _is_goal(esys, policy, goal)
    stats = {"initial": len(esys.initial), "equalized_states": len(esys.estates),
             "goal_semantics": goal_semantics, "plan_bound": bound, "planner": planner.name}
    if require_goal_reachable and not _goal_reachable_plain(esys, is_goal):
        start = min(esys.initial) if esys.initial else ERR
        run = Run((start,), "goal-unreachable")
        return Verdict(False, "goal-unreachable", run, stats=stats)

    edges = policy_graph(esys, policy, planner, bound, goal_semantics == "loop", jobs, goal)
    stats["reachable"] = len(edges)
    stats["edges"] = sum(len(v) for v in edges.values())

    goal_run = _shortest_goal_run(esys, edges, is_goal)
    if goal_run is not None:
        goal_run = _with_witnesses(esys, policy, planner, goal_run, bound)
    counter = _find_counterexample(esys, edges, is_goal)
    if counter is None:
        return Verdict(True, "works", None, goal_run=goal_run, stats=stats)
    counter = _with_witnesses(esys, policy, planner, counter, bound)
    choices = tuple(i for i in dict.fromkeys(counter.states)
                    if i != ERR and len(edges.get(i, ())) > 1)
    return Verdict(False, counter.terminal, counter, choice_points=choices,
                   goal_run=goal_run, stats=stats)


def _find_counterexample(esys, edges, is_goal) -> Optional[Run]:
    on_stack: dict = {}
    done = set()
    path: list = []

    def visit(i):
        # iterative DFS to avoid recursion limits on long chains
        stack = [(i, iter(sorted(edges.get(i, ()), key=_order)))]
        path.append(i)
        on_stack[i] = 0
        if (i == ERR or not edges.get(i)) and not is_goal(i):
            return Run(tuple(path), "dead-end")
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                del on_stack[node]
                done.add(node)
                continue
            if nxt in done or is_goal(nxt):
                continue
            if nxt in on_stack:
                return Run(tuple(path), "lasso", on_stack[nxt])
            on_stack[nxt] = len(path)
            path.append(nxt)
            if nxt == ERR or not edges.get(nxt):
                return Run(tuple(path), "dead-end")
            stack.append((nxt, iter(sorted(edges[nxt], key=_order))))
        return None

    for i in sorted(esys.initial):
        if is_goal(i) or i in done:
            continue
        path.clear()
        on_stack.clear()
        r = visit(i)
        if r is not None:
            return r
    return None


def _shortest_goal_run(esys, edges, is_goal) -> Optional[Run]:
    parent = {}
    queue = deque()
    for i in sorted(esys.initial):
        parent[i] = None
        queue.append(i)
    while queue:
        i = queue.popleft()
        if is_goal(i):
            path = []
            while i is not None:
                path.append(i)
                i = parent[i]
            return Run(tuple(reversed(path)), "goal")
        for j in sorted(edges.get(i, ()), key=_order):
            if j not in parent:
                parent[j] = i
                queue.append(j)
    return None


def _with_witnesses(esys, policy, planner, run: Run, bound) -> Run:
    pairs = list(zip(run.states, run.states[1:]))
    if run.terminal == "lasso":
        pairs.append((run.states[-1], run.states[run.loop_start]))
    wit = tuple(edge_witness(esys, policy, planner, i, j, bound) for i, j in pairs)
    return Run(run.states, run.terminal, run.loop_start, wit)


def replay_run(esys, policy, planner, run: Run, bound=None) -> bool:
    """Check each step of ``run`` against Phi_B (cache bypassed)."""
    pairs = list(zip(run.states, run.states[1:]))
    if run.terminal == "lasso":
        pairs.append((run.states[-1], run.states[run.loop_start]))
    for i, j in pairs:
        if j not in phi_b(esys, policy, planner, i, bound, use_cache=False):
            return False
    if run.states and run.states[0] not in esys.initial:
        return False
    if run.terminal == "dead-end":
        last = run.states[-1]
        return last == ERR or not phi_b(esys, policy, planner, last, bound, use_cache=False)
    return True


def reachable_set(esys, policy, planner, bound=None, jobs=1) -> frozenset:
    """Least fixpoint of R_{i+1} = R_i plus the Phi_B image of R_i, from the initial set."""
    bound = default_bound(esys, policy, bound)
    seen = set(esys.initial)
    frontier = sorted(seen)
    while frontier:
        got = _phi_all(esys, policy, planner, [i for i in frontier if i != ERR], bound, jobs)
        nxt = set()
        for succ in got.values():
            nxt |= succ - seen
        seen |= nxt
        frontier = sorted(nxt, key=_order)
    return frozenset(seen)


def state_reachable(esys, policy, planner, i, bound=None) -> bool:
    return i in reachable_set(esys, policy, planner, bound)


# -- audits --

@dataclass
class AuditReport:
    subject: str
    violations: list = field(default_factory=list)
    exhaustive: bool = True
    errors: list = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations and not self.errors


def all_targets(policy: PolicySpec) -> list:
    out = []
    for k in sorted(policy.mapping, key=sorted):
        out.extend(policy.mapping[k])
    if policy.otherwise:
        out.extend(policy.otherwise)
    out.append(policy.goal)
    return list(dict.fromkeys(out))


def _sample(items, samples, seed):
    if samples is None or samples >= len(items):
        return items, True
    rng = random.Random(seed)
    return sorted(rng.sample(items, samples), key=lambda x: items.index(x)), False


def audit_reach_soundness(esys, policy, planner, bound=None, samples=None, seed=0) -> AuditReport:
    """Replay every returned plan: no prefix may reach err and the end must satisfy the target."""
    bound = default_bound(esys, policy, bound)
    pairs = [(i, g) for i in esys.ids for g in all_targets(policy)]
    pairs, exhaustive = _sample(pairs, samples, seed)
    report = AuditReport(planner.name, exhaustive=exhaustive)
    for i, g in pairs:
        try:
            plans = planner.plans(esys, i, g, bound, policy.defs)
        except PlannerError as exc:
            report.errors.append({"state": esys.name(i), "target": to_text(g), "error": str(exc)})
            continue
        holds = holds_fn(esys, g, policy.defs)
        for p in plans:
            report.checked += 1
            pre = res_prefixes(esys, i, p)
            bad = next((k for k, r in enumerate(pre) if ERR in r), None)
            if bad is not None:
                report.violations.append({
                    "kind": "unsound-plan", "condition": "error-prefix", "state": esys.name(i),
                    "target": to_text(g), "plan": plan_text(p), "failing_prefix": bad})
                continue
            failing = sorted(j for j in pre[-1] if not holds(j))
            if failing:
                report.violations.append({
                    "kind": "unsound-plan", "condition": "target-missed", "state": esys.name(i),
                    "target": to_text(g), "plan": plan_text(p),
                    "terminal": [esys.name(j) for j in failing]})
    return report


def audit_reach_completeness(esys, policy, planner, bound=None, samples=None, seed=0) -> AuditReport:
    """Every Phi_B edge certified by a reach0 plan must appear under ``planner``."""
    bound = default_bound(esys, policy, bound)
    ref = Reach0()
    pairs = [(i, j) for i in esys.ids for j in esys.ids + [ERR]]
    pairs, exhaustive = _sample(pairs, samples, seed)
    report = AuditReport(planner.name, exhaustive=exhaustive)
    for i, j in pairs:
        if j not in phi_b(esys, policy, ref, i, bound, use_cache=False):
            continue
        report.checked += 1
        try:
            got = phi_b(esys, policy, planner, i, bound, use_cache=False)
        except PlannerError as exc:
            report.errors.append({"state": esys.name(i), "error": str(exc)})
            continue
        if j not in got:
            g, p = edge_witness(esys, policy, ref, i, j, bound)
            report.violations.append({
                "kind": "missing-plan", "state": esys.name(i), "successor": esys.name(j),
                "target": to_text(g), "plan": plan_text(p)})
    return report


# -- concretization --

def concretize(ts: TransitionSystem, esys: EqualizedSystem, i: int, j: int, sigma,
               s2: Optional[int] = None) -> Trajectory:
    """A concrete trajectory s1 -sigma-> s2 with s1 in ``i`` and s2 in ``j``.

    Walks ``sigma`` backwards from ``s2`` (default: least member of ``j``)
    through predecessor sets, then picks successors forward.
    """
    members_j = esys.members(j)
    if s2 is None:
        s2 = min(members_j)
    elif s2 not in members_j:
        raise ValueError("s2 is not a member of the target equalized state")
    pre = ts.predecessors
    layers = [frozenset([s2])]
    for lab in reversed(sigma):
        back = set()
        for t in layers[0]:
            back |= pre.get((t, lab), frozenset())
        if not back:
            raise ProperNessError(
                f"no concrete predecessor under {label_text(lab)} while tracking back from {ts.describe(s2)}")
        layers.insert(0, frozenset(back))
    start = layers[0] & esys.members(i)
    if not start:
        raise ProperNessError(
            f"no member of {esys.name(i)} reaches {ts.describe(s2)} under the plan")
    cur = min(start)
    steps = []
    for k, lab in enumerate(sigma):
        cur = min(ts.transitions.get((cur, lab), frozenset()) & layers[k + 1])
        steps.append((lab, cur))
    return Trajectory(min(start), tuple(steps))


def concretize_run(ts, esys, policy, planner, run: Run, goal=None, bound=None) -> Trajectory:
    """Compose ``concretize`` over a goal-reaching run, last edge first."""
    is_goal = _is_goal(esys, policy, goal)
    states = run.states
    target = min(s for s in esys.members(states[-1]))
    if not is_goal(states[-1]):
        raise ValueError("run does not end in a goal state")
    pieces = []
    for k in range(len(states) - 1, 0, -1):
        i, j = states[k - 1], states[k]
        w = run.witnesses[k - 1] if run.witnesses else None
        if w is None:
            w = edge_witness(esys, policy, planner, i, j, bound)
        if w is None:
            raise ProperNessError(f"no plan witnesses edge {esys.name(i)} -> {esys.name(j)}")
        traj = concretize(ts, esys, i, j, w[1], target)
        pieces.insert(0, traj)
        target = traj.start
    steps = tuple(step for t in pieces for step in t.steps)
    return Trajectory(target, steps)

"""Targets, conformant planning over equalized states, and the policy step Phi_B.

Plans are tuples of labels.  ``res`` executes a plan on equalized states:
an inapplicable step sends the run to the absorbing error state ``ERR``.
A plan is conformant for a target when every state in its result
satisfies the target; ``ERR`` satisfies nothing.
"""

from __future__ import annotations

import json
import logging
import subprocess
from typing import Callable, Iterable, Iterator, Optional

from .core import label_key, label_text, parse_label
from .equalize import ERR, EqualizedSystem
from .errors import PlannerError, ResourceError
from .formula import Formula, to_text
from .scenario import PolicySpec

log = logging.getLogger(__name__)

MAX_PLAN_BOUND = 64


def holds_fn(esys: EqualizedSystem, f: Formula, defs=None) -> Callable[[int], bool]:
    """Memoized predicate ``i -> esys.estates[i] |= f``."""
    key = ("holds", f, id(defs) if defs else None)
    fn = esys.cache.get(key)
    if fn is None:
        fn = esys.cache[key] = esys.lift_formula(f, defs)
    return fn


def satisfies(esys: EqualizedSystem, i: int, g: Formula, defs=None) -> bool:
    """True iff every member of ``i`` satisfies ``g``; ERR satisfies nothing."""
    return holds_fn(esys, g, defs)(i)


def placeholders(esys: EqualizedSystem, policy: PolicySpec, i: int) -> frozenset:
    """The placeholder atoms whose rule formula ``i`` satisfies."""
    return frozenset(p for p, f in policy.rules if satisfies(esys, i, f, policy.defs))


def eval_targets(esys: EqualizedSystem, policy: PolicySpec, i: int) -> tuple:
    """B(i): the targets the mapping assigns to the satisfied placeholders.

    Returns ``()`` when the placeholder set is unmapped and there is no
    ``otherwise`` entry; the verifier reads that as a dead end.
    """
    if i == ERR:
        return ()
    got = policy.mapping.get(placeholders(esys, policy, i))
    if got is None:
        got = policy.otherwise or ()
    return tuple(dict.fromkeys(got))


def step_set(esys: EqualizedSystem, states: Iterable[int], lab) -> frozenset:
    """One plan step applied to a set of equalized states."""
    out = set()
    for i in states:
        nxt = esys.step(i, lab)
        if nxt:
            out |= nxt
        else:
            out.add(ERR)
    return frozenset(out)


def res(esys: EqualizedSystem, i: int, sigma) -> frozenset:
    """Res(i, sigma) by the recursive case split."""
    if not sigma:
        return frozenset([i])
    if i == ERR:
        return frozenset([ERR])
    head, tail = sigma[0], sigma[1:]
    nxt = esys.step(i, head)
    if not nxt:
        return frozenset([ERR])
    out = set()
    for j in sorted(nxt):
        out |= res(esys, j, tail)
    return frozenset(out)


def res_prefixes(esys: EqualizedSystem, i: int, sigma) -> list:
    """Result sets after each prefix of ``sigma`` (length |sigma| + 1)."""
    cur = frozenset([i])
    out = [cur]
    for lab in sigma:
        cur = step_set(esys, cur, lab)
        out.append(cur)
    return out


def _check_bound(bound, max_bound):
    if bound < 0:
        raise ValueError("plan bound must be non-negative")
    if bound > max_bound:
        raise ResourceError("plan bound exceeds the configured maximum",
                            bound=bound, max_bound=max_bound)


def iter_conformant(esys: EqualizedSystem, i: int, holds, bound: int) -> Iterator[tuple]:
    """Conformant plans of length <= bound in length-then-lexicographic order."""
    labels = esys.labels
    memo: dict = {}

    def can(belief, r):
        k = (belief, r)
        v = memo.get(k)
        if v is None:
            if ERR in belief:
                v = False
            elif all(holds(j) for j in belief):
                v = True
            elif r == 0:
                v = False
            else:
                v = any(can(step_set(esys, belief, a), r - 1) for a in labels)
            memo[k] = v
        return v

    def exact(belief, r, prefix):
        if r == 0:
            if ERR not in belief and all(holds(j) for j in belief):
                yield prefix
            return
        for a in labels:
            nxt = step_set(esys, belief, a)
            if ERR in nxt or not _can_exact(nxt, r - 1):
                continue
            yield from exact(nxt, r - 1, prefix + (a,))

    exact_memo: dict = {}

    def _can_exact(belief, r):
        k = (belief, r)
        v = exact_memo.get(k)
        if v is None:
            if ERR in belief:
                v = False
            elif r == 0:
                v = all(holds(j) for j in belief)
            else:
                v = any(_can_exact(step_set(esys, belief, a), r - 1) for a in labels)
            exact_memo[k] = v
        return v

    start = frozenset([i])
    for length in range(bound + 1):
        if not can(start, bound):
            return
        yield from exact(start, length, ())


def reach0(esys: EqualizedSystem, i: int, g: Formula, bound: int, mode="all",
           defs=None, max_bound=MAX_PLAN_BOUND) -> list:
    """Every conformant plan for ``g`` from ``i`` of length <= bound.

    ``mode="shortest"`` keeps only the plans of minimal length.
    """
    _check_bound(bound, max_bound)
    holds = holds_fn(esys, g, defs)
    plans = []
    for p in iter_conformant(esys, i, holds, bound):
        if mode == "shortest" and plans and len(p) > len(plans[0]):
            break
        plans.append(p)
    return plans


def conformant_results(esys: EqualizedSystem, i: int, holds, bound: int, mode="all") -> frozenset:
    """Union of Res over all conformant plans, without listing the plans.

    Breadth-first over result sets; a set already seen at a smaller depth is
    not expanded again, which loses nothing for either mode.
    """
    start = frozenset([i])
    seen = {start}
    layer = [start]
    out = set()
    for depth in range(bound + 1):
        hit = [b for b in layer if all(holds(j) for j in b)]
        for b in hit:
            out |= b
        if mode == "shortest" and hit:
            break
        if depth == bound:
            break
        nxt = []
        for b in layer:
            for a in esys.labels:
                c = step_set(esys, b, a)
                if ERR in c or c in seen:
                    continue
                seen.add(c)
                nxt.append(c)
        if not nxt:
            break
        layer = sorted(nxt, key=sorted)
    return frozenset(out)


# -- planners --

class Planner:
    """Interface: ``plans(esys, i, target, bound, defs)`` -> list of plans."""

    name = "planner"

    def plans(self, esys, i, target, bound, defs=None) -> list:
        raise NotImplementedError

    def results(self, esys, i, target, bound, defs=None) -> frozenset:
        out = set()
        for p in self.plans(esys, i, target, bound, defs):
            out |= res(esys, i, p)
        return frozenset(out)


class Reach0(Planner):
    """The maximal bounded planner: all conformant plans (or the shortest ones)."""

    def __init__(self, mode="all", max_bound=MAX_PLAN_BOUND):
        if mode not in ("all", "shortest"):
            raise ValueError(f"unknown planner mode {mode!r}")
        self.mode = mode
        self.max_bound = max_bound
        self.name = "reach0" if mode == "all" else "reach0-shortest"

    def plans(self, esys, i, target, bound, defs=None):
        return reach0(esys, i, target, bound, self.mode, defs, self.max_bound)

    def results(self, esys, i, target, bound, defs=None):
        _check_bound(bound, self.max_bound)
        return conformant_results(esys, i, holds_fn(esys, target, defs), bound, self.mode)


class TruncatingPlanner(Planner):
    """Returns reach0's plans plus the last one with its final action cut off."""

    def __init__(self, base=None):
        self.base = base or Reach0()
        self.name = "mutant-truncate"

    def plans(self, esys, i, target, bound, defs=None):
        plans = list(self.base.plans(esys, i, target, bound, defs))
        longest = [p for p in plans if p]
        if longest:
            cut = longest[-1][:-1]
            if cut not in plans:
                plans.append(cut)
        return plans


class PrependingPlanner(Planner):
    """Adds a copy of the last plan preceded by an action inapplicable at ``i``."""

    def __init__(self, base=None):
        self.base = base or Reach0()
        self.name = "mutant-prepend"

    def plans(self, esys, i, target, bound, defs=None):
        plans = list(self.base.plans(esys, i, target, bound, defs))
        bad = next((a for a in esys.labels if not esys.step(i, a)), None)
        if plans and bad is not None:
            plans.append((bad,) + plans[-1])
        return plans


class DroppingPlanner(Planner):
    """Forgets every plan of length two or more."""

    def __init__(self, base=None):
        self.base = base or Reach0()
        self.name = "mutant-drop"

    def plans(self, esys, i, target, bound, defs=None):
        return [p for p in self.base.plans(esys, i, target, bound, defs) if len(p) < 2]


class EmptyPlanner(Planner):
    name = "empty"

    def plans(self, esys, i, target, bound, defs=None):
        return []


class ExternalPlanner(Planner):
    """Runs an executable speaking the JSON request/response protocol.

    Request on stdin: ``{"system", "state", "target", "bound"}``; the
    response on stdout is ``{"plans": [[label, ...], ...]}`` where a label is
    an action name or ``{a,b}`` for concurrent steps.
    """

    def __init__(self, path, timeout=30.0):
        self.path = str(path)
        self.timeout = timeout
        self.name = f"exec:{self.path}"

    def plans(self, esys, i, target, bound, defs=None):
        from .export import equalized_to_json
        if "json" not in esys.cache:
            esys.cache["json"] = equalized_to_json(esys)
        doc = {"system": esys.cache["json"],
               "state": esys.name(i), "target": to_text(target), "bound": bound}
        try:
            out = subprocess.run([self.path], input=json.dumps(doc, sort_keys=True),
                                 capture_output=True, text=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise PlannerError(f"planner {self.path} failed: {exc}", esys.name(i),
                               to_text(target)) from exc
        if out.returncode != 0:
            raise PlannerError(f"planner exited with status {out.returncode}",
                               esys.name(i), to_text(target))
        try:
            reply = json.loads(out.stdout)
            plans = [tuple(parse_label(a) for a in p) for p in reply["plans"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise PlannerError(f"malformed planner response: {exc}", esys.name(i),
                               to_text(target)) from exc
        known = set(esys.labels)
        for p in plans:
            for a in p:
                if a not in known:
                    raise PlannerError(f"unknown action label {label_text(a)}",
                                       esys.name(i), to_text(target))
        return plans


MUTANTS = {
    "truncate": TruncatingPlanner,
    "prepend": PrependingPlanner,
    "drop": DroppingPlanner,
    "empty": EmptyPlanner,
}


def make_planner(spec: str, timeout=30.0) -> Planner:
    """``builtin``/``reach0``, ``shortest``, ``mutant:<kind>`` or ``exec:<path>``."""
    if spec in ("builtin", "reach0"):
        return Reach0()
    if spec == "shortest":
        return Reach0("shortest")
    if spec.startswith("exec:"):
        return ExternalPlanner(spec[5:], timeout)
    if spec.startswith("mutant:") and spec[7:] in MUTANTS:
        return MUTANTS[spec[7:]]()
    raise ValueError(f"unknown planner {spec!r}")


def default_bound(esys: EqualizedSystem, policy: PolicySpec, bound=None) -> int:
    if bound is not None:
        return bound
    if policy.plan_bound is not None:
        return policy.plan_bound
    return len(esys.estates)


def phi_b(esys: EqualizedSystem, policy: PolicySpec, planner: Planner, i: int,
          bound: Optional[int] = None, use_cache=True) -> frozenset:
    """Phi_B(i): union of Res over every returned plan for every target of ``i``."""
    if i == ERR:
        return frozenset()
    bound = default_bound(esys, policy, bound)
    key = ("phi_b", planner.name, id(policy), bound, i)
    if use_cache and key in esys.cache:
        return esys.cache[key]
    out = set()
    for g in eval_targets(esys, policy, i):
        try:
            out |= planner.results(esys, i, g, bound, policy.defs)
        except PlannerError:
            raise
        except ResourceError:
            raise
        except Exception as exc:  # planner bugs surface with context
            raise PlannerError(f"planner {planner.name} raised {exc!r}", esys.name(i),
                               to_text(g)) from exc
    out = frozenset(out)
    if use_cache:
        esys.cache[key] = out
    return out


def edge_witness(esys, policy, planner, i, j, bound=None) -> Optional[tuple]:
    """The first (target, plan) whose result contains ``j``, in canonical order."""
    bound = default_bound(esys, policy, bound)
    for g in eval_targets(esys, policy, i):
        if isinstance(planner, Reach0):
            holds = holds_fn(esys, g, policy.defs)
            plans = iter_conformant(esys, i, holds, bound)
        else:
            plans = planner.plans(esys, i, g, bound, policy.defs)
        for p in plans:
            if j in res(esys, i, p):
                return g, p
    return None


def plan_text(plan) -> list:
    return [label_text(a) for a in plan]


def sort_plans(plans) -> list:
    return sorted(plans, key=lambda p: (len(p), [label_key(a) for a in p]))

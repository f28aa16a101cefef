"""Transition systems described by ground action descriptions.

States are the interpretations closed under the static laws.  A triple
(s, A, s') is a transition when s' is the only interpretation satisfying the
heads of every static law whose body holds in s' and every dynamic law whose
if-part holds in s' and whose after-part holds in s together with A.  With
literal heads, that amounts to: the applicable heads are consistent, contain
no ``false``, and mention every fluent with its value in s'.

Both searches below are depth-first over partial valuations with
unit propagation of law heads; every candidate is re-checked exactly
before being returned.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor

from ..core import TransitionSystem, label, label_key, make_system
from ..errors import ResourceError, SignatureError
from ..formula import FALSE, And, Atom, atoms, compile2, compile3, disj, literal_parts
from .model import ActionDescription, StaticLaw

log = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 200_000


class CompiledDescription:
    """Bit-level form of a ground action description."""

    def __init__(self, ad: ActionDescription):
        if not ad.is_ground:
            raise SignatureError("action description must be ground; call ground() first")
        self.ad = ad
        self.fluents = tuple(ad.fluent_names())
        self.actions = tuple(ad.action_names())
        self.n = len(self.fluents)
        self.full = (1 << self.n) - 1
        self.index = {f: i for i, f in enumerate(self.fluents)}
        self.joint_index = dict(self.index)
        for j, a in enumerate(self.actions):
            self.joint_index[a] = self.n + j

        self.hbit, self.hval, self.g3, self.g2, self.after = [], [], [], [], []
        self.is_static = []
        self.unwatched = []
        self.needs = []
        self.watch = [[] for _ in range(self.n)]
        self.by_head: dict = {}
        for law in ad.laws:
            li = len(self.hbit)
            if law.head == FALSE:
                self.hbit.append(-1)
                self.hval.append(0)
            else:
                a, pol = literal_parts(law.head)
                if a.key not in self.index:
                    raise SignatureError(f"law head {a.key} is not a declared fluent")
                self.hbit.append(self.index[a.key])
                self.hval.append(1 if pol else 0)
                self.by_head.setdefault((self.index[a.key], pol), []).append(li)
            cond = law.body if isinstance(law, StaticLaw) else law.condition
            self._check_atoms(cond, self.index, law)
            self.g3.append(compile3(cond, self.index))
            self.g2.append(compile2(cond, self.index))
            cond_atoms = atoms(cond)
            for a in cond_atoms:
                self.watch[self.index[a.key]].append(li)
            self.unwatched.append(not cond_atoms)
            if isinstance(law, StaticLaw):
                self.is_static.append(True)
                self.after.append(None)
                self.needs.append(frozenset())
            else:
                self._check_atoms(law.after, self.joint_index, law)
                self.is_static.append(False)
                self.after.append(compile2(law.after, self.joint_index))
                self.needs.append(self._required_actions(law.after))
        self.static_ids = [i for i, s in enumerate(self.is_static) if s]
        self._candidates: dict = {}
        # branch first on fluents that dynamic laws cause (the inertial,
        # primitive ones); static laws then fix the derived fluents by
        # propagation.  Ties go to fluents inspected by many law bodies.
        dyn_heads = {self.hbit[i] for i, st in enumerate(self.is_static) if not st}
        self.order = sorted(range(self.n),
                            key=lambda b: (b not in dyn_heads, -len(self.watch[b]), b))
        self.labels = self._labels()
        init = disj(*ad.initial) if ad.initial else None
        self.init3 = compile3(init, self.index) if init is not None else None
        self.init2 = compile2(init, self.index) if init is not None else None

    def _required_actions(self, after) -> frozenset:
        """Action atoms that must be executed for ``after`` to hold."""
        names = set(self.actions)
        parts = after.args if isinstance(after, And) else (after,)
        return frozenset(p.key for p in parts if isinstance(p, Atom) and p.key in names)

    def candidates(self, lab) -> list:
        """Dynamic laws whose after-part could hold under ``lab``."""
        got = self._candidates.get(lab)
        if got is None:
            got = [i for i, st in enumerate(self.is_static) if not st and self.needs[i] <= lab]
            self._candidates[lab] = got
        return got

    def _check_atoms(self, f, index, law):
        for a in atoms(f):
            if a.key not in index:
                raise SignatureError(f"line {law.line}: unknown atom {a.key}")

    def _labels(self):
        lo, hi = self.ad.concurrency
        out = []
        for k in range(lo, min(hi, len(self.actions)) + 1):
            out.extend(frozenset(c) for c in itertools.combinations(self.actions, k))
        return tuple(sorted(out, key=label_key))

    def action_mask(self, lab) -> int:
        m = 0
        for a in lab:
            if a not in self.joint_index or self.joint_index[a] < self.n:
                raise SignatureError(f"unknown action {a!r}")
            m |= 1 << self.joint_index[a]
        return m

    # -- search --
    def _search(self, active, support, extra3=None, limit=None):
        """Yield full valuations consistent with the active laws.

        ``active`` is a list of booleans over laws.  With ``support`` every
        fluent value must be the head of some applicable law.
        """
        full, order = self.full, self.order
        hbit, hval, g3, watch, by_head = self.hbit, self.hval, self.g3, self.watch, self.by_head
        act_ids = [i for i, on in enumerate(active) if on]
        unwatched = self.unwatched
        first = [i for i in act_ids if unwatched[i]]

        def supported(a, m, bit):
            val = bool(m >> bit & 1)
            for li in by_head.get((bit, val), ()):
                if active[li] and g3[li](a, m) is not False:
                    return True
            return False

        def propagate(a, m, pending):
            stack = list(pending or ())
            check = first if pending is None else None
            while True:
                if check is None:
                    if not stack:
                        return a, m
                    bit = stack.pop()
                    if support and not supported(a, m, bit):
                        return None
                    check = watch[bit]
                laws, check = check, None
                for li in laws:
                    if not active[li] or g3[li](a, m) is not True:
                        continue
                    hb = hbit[li]
                    if hb < 0:
                        return None
                    bit_mask = 1 << hb
                    if a & bit_mask:
                        if (m >> hb & 1) != hval[li]:
                            return None
                    else:
                        a |= bit_mask
                        if hval[li]:
                            m |= bit_mask
                        stack.append(hb)

        found = 0
        todo = [(0, 0, None)]
        while todo:
            a, m, pending = todo.pop()
            res = propagate(a, m, pending)
            if res is None:
                continue
            a, m = res
            if extra3 is not None and extra3(a, m) is False:
                continue
            if a == full:
                if self._exact(m, act_ids, support):
                    yield m
                    found += 1
                    if limit is not None and found > limit:
                        return
                continue
            bit = next(b for b in order if not a >> b & 1)
            b = 1 << bit
            todo.append((a | b, m | b, [bit]))
            todo.append((a | b, m, [bit]))

    def _exact(self, m, act_ids, support) -> bool:
        covered = 0
        g2 = self.g2
        for li in act_ids:
            if not g2[li](m):
                continue
            hb = self.hbit[li]
            if hb < 0 or (m >> hb & 1) != self.hval[li]:
                return False
            covered |= 1 << hb
        return covered == self.full if support else True

    def enumerate_states(self, initial_only=False, limit=None) -> list:
        """Clause (i): all interpretations satisfying every static law."""
        active = list(self.is_static)
        extra = self.init3 if initial_only else None
        out = []
        for m in self._search(active, False, extra, limit):
            out.append(m)
            if limit is not None and len(out) > limit:
                raise ResourceError("state-space budget exceeded", states=len(out), cap=limit)
        return sorted(out)

    def is_state(self, s: int) -> bool:
        return self._exact(s, self.static_ids, False)

    def is_initial(self, s: int) -> bool:
        return self.init2 is None or self.init2(s)

    def successors(self, s: int, lab) -> frozenset:
        """Clause (iii) for one (s, A) pair."""
        joint = s | self.action_mask(lab)
        active = list(self.is_static)
        after = self.after
        for i in self.candidates(lab):
            if after[i](joint):
                active[i] = True
        return frozenset(self._search(active, True))


def compile_description(ad: ActionDescription) -> CompiledDescription:
    cached = getattr(ad, "_compiled", None)
    if cached is None or cached[0] != len(ad.laws):
        cached = (len(ad.laws), CompiledDescription(ad))
        ad._compiled = cached
    return cached[1]


def transitions_of(ad: ActionDescription, s: int, A) -> frozenset:
    """Successor states of ``s`` under the action set ``A``, evaluated lazily."""
    cd = compile_description(ad)
    if not cd.is_state(s):
        raise SignatureError("not a legal state of the description")
    return cd.successors(s, label(A))


def build_transition_system(ad: ActionDescription, states="all",
                            max_states=DEFAULT_MAX_STATES, jobs=1) -> TransitionSystem:
    """Materialize the transition system described by a ground ``ad``.

    ``states="all"`` enumerates every legal interpretation; ``"reachable"``
    keeps only states reachable from the initial ones.
    """
    cd = compile_description(ad)
    if states == "all":
        S = cd.enumerate_states(limit=max_states)
        S0 = [s for s in S if cd.is_initial(s)]
        pairs = [(s, lab) for s in S for lab in cd.labels]
        results = _map(lambda p: cd.successors(*p), pairs, jobs)
        trans = {p: r for p, r in zip(pairs, results) if r}
    elif states == "reachable":
        S0 = cd.enumerate_states(initial_only=True, limit=max_states)
        seen = set(S0)
        trans = {}
        frontier = sorted(S0)
        while frontier:
            pairs = [(s, lab) for s in frontier for lab in cd.labels]
            results = _map(lambda p: cd.successors(*p), pairs, jobs)
            nxt = set()
            for p, r in zip(pairs, results):
                if r:
                    trans[p] = r
                    nxt |= r - seen
            seen |= nxt
            if len(seen) > max_states:
                raise ResourceError("state-space budget exceeded", states=len(seen), cap=max_states)
            frontier = sorted(nxt)
        S = sorted(seen)
    else:
        raise ValueError(f"unknown state mode {states!r}")
    log.debug("built %d states, %d transition keys", len(S), len(trans))
    return make_system(cd.fluents, cd.actions, S, S0, trans, labels=cd.labels)


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]

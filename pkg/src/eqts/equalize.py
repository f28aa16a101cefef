"""Classification functions, equalized state spaces and properness checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping, Optional

from .core import TransitionSystem, label_key, label_text
from .errors import SignatureError, TotalityError
from .formula import Formula, atoms, compile2, to_text

ERR = -1
"""Identifier of the absorbing error state; it satisfies no formula."""

DEFAULT_VIOLATION_CAP = 100


class Classification:
    """A total map h from concrete states to profile keys.

    Subclasses are bound to a fluent signature at construction.
    """

    kind = "custom"

    def key(self, s: int) -> Hashable:
        raise NotImplementedError

    def describe(self, key) -> object:
        """JSON-friendly rendering of a profile key."""
        return key

    def to_json(self) -> dict:
        return {"kind": self.kind}


class Type1(Classification):
    """Keep the values of ``retained`` fluents; every other fluent reads ``u``."""

    kind = "type1"

    def __init__(self, fluents, retained):
        self.fluents = tuple(fluents)
        index = {f: i for i, f in enumerate(self.fluents)}
        unknown = [f for f in retained if f not in index]
        if unknown:
            raise SignatureError(f"retained fluent {unknown[0]!r} is not in the signature")
        self.retained = tuple(sorted(set(retained)))
        self.mask = sum(1 << index[f] for f in self.retained)

    def key(self, s):
        return s & self.mask

    def profile(self, key) -> dict:
        """Three-valued profile: 't', 'f' or 'u' for every fluent."""
        retained = set(self.retained)
        out = {}
        for i, f in enumerate(self.fluents):
            if f in retained:
                out[f] = "t" if key >> i & 1 else "f"
            else:
                out[f] = "u"
        return out

    def describe(self, key):
        return {f: v for f, v in self.profile(key).items() if v != "u"}

    def to_json(self):
        return {"kind": self.kind, "retain": list(self.retained)}


class Type2(Classification):
    """Profile = truth values of auxiliary fluents defined by formulas."""

    kind = "type2"

    def __init__(self, fluents, aux):
        self.fluents = tuple(fluents)
        index = {f: i for i, f in enumerate(self.fluents)}
        self.aux = tuple(sorted(aux, key=lambda kv: kv[0]))
        for name, f in self.aux:
            for a in atoms(f):
                if a.key not in index:
                    raise SignatureError(f"aux {name}: {a.key!r} is not a fluent")
        self.names = tuple(name for name, _ in self.aux)
        self._preds = [compile2(f, index) for _, f in self.aux]

    def key(self, s):
        k = 0
        for i, p in enumerate(self._preds):
            if p(s):
                k |= 1 << i
        return k

    def describe(self, key):
        return [n for i, n in enumerate(self.names) if key >> i & 1]

    @cached_property
    def definitions(self) -> dict:
        return dict(self.aux)

    def to_json(self):
        return {"kind": self.kind, "aux": {n: to_text(f) for n, f in self.aux}}


class Custom(Classification):
    """Table lookup; the table must cover every state it is asked about."""

    kind = "custom"

    def __init__(self, table: Mapping[int, Hashable]):
        self.table = dict(table)

    def key(self, s):
        try:
            return self.table[s]
        except KeyError:
            raise TotalityError(f"classification table has no entry for state {s}") from None

    def to_json(self):
        return {"kind": self.kind}


def identity(ts: TransitionSystem) -> Type1:
    return Type1(ts.fluents, ts.fluents)


def constant(ts: TransitionSystem) -> Type1:
    return Type1(ts.fluents, ())


def classify(c: Classification, s: int) -> Hashable:
    """h(s): the profile key of the equalized state containing ``s``."""
    return c.key(s)


@dataclass(frozen=True)
class EqualizedState:
    id: int
    key: Hashable
    members: frozenset
    profile: object = None


@dataclass(frozen=True, eq=False)
class EqualizedSystem:
    """Equalized states, their initial subset and the lifted transition map.

    ``lifted`` maps ``(id, label)`` to successor ids and follows
    Phi^(s^, a) = {s^' | some member of s^' is a Phi(s, a)-successor of
    some member of s^}.  ``ERR`` is outside the partition and absorbing.
    """

    ts: TransitionSystem
    classification: Classification
    estates: tuple
    initial: frozenset
    lifted: Mapping = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    @cached_property
    def of_state(self) -> dict:
        return {s: e.id for e in self.estates for s in e.members}

    @cached_property
    def by_key(self) -> dict:
        return {e.key: e.id for e in self.estates}

    @property
    def ids(self) -> list:
        return [e.id for e in self.estates]

    @property
    def labels(self) -> tuple:
        return self.ts.labels

    def members(self, i: int) -> frozenset:
        if i == ERR:
            return frozenset()
        return self.estates[i].members

    def step(self, i: int, lab) -> frozenset:
        """Phi^(i, lab); the error state loops on every label."""
        if i == ERR:
            return frozenset([ERR])
        return self.lifted.get((i, lab), frozenset())

    def name(self, i: int) -> str:
        if i == ERR:
            return "err"
        return f"e{i}"

    def describe(self, i: int):
        if i == ERR:
            return "err"
        return self.classification.describe(self.estates[i].key)

    def lift_formula(self, f: Formula, defs: Optional[Mapping] = None):
        """Compile ``f`` into a predicate on equalized ids.

        Satisfaction is universal over members; ERR satisfies nothing.
        ``defs`` expands auxiliary atoms into their defining formulas.
        """
        from .formula import substitute
        if defs:
            f = substitute(f, defs)
        pred = compile2(f, self.ts.fluent_index)
        cache: dict = {}

        def holds(i):
            if i == ERR:
                return False
            r = cache.get(i)
            if r is None:
                r = cache[i] = all(pred(s) for s in self.estates[i].members)
            return r
        return holds


def build_equalized(ts: TransitionSystem, c: Classification) -> EqualizedSystem:
    """Partition ``ts.states`` by ``c`` and lift the transition map."""
    groups: dict = {}
    for s in ts.states:
        groups.setdefault(c.key(s), []).append(s)
    ordered = sorted(groups.items(), key=lambda kv: min(kv[1]))
    estates = []
    of_state = {}
    for i, (key, members) in enumerate(ordered):
        estates.append(EqualizedState(i, key, frozenset(members), c.describe(key)))
        for s in members:
            of_state[s] = i
    initial = frozenset(of_state[s] for s in ts.initial if s in of_state)
    lifted: dict = {}
    for (s, lab), succ in ts.transitions.items():
        tgt = lifted.setdefault((of_state[s], lab), set())
        tgt.update(of_state[t] for t in succ)
    lifted = {k: frozenset(v) for k, v in lifted.items()}
    return EqualizedSystem(ts, c, tuple(estates), initial, lifted)


@dataclass(frozen=True)
class Violation:
    condition: str
    source: int
    label: frozenset
    target: int
    witness: int

    def to_json(self, ts=None):
        w = ts.describe(self.witness) if ts is not None else self.witness
        return {"condition": self.condition, "from": f"e{self.source}",
                "label": label_text(self.label), "to": f"e{self.target}", "witness": w}


def _edges(es: EqualizedSystem):
    for (i, lab) in sorted(es.lifted, key=lambda k: (k[0], label_key(k[1]))):
        for j in sorted(es.lifted[(i, lab)]):
            yield i, lab, j


def check_proper(ts, c, cap=DEFAULT_VIOLATION_CAP, es=None) -> list:
    """Condition (1): every member of a lifted target has a predecessor in the source."""
    es = es or build_equalized(ts, c)
    pre = ts.predecessors
    out = []
    for i, lab, j in _edges(es):
        src = es.estates[i].members
        for t in sorted(es.estates[j].members):
            if not (pre.get((t, lab), frozenset()) & src):
                out.append(Violation("proper", i, lab, j, t))
                if len(out) >= cap:
                    return out
    return out


def check_strong_proper(ts, c, cap=DEFAULT_VIOLATION_CAP, es=None) -> list:
    """Condition (2): every member of a lifted source has a successor in the target."""
    es = es or build_equalized(ts, c)
    out = []
    for i, lab, j in _edges(es):
        tgt = es.estates[j].members
        for s in sorted(es.estates[i].members):
            if not (ts.transitions.get((s, lab), frozenset()) & tgt):
                out.append(Violation("strong-proper", i, lab, j, s))
                if len(out) >= cap:
                    return out
    return out


def check_initial_clustering(ts, c, es=None) -> bool:
    """True iff no equalized state mixes initial and non-initial members."""
    es = es or build_equalized(ts, c)
    for e in es.estates:
        if e.members & ts.initial and not e.members <= ts.initial:
            return False
    return True


def to_dot(es: EqualizedSystem, name="equalized", edges=None) -> str:
    """DOT rendering with profile labels.

    ``edges`` defaults to the lifted relation; pass policy edges as
    ``{id: set(ids)}`` to draw the policy graph instead.
    """
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    for e in es.estates:
        prof = es.describe(e.id)
        if isinstance(prof, dict):
            prof = ", ".join(f"{k}={v}" for k, v in prof.items())
        elif isinstance(prof, (list, tuple)):
            prof = ", ".join(map(str, prof))
        text = f"e{e.id} ({len(e.members)})\\n{prof}".replace('"', "'")
        extra = ", peripheries=2" if e.id in es.initial else ""
        lines.append(f'  e{e.id} [label="{text}"{extra}];')
    if edges is None:
        for i, lab, j in _edges(es):
            lines.append(f'  e{i} -> {es.name(j)} [label="{label_text(lab)}"];')
    else:
        used_err = False
        for i in sorted(edges):
            for j in sorted(edges[i]):
                used_err |= j == ERR
                lines.append(f"  {es.name(i)} -> {es.name(j)};")
        if used_err:
            lines.append('  err [shape=octagon, label="err"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

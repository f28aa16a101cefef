"""Explicit transition systems over propositional states.

A state is an ``int`` bit mask: bit ``i`` holds the value of ``fluents[i]``
(fluents are kept in lexicographic order).  A transition label is a
``frozenset`` of elementary action names, so sequential and concurrent
execution share one representation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Union

from .errors import SignatureError

Label = frozenset
LabelLike = Union[str, Iterable[str]]


def label(x: LabelLike) -> Label:
    """Normalize an action name or a collection of names into a label."""
    if isinstance(x, frozenset):
        return x
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


def label_key(lab: Label):
    """Canonical label order: by size, then by sorted names."""
    return (len(lab), sorted(lab))


def label_text(lab: Label) -> str:
    if len(lab) == 1:
        return next(iter(lab))
    return "{" + ",".join(sorted(lab)) + "}"


def parse_label(text: str) -> Label:
    text = text.strip()
    if text.startswith("{"):
        inner = text[1:-1].strip()
        return frozenset(p.strip() for p in inner.split(",") if p.strip())
    return frozenset([text])


@dataclass(frozen=True)
class Trajectory:
    """``start`` followed by (label, state) steps."""

    start: int
    steps: tuple = ()

    @property
    def end(self) -> int:
        return self.steps[-1][1] if self.steps else self.start

    @property
    def actions(self) -> tuple:
        return tuple(a for a, _ in self.steps)

    @property
    def states(self) -> tuple:
        return (self.start,) + tuple(s for _, s in self.steps)

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """The tuple (S, S0, A, Phi) with an explicit sparse transition map.

    ``transitions`` maps ``(state, label)`` to the frozenset of successors;
    missing keys mean the label is not executable in that state.
    """

    fluents: tuple
    actions: tuple
    labels: tuple
    states: tuple
    initial: frozenset
    transitions: Mapping = field(default_factory=dict)

    @cached_property
    def state_set(self) -> frozenset:
        return frozenset(self.states)

    @cached_property
    def fluent_index(self) -> dict:
        return {f: i for i, f in enumerate(self.fluents)}

    @cached_property
    def predecessors(self) -> dict:
        """Map ``(state, label)`` to the states that reach it under ``label``."""
        pre: dict = {}
        for (s, lab), succ in self.transitions.items():
            for t in succ:
                pre.setdefault((t, lab), set()).add(s)
        return {k: frozenset(v) for k, v in pre.items()}

    def n_transitions(self) -> int:
        return sum(len(v) for v in self.transitions.values())

    def true_fluents(self, s: int) -> list:
        return [f for i, f in enumerate(self.fluents) if s >> i & 1]

    def state(self, true: Iterable[str]) -> int:
        """Encode the state in which exactly ``true`` fluents hold."""
        m = 0
        for f in true:
            try:
                m |= 1 << self.fluent_index[f]
            except KeyError:
                raise SignatureError(f"unknown fluent {f!r}") from None
        return m

    def bits(self, s: int) -> str:
        return "".join("1" if s >> i & 1 else "0" for i in range(len(self.fluents)))

    def from_bits(self, bits: str) -> int:
        if len(bits) != len(self.fluents) or set(bits) - {"0", "1"}:
            raise SignatureError(f"malformed state bitstring {bits!r}")
        return sum(1 << i for i, c in enumerate(bits) if c == "1")

    def describe(self, s: int) -> str:
        return "{" + ", ".join(self.true_fluents(s)) + "}"

    def _check(self, s, lab=None):
        if s not in self.state_set:
            raise SignatureError(f"state {self.describe(s)} is not in the system")
        if lab is not None and lab not in self.labels:
            raise SignatureError(f"unknown action label {label_text(lab)}")


def successors(ts: TransitionSystem, s: int, a: LabelLike) -> frozenset:
    """Phi(s, a); empty iff ``a`` is not executable at ``s``."""
    lab = label(a)
    ts._check(s, lab)
    return ts.transitions.get((s, lab), frozenset())


def execute(ts: TransitionSystem, s: int, sigma) -> frozenset:
    """All states reachable from ``s`` by running ``sigma`` step by step."""
    ts._check(s)
    current = frozenset([s])
    for a in sigma:
        lab = label(a)
        ts._check(s, lab)
        nxt = set()
        for t in current:
            nxt |= ts.transitions.get((t, lab), frozenset())
        current = frozenset(nxt)
        if not current:
            break
    return current


def trajectory_exists(ts: TransitionSystem, s: int, target: int) -> Optional[Trajectory]:
    """A shortest trajectory from ``s`` to ``target`` or None.

    Breadth-first; labels are tried in canonical order and successors in
    ascending state order, so the result is reproducible.
    """
    ts._check(s)
    ts._check(target)
    parent = {s: None}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == target:
            steps = []
            while parent[u] is not None:
                prev, lab = parent[u]
                steps.append((lab, u))
                u = prev
            return Trajectory(s, tuple(reversed(steps)))
        for lab in ts.labels:
            for v in sorted(ts.transitions.get((u, lab), ())):
                if v not in parent:
                    parent[v] = (u, lab)
                    queue.append(v)
    return None


def replay(ts: TransitionSystem, traj: Trajectory) -> bool:
    """True iff every step of ``traj`` is a transition of ``ts``."""
    cur = traj.start
    if cur not in ts.state_set:
        return False
    for lab, nxt in traj.steps:
        if nxt not in ts.transitions.get((cur, label(lab)), ()):
            return False
        cur = nxt
    return True


def validate(ts: TransitionSystem) -> list:
    """List invariant violations; empty when the system is well formed."""
    problems = []
    width = len(ts.fluents)
    if list(ts.fluents) != sorted(set(ts.fluents)):
        problems.append("fluents are not unique and sorted")
    names = set(ts.actions)
    for lab in ts.labels:
        if not lab <= names:
            problems.append(f"label {label_text(lab)} uses undeclared actions")
    for s in ts.states:
        if s < 0 or s >> width:
            problems.append(f"state {s} exceeds the fluent signature")
    for s in sorted(ts.initial):
        if s not in ts.state_set:
            problems.append(f"initial state {ts.bits(s) if s >= 0 else s} is not in states")
    for (s, lab), succ in sorted(ts.transitions.items(), key=lambda kv: (kv[0][0], label_key(kv[0][1]))):
        if s not in ts.state_set:
            problems.append(f"transition source {s} is not in states")
        if lab not in ts.labels:
            problems.append(f"transition label {label_text(lab)} is not declared")
        for t in sorted(succ):
            if t not in ts.state_set:
                problems.append(f"transition {s} -{label_text(lab)}-> {t}: endpoint not in states")
    return problems


def make_system(fluents, actions, states, initial, transitions, labels=None) -> TransitionSystem:
    """Build a system, sorting everything into canonical order."""
    fluents = tuple(fluents)
    actions = tuple(sorted(actions))
    trans = {}
    for (s, a), succ in transitions.items():
        succ = frozenset(succ)
        if succ:
            trans[(s, label(a))] = succ
    if labels is None:
        labels = {lab for (_, lab) in trans} | {frozenset([a]) for a in actions}
    labels = tuple(sorted({label(l) for l in labels}, key=label_key))
    return TransitionSystem(fluents, actions, labels, tuple(sorted(set(states))),
                            frozenset(initial), trans)


def to_json(ts: TransitionSystem) -> dict:
    """The explicit-TS interchange document."""
    index = {s: i for i, s in enumerate(ts.states)}
    transitions = []
    for s in ts.states:
        for lab in ts.labels:
            for t in sorted(ts.transitions.get((s, lab), ())):
                transitions.append({"from": index[s], "label": sorted(lab), "to": index[t]})
    return {
        "fluents": list(ts.fluents),
        "actions": list(ts.actions),
        "labels": [sorted(l) for l in ts.labels],
        "states": [ts.bits(s) for s in ts.states],
        "initial": sorted(index[s] for s in ts.initial),
        "transitions": transitions,
    }


def from_json(doc: dict) -> TransitionSystem:
    fluents = list(doc["fluents"])
    if fluents != sorted(set(fluents)):
        raise SignatureError("fluents must be unique and sorted")
    proto = TransitionSystem(tuple(fluents), (), (), (), frozenset(), {})
    states = [proto.from_bits(b) for b in doc["states"]]
    trans: dict = {}
    for t in doc["transitions"]:
        key = (states[t["from"]], frozenset(t["label"]))
        trans.setdefault(key, set()).add(states[t["to"]])
    labels = doc.get("labels")
    return make_system(fluents, doc["actions"], states,
                       [states[i] for i in doc["initial"]], trans,
                       labels=[frozenset(l) for l in labels] if labels is not None else None)


def to_dot(ts: TransitionSystem, name="ts") -> str:
    """DOT rendering: nodes labelled by true fluents, edges by action sets."""
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    index = {s: i for i, s in enumerate(ts.states)}
    for s in ts.states:
        text = "\\n".join(ts.true_fluents(s)) or "(none)"
        extra = ", peripheries=2" if s in ts.initial else ""
        lines.append(f'  s{index[s]} [label="{text}"{extra}];')
    for s in ts.states:
        for lab in ts.labels:
            for t in sorted(ts.transitions.get((s, lab), ())):
                lines.append(f'  s{index[s]} -> s{index[t]} [label="{label_text(lab)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

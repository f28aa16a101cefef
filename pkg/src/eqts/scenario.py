"""Scenario files (``.scn``): classification, policy rules, goal and plan bound.

Grammar (statements end in ``.`` or ``;``)::

    description "domain.cal".
    states all | reachable.
    concurrency <min>..<max>.
    classify type1 retain { pattern, ... }.
    classify type2 { aux <atom> := <formula>; ... }.
    rule <atom>: <formula>.
    map {<atom>, ...} -> {<target> | <target> ...}.
    otherwise -> {<target> | ...}.
    goal <formula>.
    planbound <k>.

Variables in ``aux``, ``rule`` and ``map`` heads are instantiated over the
domains their typed atoms imply.  Variables occurring only in a body are
read existentially.  A target that needs a top-level ``|`` must be
parenthesized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import CalSyntaxError, GroundingError
from .formula import FALSE, Atom, Formula, Var, atoms, variables
from .langc.ground import Grounder, ground
from .langc.model import ActionDescription
from .langc.parser import parse_file
from .langc.syntax import TokenParser


@dataclass
class RawScenario:
    filename: Optional[str] = None
    description: Optional[str] = None
    states: str = "all"
    concurrency: Optional[tuple] = None
    classify: Optional[tuple] = None  # ("type1", [Atom]) or ("type2", [(Atom, Formula)])
    rules: list = field(default_factory=list)  # (Atom, Formula, line, col)
    mapping: list = field(default_factory=list)  # ([Atom], [Formula], line, col)
    otherwise: Optional[list] = None
    goal: Optional[Formula] = None
    planbound: Optional[int] = None


class ScnParser(TokenParser):

    def __init__(self, text, filename=None):
        super().__init__(text, filename)
        self.scn = RawScenario(filename=filename)

    def parse(self) -> RawScenario:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "ident":
                raise self.error(f"expected a statement, found {t.value or 'end of input'!r}")
            handler = getattr(self, f"stmt_{t.value}", None)
            if handler is None:
                raise self.error(f"unknown statement {t.value!r}")
            self.advance()
            handler()
        if self.scn.description is None:
            raise self.error("missing 'description' statement")
        if self.scn.goal is None:
            raise self.error("missing 'goal' statement")
        return self.scn

    def stmt_description(self):
        self.scn.description = self.expect_kind("string", "a quoted file name").value
        self.end_statement()

    def stmt_states(self):
        t = self.expect_kind("ident", "'all' or 'reachable'")
        if t.value not in ("all", "reachable"):
            raise self.error("expected 'all' or 'reachable'", t)
        self.scn.states = t.value
        self.end_statement()

    def stmt_concurrency(self):
        lo = int(self.expect_kind("int", "an integer").value)
        hi = int(self.expect_kind("int", "an integer").value) if self.accept("..") else lo
        self.end_statement()
        self.scn.concurrency = (lo, hi)

    def stmt_classify(self):
        if self.scn.classify is not None:
            raise self.error("only one classify block is allowed")
        kind = self.expect_kind("ident", "'type1' or 'type2'")
        if kind.value == "type1":
            retain = self.expect_kind("ident", "'retain'")
            if retain.value != "retain":
                raise self.error("expected 'retain'", retain)
            self.expect("{")
            pats = []
            if not self.at("}"):
                pats.append(self.atom())
                while self.accept(","):
                    pats.append(self.atom())
            self.expect("}")
            self.scn.classify = ("type1", pats)
        elif kind.value == "type2":
            self.expect("{")
            defs = []
            while not self.at("}"):
                word = self.expect_kind("ident", "'aux'")
                if word.value != "aux":
                    raise self.error("expected 'aux'", word)
                head = self.atom()
                self.expect(":=")
                defs.append((head, self.formula(), word.line, word.col))
                self.end_statement()
            self.expect("}")
            self.scn.classify = ("type2", defs)
        else:
            raise self.error("expected 'type1' or 'type2'", kind)
        self.accept(".") or self.accept(";")

    def stmt_rule(self):
        start = self.tok
        head = self.atom()
        self.expect(":")
        self.scn.rules.append((head, self.formula(), start.line, start.col))
        self.end_statement()

    def stmt_map(self):
        start = self.tok
        self.expect("{")
        keys = []
        if not self.at("}"):
            keys.append(self.atom())
            while self.accept(","):
                keys.append(self.atom())
        self.expect("}")
        self.expect("->")
        self.scn.mapping.append((keys, self.targets(), start.line, start.col))
        self.end_statement()

    def stmt_otherwise(self):
        self.expect("->")
        self.scn.otherwise = self.targets()
        self.end_statement()

    def targets(self):
        self.expect("{")
        out = [self.formula(allow_or=False)]
        while self.accept("|"):
            out.append(self.formula(allow_or=False))
        self.expect("}")
        return out

    def stmt_goal(self):
        self.scn.goal = self.formula()
        self.end_statement()

    def stmt_planbound(self):
        self.scn.planbound = int(self.expect_kind("int", "an integer").value)
        self.end_statement()


def parse_scenario(text: str, filename=None) -> RawScenario:
    return ScnParser(text, filename).parse()


@dataclass(frozen=True)
class PolicySpec:
    """Ground target rules, mapping, main goal and aux definitions.

    All formulas range over the equalized signature: concrete fluents plus
    the auxiliary atoms whose definitions live in ``defs``.
    """

    rules: tuple  # (placeholder key, Formula)
    mapping: dict  # frozenset of placeholder keys -> tuple of target Formulas
    goal: Formula
    otherwise: Optional[tuple] = None
    defs: dict = field(default_factory=dict)
    plan_bound: Optional[int] = None


class Scenario:
    """A parsed scenario together with its (schematic and ground) description."""

    def __init__(self, raw: RawScenario, ad: ActionDescription, base_dir=None):
        self.raw = raw
        self.schematic = ad
        if raw.concurrency is not None:
            ad.concurrency = raw.concurrency
        self.ad = ground(ad)
        self.base_dir = base_dir
        self.grounder = Grounder(ad, raw.filename)
        self.fluents = set(self.grounder.fluent_keys)
        self.aux_defs: dict = {}
        self.retained: list = []
        self._ground_classification()
        self.placeholders: list = []
        self.rules = self._ground_rules()
        self.policy = self._ground_policy()

    @property
    def states_mode(self):
        return self.raw.states

    def _where(self, line, col):
        return (line, col)

    def _instances(self, head: Atom, body: Formula, line, col):
        """Yield (ground head args, ground body) for every head instance."""
        g = self.grounder
        head_vars = [v for v in variables(head)]
        if not head_vars:
            args = tuple(g.term_value(a, {}) for a in head.args)
            yield args, g.ground_closed(body, {}, (line, col))
            return
        doms = g.var_domains([body], (line, col))
        missing = [v for v in head_vars if v not in doms]
        if missing:
            raise GroundingError(f"head variable {missing[0]} does not occur in the body",
                                 line, col, self.raw.filename)
        for combo in itertools.product(*(doms[v] for v in head_vars)):
            theta = dict(zip(head_vars, combo))
            args = tuple(g.term_value(a, theta) for a in head.args)
            yield args, g.ground_closed(body, theta, (line, col))

    def _ground_classification(self):
        cls = self.raw.classify
        if cls is None:
            self.retained = sorted(self.fluents)
            return
        kind, items = cls
        if kind == "type1":
            keys = set()
            for pat in items:
                matched = [k for k in self.fluents if _matches(pat, k)]
                if not matched:
                    raise GroundingError(f"retain pattern {pat} matches no fluent",
                                         filename=self.raw.filename)
                keys.update(matched)
            self.retained = sorted(keys)
            return
        for head, body, line, col in items:
            for a in atoms(body):
                if self.grounder.kind.get(a.name) not in (None, "fluent", "static"):
                    raise GroundingError(f"aux definitions may only mention fluents ({a.name})",
                                         line, col, self.raw.filename)
            found = []
            for args, gbody in self._instances(head, body, line, col):
                if gbody == FALSE:
                    continue
                key = Atom(head.name, args).key
                if key in self.fluents or key in self.aux_defs:
                    raise GroundingError(f"aux {key} is already defined", line, col,
                                         self.raw.filename)
                self.aux_defs[key] = gbody
                found.append(args)
            self.grounder.add_predicate(head.name, "aux", found)

    def _ground_rules(self):
        out = []
        for head, body, line, col in self.raw.rules:
            found = []
            for args, gbody in self._instances(head, body, line, col):
                self._check_signature(gbody, line, col)
                if gbody == FALSE:
                    continue
                key = Atom(head.name, args).key
                out.append((key, gbody))
                found.append(args)
            self.grounder.add_predicate(head.name, "placeholder", found)
            self.placeholders.extend(Atom(head.name, a).key for a in found)
        return tuple(out)

    def _check_signature(self, f, line, col):
        for a in atoms(f):
            if a.key not in self.fluents and a.key not in self.aux_defs:
                raise GroundingError(f"{a.key} is neither a fluent nor an aux atom",
                                     line, col, self.raw.filename)

    def _ground_target(self, f, theta, line, col):
        g = self.grounder.ground_closed(f, theta, (line, col))
        self._check_signature(g, line, col)
        return g

    def _ground_policy(self) -> PolicySpec:
        g = self.grounder
        placeholders = set(self.placeholders)
        mapping: dict = {}
        for keys, targets, line, col in self.raw.mapping:
            key_vars = []
            for k in keys:
                for v in variables(k):
                    if v not in key_vars:
                        key_vars.append(v)
            doms = g.var_domains(keys, (line, col)) if key_vars else {}
            for combo in itertools.product(*(doms[v] for v in key_vars)):
                theta = dict(zip(key_vars, combo))
                ground_keys = []
                for k in keys:
                    gk = Atom(k.name, tuple(g.term_value(a, theta) for a in k.args)).key
                    ground_keys.append(gk)
                if any(k not in placeholders for k in ground_keys):
                    if not key_vars:
                        bad = next(k for k in ground_keys if k not in placeholders)
                        raise GroundingError(f"map key {bad} is not a rule placeholder",
                                             line, col, self.raw.filename)
                    continue
                tgts = tuple(self._ground_target(t, theta, line, col) for t in targets)
                mapping[frozenset(ground_keys)] = tgts
        otherwise = None
        if self.raw.otherwise is not None:
            otherwise = tuple(self._ground_target(t, {}, None, None) for t in self.raw.otherwise)
        goal = self._ground_target(self.raw.goal, {}, None, None)
        return PolicySpec(self.rules, mapping, goal, otherwise, dict(self.aux_defs),
                          self.raw.planbound)

    def classification(self, fluents):
        """The classification object bound to the system's fluent order."""
        from .equalize import Type1, Type2
        if self.raw.classify is not None and self.raw.classify[0] == "type2":
            return Type2(fluents, list(self.aux_defs.items()))
        return Type1(fluents, self.retained)


def _matches(pattern: Atom, key: str) -> bool:
    name, _, rest = key.partition("(")
    if name != pattern.name:
        return False
    args = rest.rstrip(")").split(",") if rest else []
    if len(args) != len(pattern.args):
        return False
    theta: dict = {}
    for p, a in zip(pattern.args, args):
        if isinstance(p, Var):
            if p.name == "_":
                continue
            if theta.setdefault(p.name, a) != a:
                return False
        elif p != a:
            return False
    return True


def load_scenario(path, concurrency_cap=None) -> Scenario:
    """Parse a ``.scn`` file and the ``.cal`` description it names."""
    path = Path(path)
    raw = parse_scenario(path.read_text(), str(path))
    cal = path.parent / raw.description
    if not cal.exists():
        raise CalSyntaxError(f"description file {raw.description!r} not found",
                             filename=str(path))
    ad = parse_file(cal)
    if concurrency_cap is not None:
        lo, _ = raw.concurrency or ad.concurrency
        raw.concurrency = (min(lo, concurrency_cap), concurrency_cap)
    return Scenario(raw, ad, path.parent)

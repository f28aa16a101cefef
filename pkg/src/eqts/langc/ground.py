"""Instantiate schematic action descriptions over their finite domains."""

from __future__ import annotations

import itertools
from typing import Optional

from ..errors import GroundingError
from ..formula import (FALSE, TRUE, And, Atom, Compare, Const, Formula, Implies,
                       Not, Or, Var, conj, disj, neg, variables)
from .model import ActionDescription, Decl, DynamicLaw, Param, StaticLaw

_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _as_value(c: str):
    return int(c) if c.lstrip("-").isdigit() else c


def order_key(c: str):
    """Integers numerically first, then symbols alphabetically."""
    v = _as_value(c)
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


class Grounder:
    """Typing environment plus ground-time evaluation of guards.

    ``add_predicate`` registers further ground atoms, used for auxiliary and
    placeholder fluents of scenario files.
    """

    def __init__(self, ad: ActionDescription, filename=None):
        self.ad = ad
        self.filename = filename or ad.filename
        self.positions: dict = {}
        self.kind: dict = {}
        self.keys: set = set()
        self.fluent_keys: list = []
        self.action_keys: list = []
        for rel, facts in ad.statics.items():
            self._register(rel, "static", facts)
        self.fluent_keys = self._declare(ad.fluents, "fluent")
        self.action_keys = self._declare(ad.actions, "action")

    def _register(self, name, kind, arg_tuples):
        prev = self.kind.get(name)
        if prev is not None and prev != kind:
            raise GroundingError(f"{name!r} used both as {prev} and {kind}",
                                 filename=self.filename)
        self.kind[name] = kind
        slots = self.positions.setdefault(name, [])
        for args in arg_tuples:
            while len(slots) < len(args):
                slots.append(set())
            for i, a in enumerate(args):
                slots[i].add(a)

    def _declare(self, decls, kind) -> list:
        out = []
        for d in decls:
            for args in self._decl_instances(d):
                key = Atom(d.name, args).key
                if key not in self.keys:
                    self.keys.add(key)
                    out.append(key)
                self._register(d.name, kind, [args])
            if not d.params:
                self._register(d.name, kind, [()])
        return sorted(out)

    def _decl_instances(self, d: Decl):
        domains = []
        names = []
        for p in d.params:
            if p.const is not None:
                domains.append((p.const,))
            else:
                if p.type not in self.ad.domains:
                    raise GroundingError(f"unknown type {p.type!r} in declaration of {d.name}",
                                         d.line, d.col, self.filename)
                domains.append(self.ad.domains[p.type])
            names.append(p.var)
        for combo in itertools.product(*domains):
            if d.guard is not None:
                theta = {n: v for n, v in zip(names, combo) if n is not None}
                missing = [v for v in variables(d.guard) if v not in theta]
                if missing:
                    raise GroundingError(f"guard of {d.name} mentions unbound variable {missing[0]}",
                                         d.line, d.col, self.filename)
                if self.ground(d.guard, theta) != TRUE:
                    continue
            yield tuple(combo)

    def add_predicate(self, name, kind, keys_args):
        """Register derived ground atoms given as (args tuple) items."""
        for args in keys_args:
            self.keys.add(Atom(name, tuple(args)).key)
        self._register(name, kind, keys_args)

    # -- typing --
    def var_domains(self, formulas, where=(None, None)) -> dict:
        """Infer the finite domain of every variable from its atom positions."""
        doms: dict = {}
        order: list = []
        for f in formulas:
            for v in variables(f):
                if v not in order:
                    order.append(v)
            self._infer(f, doms)
        out = {}
        for v in order:
            if v not in doms:
                raise GroundingError(f"unbounded variable {v}: it occurs in no typed atom",
                                     where[0], where[1], self.filename)
            out[v] = sorted(doms[v], key=order_key)
        return out

    def _infer(self, f, doms):
        if isinstance(f, Atom):
            slots = self.positions.get(f.name)
            if slots is None:
                return
            for i, a in enumerate(f.args):
                if isinstance(a, Var) and a.name != "_" and i < len(slots):
                    cur = doms.get(a.name)
                    doms[a.name] = set(slots[i]) if cur is None else cur & slots[i]
        elif isinstance(f, Not):
            self._infer(f.arg, doms)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                self._infer(a, doms)
        elif isinstance(f, Implies):
            self._infer(f.left, doms)
            self._infer(f.right, doms)

    # -- instantiation --
    def term_value(self, t, theta) -> str:
        if isinstance(t, str):
            return t
        if isinstance(t, Var):
            if t.name not in theta:
                raise GroundingError(f"unbound variable {t.name}", filename=self.filename)
            return theta[t.name]
        base = self.term_value(t.var, theta)
        if not base.lstrip("-").isdigit():
            raise GroundingError(f"arithmetic on non-integer constant {base!r}",
                                 filename=self.filename)
        return str(int(base) + t.offset)

    def ground(self, f: Formula, theta: dict) -> Formula:
        """Instantiate ``f`` under ``theta``, evaluating statics and comparisons.

        Atoms of declared predicates whose instance was excluded by a
        declaration guard become ``false``.
        """
        if isinstance(f, Const):
            return f
        if isinstance(f, Compare):
            a = _as_value(self.term_value(f.left, theta))
            b = _as_value(self.term_value(f.right, theta))
            if type(a) is not type(b) and f.op not in ("=", "!="):
                raise GroundingError(f"cannot order {a!r} and {b!r}", filename=self.filename)
            return TRUE if _CMP[f.op](a, b) else FALSE
        if isinstance(f, Atom):
            args = tuple(self.term_value(a, theta) for a in f.args)
            kind = self.kind.get(f.name)
            if kind is None:
                raise GroundingError(f"undeclared predicate {f.name!r}", filename=self.filename)
            if kind == "static":
                return TRUE if args in self.ad.statics.get(f.name, ()) else FALSE
            g = Atom(f.name, args)
            return g if g.key in self.keys else FALSE
        if isinstance(f, Not):
            return neg(self.ground(f.arg, theta))
        if isinstance(f, And):
            return conj(*(self.ground(a, theta) for a in f.args))
        if isinstance(f, Or):
            return disj(*(self.ground(a, theta) for a in f.args))
        if isinstance(f, Implies):
            return disj(neg(self.ground(f.left, theta)), self.ground(f.right, theta))
        raise TypeError(f)

    def ground_closed(self, f: Formula, theta: Optional[dict] = None, where=(None, None)) -> Formula:
        """Ground ``f`` treating variables not in ``theta`` as existential."""
        theta = dict(theta or {})
        free = [v for v in variables(f) if v not in theta]
        if not free:
            return self.ground(f, theta)
        doms = self.var_domains([f], where)
        parts = []
        for combo in itertools.product(*(doms[v] for v in free)):
            theta.update(zip(free, combo))
            parts.append(self.ground(f, theta))
        return disj(*parts)

    def instantiations(self, formulas, where=(None, None)):
        """Yield every substitution over the variables of ``formulas``."""
        doms = self.var_domains(formulas, where)
        names = list(doms)
        for combo in itertools.product(*(doms[v] for v in names)):
            yield dict(zip(names, combo))


def ground(ad: ActionDescription) -> ActionDescription:
    """Return a variable-free copy of ``ad``.

    Every law is instantiated over the product of its variable domains;
    instances whose guard, body or after-part is false are dropped, as are
    instances whose head names an excluded fluent (a negated excluded fluent
    grounds to ``true`` and constrains nothing).
    """
    g = Grounder(ad)
    laws = []
    seen = set()
    for law in ad.laws:
        where = (law.line, law.col)
        parts = ([law.head, law.body] if isinstance(law, StaticLaw)
                 else [law.head, law.condition, law.after])
        for theta in g.instantiations(parts, where):
            head = g.ground(law.head, theta)
            if (law.head != FALSE and head == FALSE) or head == TRUE:
                continue
            rest = [g.ground(p, theta) for p in parts[1:]]
            if any(r == FALSE for r in rest):
                continue
            if isinstance(law, StaticLaw):
                new = StaticLaw(head, rest[0], law.line, law.col)
            else:
                new = DynamicLaw(head, rest[0], rest[1], law.line, law.col)
            sig = str(new)
            if sig not in seen:
                seen.add(sig)
                laws.append(new)
    initial = []
    for f in ad.initial:
        initial.append(g.ground_closed(f))
    return ActionDescription(
        domains={},
        fluents=[_ground_decl(k) for k in g.fluent_keys],
        actions=[_ground_decl(k) for k in g.action_keys],
        statics={},
        laws=laws,
        initial=initial,
        concurrency=ad.concurrency,
        filename=ad.filename,
    )


def _ground_decl(key: str) -> Decl:
    if "(" not in key:
        return Decl(key)
    name, rest = key.split("(", 1)
    return Decl(name, tuple(Param(const=c) for c in rest.rstrip(")").split(",")))

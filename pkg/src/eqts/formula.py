"""Propositional formulas over fluent and action atoms.

Formulas are immutable trees.  Before grounding, atom arguments may be
variables; after grounding every atom is identified by its ``key`` (for
example ``on(b1,b2)``).  Evaluation works on integer bit masks: bit ``i`` is
the value of the atom with index ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Shift:
    """Integer offset applied to a variable, e.g. ``X+1``."""

    var: Var
    offset: int

    def __str__(self):
        sign = "+" if self.offset >= 0 else "-"
        return f"{self.var}{sign}{abs(self.offset)}"


Term = Union[str, Var, Shift]


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return neg(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    name: str
    args: tuple = ()

    @property
    def key(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(a) for a in self.args)})"

    @property
    def is_ground(self) -> bool:
        return all(isinstance(a, str) for a in self.args)


@dataclass(frozen=True, eq=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, eq=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True, eq=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class Compare(Formula):
    """Ground-time comparison between two terms."""

    op: str
    left: Term
    right: Term


TRUE = Const(True)
FALSE = Const(False)


def atom(key: str) -> Atom:
    """Build a ground atom from its textual key, e.g. ``atom("on(a,b)")``."""
    if "(" not in key:
        return Atom(key)
    name, rest = key.split("(", 1)
    return Atom(name, tuple(rest.rstrip(")").split(",")))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def conj(*fs: Formula) -> Formula:
    items = []
    for f in fs:
        if isinstance(f, And):
            items.extend(f.args)
        elif f == TRUE:
            continue
        elif f == FALSE:
            return FALSE
        else:
            items.append(f)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


def disj(*fs: Formula) -> Formula:
    items = []
    for f in fs:
        if isinstance(f, Or):
            items.extend(f.args)
        elif f == FALSE:
            continue
        elif f == TRUE:
            return TRUE
        else:
            items.append(f)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(tuple(items))


def is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.arg, Atom))


def literal_parts(f: Formula) -> tuple[Atom, bool]:
    """Split a literal into (atom, polarity)."""
    if isinstance(f, Atom):
        return f, True
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return f.arg, False
    raise ValueError(f"not a literal: {to_text(f)}")


def atoms(f: Formula) -> set:
    """All atoms occurring in ``f``."""
    out: set = set()
    _collect(f, out)
    return out


def _collect(f, out):
    if isinstance(f, Atom):
        out.add(f)
    elif isinstance(f, Not):
        _collect(f.arg, out)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _collect(a, out)
    elif isinstance(f, Implies):
        _collect(f.left, out)
        _collect(f.right, out)


def variables(f: Formula) -> list:
    """Variables of ``f`` in order of first occurrence."""
    seen: dict = {}
    _vars(f, seen)
    return list(seen)


def _term_vars(t, seen):
    if isinstance(t, Var):
        seen.setdefault(t.name)
    elif isinstance(t, Shift):
        seen.setdefault(t.var.name)


def _vars(f, seen):
    if isinstance(f, Atom):
        for a in f.args:
            _term_vars(a, seen)
    elif isinstance(f, Compare):
        _term_vars(f.left, seen)
        _term_vars(f.right, seen)
    elif isinstance(f, Not):
        _vars(f.arg, seen)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _vars(a, seen)
    elif isinstance(f, Implies):
        _vars(f.left, seen)
        _vars(f.right, seen)


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    """Rebuild ``f`` replacing each atom by ``fn(atom)``, folding constants."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return neg(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return conj(*(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return disj(*(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Implies):
        return disj(neg(map_atoms(f.left, fn)), map_atoms(f.right, fn))
    return f


def substitute(f: Formula, defs: Mapping[str, Formula]) -> Formula:
    """Replace ground atoms whose key is in ``defs`` by their definition."""
    return map_atoms(f, lambda a: defs.get(a.key, a))


# -- evaluation ---------------------------------------------------------------

def evaluate(f: Formula, true_keys) -> bool:
    """Reference evaluator over a set of true atom keys (slow, for oracles)."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.key in true_keys
    if isinstance(f, Not):
        return not evaluate(f.arg, true_keys)
    if isinstance(f, And):
        return all(evaluate(a, true_keys) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, true_keys) for a in f.args)
    if isinstance(f, Implies):
        return (not evaluate(f.left, true_keys)) or evaluate(f.right, true_keys)
    raise TypeError(f"cannot evaluate {f!r}")


def compile2(f: Formula, index: Mapping[str, int]) -> Callable[[int], bool]:
    """Compile ``f`` into a predicate over a bit mask.

    Atoms missing from ``index`` raise ``KeyError`` at compile time.
    """
    if isinstance(f, Const):
        v = f.value
        return lambda m: v
    if isinstance(f, Atom):
        bit = 1 << index[f.key]
        return lambda m: bool(m & bit)
    if isinstance(f, Not):
        inner = compile2(f.arg, index)
        return lambda m: not inner(m)
    if isinstance(f, And):
        (pos, negm), rest = _split_literals(f.args, index)
        if not rest:
            return lambda m: (m & pos) == pos and not (m & negm)
        parts = [compile2(a, index) for a in rest]
        return lambda m: (m & pos) == pos and not (m & negm) and all(p(m) for p in parts)
    if isinstance(f, Or):
        terms = _dnf_terms(f.args, index)
        if terms is not None:
            return lambda m: any((m & pos) == pos and not (m & negm) for pos, negm in terms)
        parts = [compile2(a, index) for a in f.args]
        return lambda m: any(p(m) for p in parts)
    if isinstance(f, Implies):
        left = compile2(f.left, index)
        right = compile2(f.right, index)
        return lambda m: (not left(m)) or right(m)
    raise TypeError(f"cannot compile {f!r}")


def _dnf_terms(args, index):
    """(pos, neg) masks when every disjunct is a literal or a conjunction of literals."""
    terms = []
    for a in args:
        parts = a.args if isinstance(a, And) else (a,)
        (pos, negm), rest = _split_literals(parts, index)
        if rest:
            return None
        terms.append((pos, negm))
    return terms


def _split_literals(args, index):
    pos = negm = 0
    rest = []
    for a in args:
        if isinstance(a, Atom):
            pos |= 1 << index[a.key]
        elif isinstance(a, Not) and isinstance(a.arg, Atom):
            negm |= 1 << index[a.arg.key]
        else:
            rest.append(a)
    return (pos, negm), rest


Eval3 = Callable[[int, int], Optional[bool]]


def compile3(f: Formula, index: Mapping[str, int]) -> Eval3:
    """Compile ``f`` into a Kleene three-valued evaluator.

    The evaluator takes ``(assigned, values)`` masks and returns True, False
    or None when the partial assignment does not decide the formula.
    """
    if isinstance(f, Const):
        v = f.value
        return lambda a, m: v
    if isinstance(f, Atom):
        bit = 1 << index[f.key]
        return lambda a, m: (bool(m & bit) if a & bit else None)
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        bit = 1 << index[f.arg.key]
        return lambda a, m: (not (m & bit) if a & bit else None)
    if isinstance(f, Not):
        inner = compile3(f.arg, index)

        def _not(a, m):
            r = inner(a, m)
            return None if r is None else not r
        return _not
    if isinstance(f, And):
        (pos, negm), rest = _split_literals(f.args, index)
        parts = [compile3(x, index) for x in rest]
        lits = pos | negm

        def _and(a, m):
            known = a & lits
            if (m & pos & known) != (pos & known) or (m & negm & known):
                return False
            result = True if known == lits else None
            for p in parts:
                r = p(a, m)
                if r is False:
                    return False
                if r is None:
                    result = None
            return result
        return _and
    if isinstance(f, Or):
        terms = _dnf_terms(f.args, index)
        if terms is not None:
            def _dnf(a, m):
                result = False
                for pos, negm in terms:
                    known_pos = a & pos
                    known_neg = a & negm
                    if (m & known_pos) != known_pos or (m & known_neg):
                        continue
                    if known_pos == pos and known_neg == negm:
                        return True
                    result = None
                return result
            return _dnf
        parts = [compile3(x, index) for x in f.args]

        def _or(a, m):
            result = False
            for p in parts:
                r = p(a, m)
                if r is True:
                    return True
                if r is None:
                    result = None
            return result
        return _or
    if isinstance(f, Implies):
        return compile3(disj(neg(f.left), f.right), index)
    raise TypeError(f"cannot compile {f!r}")


# -- printing -----------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def to_text(f: Formula) -> str:
    """Render ``f`` in the concrete syntax accepted by the parser."""
    return _text(f, 0)


def _text(f, ctx):
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.key
    if isinstance(f, Compare):
        return f"{f.left} {f.op} {f.right}"
    prec = _PREC[type(f)]
    if isinstance(f, Not):
        s = "-" + _text(f.arg, prec)
    elif isinstance(f, And):
        s = " & ".join(_text(a, prec + 1) for a in f.args)
    elif isinstance(f, Or):
        s = " | ".join(_text(a, prec + 1) for a in f.args)
    else:
        s = f"{_text(f.left, prec + 1)} -> {_text(f.right, prec)}"
    return f"({s})" if prec < ctx else s

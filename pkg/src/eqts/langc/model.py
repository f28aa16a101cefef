"""Abstract syntax for action descriptions in the literal-head fragment of C."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..formula import FALSE, Formula, atoms, is_literal, to_text


@dataclass(frozen=True)
class Param:
    """One declaration argument: a typed variable, a bare type, or a constant."""

    type: Optional[str] = None
    var: Optional[str] = None
    const: Optional[str] = None

    def __str__(self):
        if self.const is not None:
            return self.const
        if self.var is not None:
            return f"{self.var}:{self.type}"
        return self.type


@dataclass(frozen=True)
class Decl:
    """A fluent or action schema, e.g. ``on(X:block, Y:block) where X != Y``."""

    name: str
    params: tuple = ()
    guard: Optional[Formula] = None
    line: int = 0
    col: int = 0

    @property
    def is_ground(self) -> bool:
        return all(p.const is not None for p in self.params)

    @property
    def key(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({','.join(str(p) for p in self.params)})"


@dataclass(frozen=True)
class StaticLaw:
    """``caused head if body``; ``head`` is a literal or ``false``."""

    head: Formula
    body: Formula
    line: int = 0
    col: int = 0

    def __str__(self):
        return f"caused {to_text(self.head)} if {to_text(self.body)}."


@dataclass(frozen=True)
class DynamicLaw:
    """``caused head if condition after after``."""

    head: Formula
    condition: Formula
    after: Formula
    line: int = 0
    col: int = 0

    def __str__(self):
        return (f"caused {to_text(self.head)} if {to_text(self.condition)}"
                f" after {to_text(self.after)}.")


def head_is_valid(head: Formula) -> bool:
    return head == FALSE or is_literal(head)


@dataclass
class ActionDescription:
    """A parsed (possibly schematic) action description.

    ``statics`` maps a relation name to the set of argument tuples that hold.
    ``concurrency`` is the inclusive (min, max) size of action labels.
    """

    domains: dict = field(default_factory=dict)
    fluents: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    statics: dict = field(default_factory=dict)
    laws: list = field(default_factory=list)
    initial: list = field(default_factory=list)
    concurrency: tuple = (1, 1)
    filename: Optional[str] = None

    @property
    def is_ground(self) -> bool:
        return (all(d.is_ground for d in self.fluents)
                and all(d.is_ground for d in self.actions)
                and all(_law_ground(l) for l in self.laws)
                and all(not _has_vars(f) for f in self.initial))

    @property
    def static_laws(self) -> list:
        return [l for l in self.laws if isinstance(l, StaticLaw)]

    @property
    def dynamic_laws(self) -> list:
        return [l for l in self.laws if isinstance(l, DynamicLaw)]

    def fluent_names(self) -> list:
        """Sorted ground fluent keys (only meaningful once ground)."""
        return sorted(d.key for d in self.fluents)

    def action_names(self) -> list:
        return sorted(d.key for d in self.actions)

    def to_text(self) -> str:
        """Render as ``.cal`` source; ground descriptions round-trip through parse."""
        out = []
        if self.filename:
            out.append(f"% from {self.filename}")
        for name, values in self.domains.items():
            out.append(f"domain {name} = {{{', '.join(values)}}}.")
        for rel in sorted(self.statics):
            for args in sorted(self.statics[rel]):
                out.append(f"static {rel}({','.join(args)}).")
        for kw, decls in (("fluent", self.fluents), ("action", self.actions)):
            for d in decls:
                guard = f" where {to_text(d.guard)}" if d.guard is not None else ""
                out.append(f"{kw} {d.key}{guard};")
        lo, hi = self.concurrency
        if (lo, hi) != (1, 1):
            out.append(f"concurrency {lo}..{hi}.")
        for law in self.laws:
            out.append(str(law))
        for f in self.initial:
            out.append(f"initial {to_text(f)}.")
        return "\n".join(out) + "\n"


def _has_vars(f) -> bool:
    from ..formula import variables
    return bool(variables(f))


def _law_ground(law) -> bool:
    parts = [law.head, law.body] if isinstance(law, StaticLaw) else [
        law.head, law.condition, law.after]
    return not any(_has_vars(p) for p in parts)


def law_atoms(law):
    if isinstance(law, StaticLaw):
        return atoms(law.head) | atoms(law.body)
    return atoms(law.head) | atoms(law.condition) | atoms(law.after)

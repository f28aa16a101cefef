"""Parser for ``.cal`` action descriptions.

Grammar (statements end in ``.`` or ``;``, ``%`` starts a comment)::

    domain <type> = {c1, ..., ck}.
    fluent <decl>, ...;          decl: name[(param, ...)] [where <formula>]
    action <decl>, ...;          param: type | Var:type | constant
    static <rel>(c, ...), ...;
    concurrency <min>..<max>.
    caused <literal|false> [if <formula>] [after <formula>].
    initial <formula>.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import FragmentError, ScopeError
from ..formula import TRUE, atoms
from .model import ActionDescription, Decl, DynamicLaw, Param, StaticLaw, head_is_valid
from .syntax import TokenParser


class CalParser(TokenParser):

    def __init__(self, text, filename=None):
        super().__init__(text, filename)
        self.ad = ActionDescription(filename=filename)

    def parse(self) -> ActionDescription:
        while self.tok.kind != "eof":
            self.statement()
        check_scopes(self.ad)
        return self.ad

    def statement(self):
        t = self.tok
        if t.kind == "kw" and t.value == "caused":
            self.ad.laws.append(self.law())
            return
        if t.kind != "ident":
            raise self.error(f"expected a statement, found {t.value or 'end of input'!r}")
        handler = getattr(self, f"stmt_{t.value}", None)
        if handler is None:
            raise self.error(f"unknown statement {t.value!r}")
        self.advance()
        handler()

    def stmt_domain(self):
        name = self.expect_kind("ident", "a type name").value
        self.expect("=")
        self.expect("{")
        values = [self.constant()]
        while self.accept(","):
            values.append(self.constant())
        self.expect("}")
        self.end_statement()
        self.ad.domains[name] = tuple(values)

    def constant(self) -> str:
        t = self.tok
        if t.kind not in ("ident", "int"):
            raise self.error(f"expected a constant, found {t.value or 'end of input'!r}")
        return self.advance().value

    def stmt_fluent(self):
        self.ad.fluents.extend(self.decls())

    def stmt_action(self):
        self.ad.actions.extend(self.decls())

    def decls(self):
        out = [self.decl()]
        while self.accept(","):
            out.append(self.decl())
        self.end_statement()
        return out

    def decl(self) -> Decl:
        start = self.tok
        name = self.expect_kind("ident", "a name").value
        params = []
        if self.accept("("):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
            self.expect(")")
        guard = None
        if self.tok.kind == "kw" and self.tok.value == "where":
            self.advance()
            guard = self.formula()
        return Decl(name, tuple(params), guard, start.line, start.col)

    def param(self) -> Param:
        t = self.tok
        if t.kind == "var":
            self.advance()
            self.expect(":")
            return Param(type=self.expect_kind("ident", "a type name").value, var=t.value)
        value = self.constant()
        if value in self.ad.domains:
            return Param(type=value)
        return Param(const=value)

    def stmt_static(self):
        while True:
            a = self.atom()
            if not a.is_ground:
                raise self.error("static facts must be ground")
            self.ad.statics.setdefault(a.name, set()).add(tuple(a.args))
            if not self.accept(","):
                break
        self.end_statement()

    def stmt_concurrency(self):
        lo = int(self.expect_kind("int", "an integer").value)
        hi = lo
        if self.accept(".."):
            hi = int(self.expect_kind("int", "an integer").value)
        if lo < 0 or hi < lo or hi < 1:
            raise self.error("concurrency range must satisfy 0 <= min <= max, max >= 1")
        self.end_statement()
        self.ad.concurrency = (lo, hi)

    def stmt_initial(self):
        self.ad.initial.append(self.formula())
        self.end_statement()

    def law(self):
        start = self.advance()
        head_tok = self.tok
        head = self.formula()
        if not head_is_valid(head):
            raise FragmentError("law heads must be literals", head_tok.line,
                                head_tok.col, self.filename)
        body = TRUE
        after = None
        if self.tok.kind == "kw" and self.tok.value == "if":
            self.advance()
            body = self.formula()
        if self.tok.kind == "kw" and self.tok.value == "after":
            self.advance()
            after = self.formula()
        self.end_statement()
        if after is None:
            return StaticLaw(head, body, start.line, start.col)
        return DynamicLaw(head, body, after, start.line, start.col)


def check_scopes(ad: ActionDescription):
    """Reject action atoms outside after-parts and fluent/action name clashes."""
    action_names = {d.name for d in ad.actions}
    fluent_names = {d.name for d in ad.fluents}
    clash = action_names & fluent_names
    if clash:
        d = next(d for d in ad.actions if d.name in clash)
        raise ScopeError(f"{d.name!r} declared both as fluent and action",
                         d.line, d.col, ad.filename)
    for law in ad.laws:
        parts = [("head", law.head)]
        if isinstance(law, StaticLaw):
            parts.append(("static law body", law.body))
        else:
            parts.append(("if-part", law.condition))
        for where, f in parts:
            for a in atoms(f):
                if a.name in action_names:
                    raise ScopeError(f"action atom {a.key!r} not allowed in {where}",
                                     law.line, law.col, ad.filename)
    for f in ad.initial:
        for a in atoms(f):
            if a.name in action_names:
                raise ScopeError(f"action atom {a.key!r} not allowed in initial",
                                 None, None, ad.filename)


def parse(text: str, filename=None) -> ActionDescription:
    """Parse ``.cal`` source text."""
    return CalParser(text, filename).parse()


def parse_file(path) -> ActionDescription:
    path = Path(path)
    return parse(path.read_text(), str(path))

"""Labeled blocksworld with a stack-height classification.

The description has the usual ``on``/``onTable``/``clear`` fluents plus
``level(X,K)`` (block X sits K-th from the table).  Only ``on`` is
primitive and inertial; the others are fixed by static laws, so the legal
states are exactly the acyclic stack configurations and no derived fluent
can support itself through a loop.  Besides the labeled ``move``/``moveToTable`` actions there
are two unlabeled nondeterministic ones:

* ``unstack`` moves the top block of some tallest stack (height >= 2) to
  the table;
* ``stack`` moves a block standing alone onto the top of some stack of
  height >= 2, or onto another lone block when all blocks are on the table.

Equalized states are the tuples <b1..bn>, bi = number of stacks of height i,
encoded by aux atoms ``stacks(I,C)``.  The policy lowers a tallest stack
while some stack has height >= 2 and builds the single tower once every
block is on the table.
"""

from __future__ import annotations

import itertools

from ..errors import EqtsError


def partitions(n: int, largest=None):
    """Integer partitions of n as non-increasing tuples."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in partitions(n - k, k):
            yield (k,) + rest


def profile_of(parts, n) -> tuple:
    """<b1, ..., bn> for a partition given as stack heights."""
    out = [0] * n
    for p in parts:
        out[p - 1] += 1
    return tuple(out)


def parts_of(profile) -> tuple:
    return tuple(sorted((i + 1 for i, c in enumerate(profile) for _ in range(c)), reverse=True))


def policy_target(profile) -> tuple:
    """Next profile the policy aims for."""
    n = len(profile)
    parts = parts_of(profile)
    if parts == (n,):
        return profile
    if max(parts) == 1:
        return profile_of((n,), n)
    lowered = list(parts)
    lowered[0] -= 1
    lowered.append(1)
    return profile_of(sorted(lowered, reverse=True), n)


def count_stacks(configs) -> dict:
    """Number of labeled configurations per profile (for cross-checks)."""
    out: dict = {}
    for c in configs:
        out[c] = out.get(c, 0) + 1
    return out


def _exactly(atoms, c) -> str:
    """Ground DNF saying exactly ``c`` of ``atoms`` hold."""
    if c < 0 or c > len(atoms):
        return "false"
    terms = []
    for chosen in itertools.combinations(range(len(atoms)), c):
        lits = [a if k in chosen else f"-{a}" for k, a in enumerate(atoms)]
        terms.append("(" + " & ".join(lits) + ")" if len(lits) > 1 else lits[0])
    if not terms:
        return "true"
    return " | ".join(terms)


def _conj(items):
    return " & ".join(items) if items else "true"


def gen_blocksworld(n: int, moves=True) -> tuple:
    """Return (cal_text, scn_text) for ``n`` blocks, 2 <= n <= 6."""
    if not 2 <= n <= 6:
        raise EqtsError(f"blocksworld size must be between 2 and 6, got {n}")
    blocks = [f"b{i}" for i in range(1, n + 1)]
    cal = [
        f"% labeled blocksworld, {n} blocks",
        f"domain block = {{{', '.join(blocks)}}}.",
        f"domain level = {{{', '.join(str(k) for k in range(1, n + 1))}}}.",
        "fluent on(X:block, Y:block) where X != Y;",
        "fluent onTable(block), clear(block), level(block, level);",
        "action unstack, stack;",
    ]
    if moves:
        cal.append("action move(X:block, Y:block) where X != Y, moveToTable(block);")
    cal += [
        "",
        "% on/2 is the only primitive fluent; everything else is derived from it",
        "% every block stands on at most one block and carries at most one",
        "caused -onTable(X) if on(X,Y).",
        "caused -on(X,Z) if on(X,Y) & Y != Z.",
        "caused -on(Z,Y) if on(X,Y) & X != Z.",
        "caused -clear(X) if on(Y,X).",
        "caused level(X,1) if onTable(X).",
        "caused -level(X,1) if -onTable(X).",
        "caused level(X,K) if on(X,Y) & level(Y,K-1) & K > 1.",
    ]
    for x in blocks:
        others = [y for y in blocks if y != x]
        cal.append(f"caused onTable({x}) if {_conj(f'-on({x},{y})' for y in others)}.")
        cal.append(f"caused clear({x}) if {_conj(f'-on({y},{x})' for y in others)}.")
        for k in range(2, n + 1):
            body = _conj(f"(-on({x},{y}) | -level({y},{k - 1}))" for y in others)
            cal.append(f"caused -level({x},{k}) if {body}.")
        cal.append(f"caused false if {_conj(f'-level({x},{k})' for k in range(1, n + 1))}.")

    cal += ["", "% inertia",
            "caused on(X,Y) if on(X,Y) after on(X,Y).",
            "caused -on(X,Y) if -on(X,Y) after -on(X,Y)."]

    def tower(k):
        return " | ".join(f"level({b},{k})" for b in blocks)

    cal += ["", "% unstack: the top of a tallest stack goes to the table"]
    cal.append(f"caused false after unstack & -({tower(2)}).")
    for h in range(2, n + 1):
        top_free = f"-({tower(h + 1)})" if h < n else "true"
        for x in blocks:
            cal.append(f"caused -on({x},Y) if -on({x},Y) after unstack & on({x},Y) & "
                       f"level({x},{h}) & {top_free}.")
        lv = [f"level({b},{h})" for b in blocks]
        for c in range(1, n // h + 1):
            cal.append(f"caused false if -({_exactly(lv, c - 1)}) after unstack & "
                       f"({_exactly(lv, c)}) & {top_free}.")

    cal += ["", "% stack: a lone block goes onto a stack top (or a lone block if no stack)"]
    cal.append(f"caused on(X,Y) if on(X,Y) after stack & onTable(X) & clear(X) & clear(Y) & "
               f"(-onTable(Y) | -({tower(2)})).")
    tab = [f"onTable({b})" for b in blocks]
    for c in range(1, n + 1):
        cal.append(f"caused false if -({_exactly(tab, c - 1)}) after stack & ({_exactly(tab, c)}).")

    if moves:
        cal += [
            "", "% labeled moves",
            "caused on(X,Y) after move(X,Y).",
            "caused false after move(X,Y) & -clear(X).",
            "caused false after move(X,Y) & -clear(Y).",
            "caused false after move(X,Y) & on(X,Y).",
            "caused -on(X,Y) after moveToTable(X) & on(X,Y).",
            "caused false after moveToTable(X) & -clear(X).",
            "caused false after moveToTable(X) & onTable(X).",
        ]
    cal += ["", "% initially not yet a single tower",
            f"initial -({tower(n)})."]

    scn = [
        f'description "blocksworld{n}.cal".',
        "states all.",
        "",
        "% stacks(I,C): exactly C stacks of height I",
        "classify type2 {",
    ]
    for i in range(1, n + 1):
        tops = [f"level({b},{i})" for b in blocks]
        if i < n:
            # a stack of height I has its top at level I and nothing at I+1 on it
            tops = [f"(level({b},{i}) & clear({b}))" for b in blocks]
        for c in range(1, n // i + 1):
            scn.append(f"  aux stacks({i},{c}) := {_exactly(tops, c)};")
    scn.append("}.")
    scn.append("")
    profiles = [profile_of(p, n) for p in partitions(n)]

    def profile_formula(prof):
        return " & ".join(f"stacks({i + 1},{c})" for i, c in enumerate(prof) if c)

    for prof in profiles:
        args = ",".join(map(str, prof))
        scn.append(f"rule profile({args}): {profile_formula(prof)}.")
    scn.append("")
    for prof in profiles:
        args = ",".join(map(str, prof))
        scn.append(f"map {{profile({args})}} -> {{{profile_formula(policy_target(prof))}}}.")
    scn.append("")
    scn.append(f"goal stacks({n},1).")
    return "\n".join(cal) + "\n", "\n".join(scn) + "\n"


def decode_profile(esys, i) -> tuple:
    """Read <b1..bn> off an equalized state's aux valuation."""
    names = esys.describe(i)
    n = 0
    counts = {}
    for name in names:
        inner = name[name.index("(") + 1:-1]
        h, c = (int(v) for v in inner.split(","))
        counts[h] = c
        n = max(n, h)
    size = sum(h * c for h, c in counts.items())
    return tuple(counts.get(h, 0) for h in range(1, size + 1))

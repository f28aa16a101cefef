"""Grid search: a robot looks for a person in an n x n grid with obstacles.

The robot senses along its row and column until an obstacle or the border.
The policy walks to the farthest visible free cell until the person is
seen, then walks to the person.  Profiles are the robot's current
observations only, so the agent is memoryless unless ``memory=True`` adds
visited-cell fluents.

Coordinates are (x, y) with x growing to the right and y growing upwards;
``.layout`` files list rows from y = n down to y = 1.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from ..errors import EqtsError

DIRECTIONS = {"moveRight": (1, 0), "moveLeft": (-1, 0), "moveUp": (0, 1), "moveDown": (0, -1)}


@dataclass(frozen=True)
class GridInstance:
    n: int
    obstacles: frozenset = field(default_factory=frozenset)
    person: tuple = (1, 1)
    start: tuple = (1, 1)

    def cells(self):
        return [(x, y) for y in range(1, self.n + 1) for x in range(1, self.n + 1)]

    def free(self, c) -> bool:
        return self.inside(c) and c not in self.obstacles

    def inside(self, c) -> bool:
        return 1 <= c[0] <= self.n and 1 <= c[1] <= self.n

    def check(self):
        """Raise unless the instance satisfies the fixture invariants."""
        for c in [self.person, self.start, *self.obstacles]:
            if not self.inside(c):
                raise EqtsError(f"cell {c} is outside the {self.n}x{self.n} grid")
        if self.start == self.person:
            raise EqtsError("the robot must not start on the person")
        if self.start in self.obstacles or self.person in self.obstacles:
            raise EqtsError("robot and person must stand on free cells")
        if self.person not in reachable_cells(self, self.start):
            raise EqtsError("the person is not reachable from the start")


def reachable_cells(inst: GridInstance, start) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in DIRECTIONS.values():
            c = (x + dx, y + dy)
            if inst.free(c) and c not in seen:
                seen.add(c)
                queue.append(c)
    return seen


def parse_layout(text: str) -> GridInstance:
    rows = [r.strip() for r in text.splitlines() if r.strip() and not r.startswith("%")]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise EqtsError("layout must be square")
    obstacles, person, start = set(), None, None
    for k, row in enumerate(rows):
        y = n - k
        for i, ch in enumerate(row):
            c = (i + 1, y)
            if ch == "#":
                obstacles.add(c)
            elif ch == "P":
                person = c
            elif ch == "R":
                start = c
            elif ch != ".":
                raise EqtsError(f"unknown layout character {ch!r}")
    if person is None or start is None:
        raise EqtsError("layout needs one R and one P")
    return GridInstance(n, frozenset(obstacles), person, start)


def render_layout(inst: GridInstance) -> str:
    rows = []
    for y in range(inst.n, 0, -1):
        row = ""
        for x in range(1, inst.n + 1):
            c = (x, y)
            row += "#" if c in inst.obstacles else "R" if c == inst.start else \
                "P" if c == inst.person else "."
        rows.append(row)
    return "\n".join(rows) + "\n"


# -- geometry shared by the generator and the reference simulator --

def rays(inst: GridInstance, r) -> dict:
    """Per direction, the visible cells in order and the blocking cell (or None)."""
    out = {}
    for name, (dx, dy) in DIRECTIONS.items():
        cells = []
        c = (r[0] + dx, r[1] + dy)
        while inst.free(c):
            cells.append(c)
            c = (c[0] + dx, c[1] + dy)
        out[name] = (cells, c if inst.inside(c) else None)
    return out


def visible(inst: GridInstance, r) -> set:
    return {c for cells, _ in rays(inst, r).values() for c in cells}


def distance(r, c, metric="path") -> float:
    if metric == "euclid":
        return math.dist(r, c)
    if metric == "path":
        return abs(r[0] - c[0]) + abs(r[1] - c[1])
    raise EqtsError(f"unknown metric {metric!r}")


def farthest(inst: GridInstance, r, metric="path") -> list:
    """Visible free cells at maximal distance, via visible cells only.

    Visible cells lie on straight rays from ``r``, so the path through them
    is the straight segment and both metrics rank cells alike.
    """
    vis = sorted(visible(inst, r))
    if not vis:
        return []
    best = max(distance(r, c, metric) for c in vis)
    return [c for c in vis if distance(r, c, metric) == best]


def policy_step(inst: GridInstance, r, metric="path") -> list:
    """Cells the memoryless policy may walk to next from ``r``."""
    if r == inst.person:
        return [r]
    if inst.person in visible(inst, r):
        return [inst.person]
    return farthest(inst, r, metric)


def simulate_outcome(inst: GridInstance, metric="path") -> str:
    """Reference outcome: ``works``, ``loop`` (no choice) or ``choice-loop``.

    Explores every policy branch from the start; a cycle avoiding the
    person is a failing run.
    """
    succ = {}
    todo = [inst.start]
    while todo:
        r = todo.pop()
        if r in succ:
            continue
        succ[r] = policy_step(inst, r, metric)
        todo.extend(c for c in succ[r] if c != inst.person)
    state = {}

    def cyclic(r):
        if r == inst.person:
            return False
        if state.get(r) == 1:
            return True
        if state.get(r) == 2:
            return False
        state[r] = 1
        bad = any(cyclic(c) for c in succ[r])
        state[r] = 2
        return bad

    if not cyclic(inst.start) and all(succ[r] for r in succ):
        return "works"
    branching = any(len(v) > 1 for v in succ.values())
    return "choice-loop" if branching else "loop"


# -- bundle generation --

def _cell(prefix, c):
    return f"{prefix}({c[0]},{c[1]})"


def _or(items):
    items = list(items)
    if not items:
        return "false"
    return items[0] if len(items) == 1 else "(" + " | ".join(items) + ")"


def _and(items):
    items = list(items)
    if not items:
        return "true"
    return items[0] if len(items) == 1 else " & ".join(items)


def gen_grid(inst: GridInstance, metric="path", memory=False, name="grid") -> tuple:
    """Return (cal_text, scn_text) for one grid instance."""
    inst.check()
    n = inst.n
    coords = ", ".join(str(k) for k in range(1, n + 1))
    cells = inst.cells()
    cal = [
        f"% grid search, {n}x{n}",
        f"domain coord = {{{coords}}}.",
        "fluent robotAt(coord, coord), obstacleAt(coord, coord), personAt(coord, coord);",
    ]
    if memory:
        cal.append("fluent visited(coord, coord);")
    cal += [
        "action moveRight, moveLeft, moveUp, moveDown;",
        "",
        "% the robot is in exactly one cell, never on an obstacle",
        "caused -robotAt(X,Y) if robotAt(X1,Y1) & X != X1.",
        "caused -robotAt(X,Y) if robotAt(X1,Y1) & Y != Y1.",
        f"caused false if {_and('-' + _cell('robotAt', c) for c in cells)}.",
        "caused false if robotAt(X,Y) & obstacleAt(X,Y).",
        "",
        "% moves; leaving the grid or entering an obstacle is not executable",
        "caused robotAt(X+1,Y) after moveRight & robotAt(X,Y).",
        "caused robotAt(X-1,Y) after moveLeft & robotAt(X,Y).",
        "caused robotAt(X,Y+1) after moveUp & robotAt(X,Y).",
        "caused robotAt(X,Y-1) after moveDown & robotAt(X,Y).",
        f"caused false after moveRight & robotAt(X,Y) & X = {n}.",
        "caused false after moveLeft & robotAt(X,Y) & X = 1.",
        f"caused false after moveUp & robotAt(X,Y) & Y = {n}.",
        "caused false after moveDown & robotAt(X,Y) & Y = 1.",
        "caused false after moveRight & robotAt(X,Y) & obstacleAt(X+1,Y).",
        "caused false after moveLeft & robotAt(X,Y) & obstacleAt(X-1,Y).",
        "caused false after moveUp & robotAt(X,Y) & obstacleAt(X,Y+1).",
        "caused false after moveDown & robotAt(X,Y) & obstacleAt(X,Y-1).",
        "",
        "% inertia",
    ]
    inertial = ["robotAt(X,Y)", "obstacleAt(X,Y)", "personAt(X,Y)"]
    if memory:
        inertial.append("visited(X,Y)")
    for f in inertial:
        cal.append(f"caused {f} if {f} after {f}.")
        cal.append(f"caused -{f} if -{f} after -{f}.")
    if memory:
        cal.append("caused visited(X,Y) if robotAt(X,Y).")
    init = [_cell("robotAt", inst.start), _cell("personAt", inst.person)]
    init += [_cell("obstacleAt", c) if c in inst.obstacles else "-" + _cell("obstacleAt", c)
             for c in cells]
    init += ["-" + _cell("personAt", c) for c in cells if c != inst.person]
    if memory:
        init += ["-" + _cell("visited", c) for c in cells if c != inst.start]
    cal += ["", "% the instance", "initial " + " &\n        ".join(init) + "."]

    # observation profile: where the robot is and what it sees
    def seen_from(c, what):
        """Formula: the robot sees cell c, and ``what`` holds there."""
        terms = []
        for r in cells:
            if r == c or (r[0] != c[0] and r[1] != c[1]):
                continue
            dx = (c[0] > r[0]) - (c[0] < r[0])
            dy = (c[1] > r[1]) - (c[1] < r[1])
            between = []
            p = (r[0] + dx, r[1] + dy)
            while p != c:
                between.append("-" + _cell("obstacleAt", p))
                p = (p[0] + dx, p[1] + dy)
            terms.append("(" + _and([_cell("robotAt", r)] + between + [what(c)]) + ")")
        return _or(terms)

    scn = [
        f'description "{name}.cal".',
        "states reachable.",
        "",
        "classify type2 {",
        "  aux at(X,Y) := robotAt(X,Y);",
    ]
    for c in cells:
        scn.append(f"  aux seeObstacle({c[0]},{c[1]}) := {seen_from(c, lambda d: _cell('obstacleAt', d))};")
        scn.append(f"  aux seeFree({c[0]},{c[1]}) := {seen_from(c, lambda d: '-' + _cell('obstacleAt', d))};")
        scn.append(f"  aux seePerson({c[0]},{c[1]}) := {seen_from(c, lambda d: _cell('personAt', d))};")
    scn.append("  aux found := robotAt(X,Y) & personAt(X,Y);")
    if memory:
        scn.append("  aux been(X,Y) := visited(X,Y);")
    scn += ["}.", ""]

    # far(c): c is a farthest visible free cell, for every possible view
    far_terms: dict = {}
    for r in cells:
        for view in _views(n, r):
            ends = [cs[-1] for cs, _ in view.values() if cs]
            if not ends:
                continue
            best = max(distance(r, c, metric) for c in ends)
            cond = _and([_cell("at", r)] + _view_formula(view))
            for c in ends:
                if distance(r, c, metric) == best:
                    far_terms.setdefault(c, []).append("(" + cond + ")")
    no_person = _and("-" + _cell("seePerson", c) for c in cells)
    for c in cells:
        if c in far_terms:
            scn.append(f"rule far({c[0]},{c[1]}): {_or(far_terms[c])} & {no_person} & -found.")
    scn.append("rule detected(X,Y): seePerson(X,Y) & -found.")
    scn.append("rule done: found.")
    scn.append("")

    # the mapping lists every placeholder set this instance can produce
    keys = set()
    for r in reachable_cells(inst, inst.start):
        if r == inst.person or inst.person in visible(inst, r):
            continue
        far = tuple(farthest(inst, r, metric))
        if far:
            keys.add(far)
    for far in sorted(keys):
        lhs = ", ".join(_cell("far", c) for c in far)
        rhs = " | ".join(_cell("at", c) for c in far)
        scn.append(f"map {{{lhs}}} -> {{{rhs}}}.")
    scn.append("map {detected(X,Y)} -> {at(X,Y)}.")
    scn.append("map {done} -> {found}.")
    scn += ["", "goal found."]
    if memory:
        # every target lies on a straight ray, so n - 1 moves suffice
        scn.append(f"planbound {n}.")
    return "\n".join(cal) + "\n", "\n".join(scn) + "\n"


def _views(n, r):
    """Every combination of ray lengths from ``r`` on an empty n x n board."""
    per_dir = []
    for name, (dx, dy) in DIRECTIONS.items():
        line = []
        c = (r[0] + dx, r[1] + dy)
        while 1 <= c[0] <= n and 1 <= c[1] <= n:
            line.append(c)
            c = (c[0] + dx, c[1] + dy)
        # length k: first k cells free, cell k+1 (if any) blocked
        opts = []
        for k in range(len(line) + 1):
            opts.append((name, line[:k], line[k] if k < len(line) else None))
        per_dir.append(opts)

    def rec(i, acc):
        if i == len(per_dir):
            yield dict(acc)
            return
        for name, cs, block in per_dir[i]:
            acc[name] = (cs, block)
            yield from rec(i + 1, acc)
        acc.pop(per_dir[i][0][0], None)

    yield from rec(0, {})


def _view_formula(view) -> list:
    out = []
    for cs, block in view.values():
        out += [_cell("seeFree", c) for c in cs]
        if block is not None:
            out.append(_cell("seeObstacle", block))
    return out


LAYOUTS = {
    # works: the second stop already sees the person
    "a": GridInstance(3, frozenset({(1, 3), (2, 2)}), person=(3, 3), start=(1, 1)),
    # loop: the robot shuttles between (1,1) and (3,1) and never sees the person
    "b": GridInstance(3, frozenset({(1, 3), (3, 2)}), person=(3, 3), start=(1, 1)),
    # choice: from (3,1) both (1,1) and (3,3) are farthest; only (3,3) finds the person
    "c": GridInstance(3, frozenset({(1, 3), (2, 2)}), person=(2, 3), start=(1, 1)),
}

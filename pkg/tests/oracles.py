"""Independent brute-force oracles and small hand-built systems used by the tests.

Nothing here imports the search code it checks: the semantics oracle walks
every interpretation triple, the plan oracle enumerates every label sequence,
and the run oracle unrolls every run with a cycle cutoff.
"""

from __future__ import annotations

import itertools
import random

from eqts.core import label, make_system
from eqts.equalize import ERR, Custom, build_equalized
from eqts.formula import evaluate, literal_parts, to_text
from eqts.langc import ground, parse
from eqts.langc.model import DynamicLaw, StaticLaw


# -- action descriptions --

def random_description(rng: random.Random, max_fluents=8, max_actions=3) -> str:
    """A random ground description with literal (or ``false``) heads."""
    nf = rng.randint(1, max_fluents)
    na = rng.randint(1, max_actions)
    fl = [f"p{k}" for k in range(nf)]
    ac = [f"a{k}" for k in range(na)]

    def lit(names):
        x = rng.choice(names)
        return x if rng.random() < 0.5 else f"-{x}"

    def body(names, size):
        if size == 0:
            return "true"
        return " & ".join(lit(names) for _ in range(size))

    out = [f"fluent {', '.join(fl)};", f"action {', '.join(ac)};"]
    lo = rng.choice((0, 1))
    hi = rng.randint(max(lo, 1), na)
    out.append(f"concurrency {lo}..{hi}.")
    for f in fl:
        if rng.random() < 0.7:
            out.append(f"caused {f} if {f} after {f}.")
            out.append(f"caused -{f} if -{f} after -{f}.")
    for _ in range(rng.randint(0, 3)):
        head = "false" if rng.random() < 0.2 else lit(fl)
        out.append(f"caused {head} if {body(fl, rng.randint(0, 2))}.")
    for _ in range(rng.randint(1, 5)):
        head = "false" if rng.random() < 0.15 else lit(fl)
        after = " & ".join([rng.choice(ac)] + [lit(fl) for _ in range(rng.randint(0, 2))])
        out.append(f"caused {head} if {body(fl, rng.randint(0, 1))} after {after}.")
    if rng.random() < 0.5:
        out.append(f"initial {lit(fl)}.")
    return "\n".join(out) + "\n"


def oracle_transitions(ad) -> tuple:
    """(states, initial, triples) by direct evaluation of the definitions.

    States are the interpretations closed under every static law.  A triple
    (s, A, s') is kept exactly when s' is the unique interpretation that
    satisfies the heads of the static laws whose body s' satisfies and of
    the dynamic laws whose condition s' satisfies and whose after-part
    s with A satisfies.
    """
    fl = ad.fluent_names()
    ac = ad.action_names()
    interps = [frozenset(f for f, bit in zip(fl, bits) if bit)
               for bits in itertools.product((0, 1), repeat=len(fl))]
    statics = [l for l in ad.laws if isinstance(l, StaticLaw)]
    dynamics = [l for l in ad.laws if isinstance(l, DynamicLaw)]

    def closed(s):
        for law in statics:
            if evaluate(law.body, s):
                if not _head_holds(law.head, s):
                    return False
        return True

    states = [s for s in interps if closed(s)]
    initial = [s for s in states if all(evaluate(f, s) for f in ad.initial)]
    lo, hi = ad.concurrency
    labels = [frozenset(c) for k in range(lo, min(hi, len(ac)) + 1)
              for c in itertools.combinations(ac, k)]
    # per s': the static heads that apply and the dynamic laws whose condition holds
    per_s2 = []
    for s2 in interps:
        heads = [l.head for l in statics if evaluate(l.body, s2)]
        dyn = frozenset(k for k, l in enumerate(dynamics) if evaluate(l.condition, s2))
        per_s2.append((s2, heads, dyn))
    triples = set()
    for s in states:
        for A in labels:
            sa = s | A
            fired = frozenset(k for k, l in enumerate(dynamics) if evaluate(l.after, sa))
            for s2, heads, dyn in per_s2:
                extra = [dynamics[k].head for k in sorted(fired & dyn)]
                if _unique_model(heads + extra, fl, s2):
                    triples.add((s, A, s2))
    return states, initial, triples


def _head_holds(head, s) -> bool:
    if head.__class__.__name__ == "Const":
        return head.value
    a, positive = literal_parts(head)
    return (a.key in s) == positive


def _unique_model(heads, fluents, s2) -> bool:
    """True iff s2 is the only interpretation satisfying every head."""
    fixed = {}
    for h in heads:
        if h.__class__.__name__ == "Const":
            if not h.value:
                return False
            continue
        a, positive = literal_parts(h)
        if fixed.setdefault(a.key, positive) != positive:
            return False
    if len(fixed) != len(fluents):
        return False
    return all((f in s2) == fixed[f] for f in fluents)


def system_triples(ts) -> set:
    """The same triple set read off a built TransitionSystem."""
    out = set()
    for (s, lab), succ in ts.transitions.items():
        for t in succ:
            out.add((frozenset(ts.true_fluents(s)), lab, frozenset(ts.true_fluents(t))))
    return out


def ground_text(text):
    return ground(parse(text))


# -- hand-built systems --

def three_state_merge():
    """s1 -a-> s2, nothing enters s3; the classification merges s2 and s3."""
    ts = make_system(("x", "y"), ("a",), [0, 1, 2], [0], {(0, label("a")): frozenset([1])})
    c = Custom({0: "A", 1: "B", 2: "B"})
    return ts, c


def executability_merge():
    """a runs at s1 only; the classification merges s1 with s1' (state 2)."""
    ts = make_system(("x", "y"), ("a",), [0, 1, 2], [0, 2], {(0, label("a")): frozenset([1])})
    c = Custom({0: "A", 1: "B", 2: "A"})
    return ts, c


def lockstep_product(n=3):
    """Two counters mod n advancing together; classified by their difference."""
    states = list(range(n * n))
    trans = {}
    for x in range(n):
        for y in range(n):
            trans[(x * n + y, label("t"))] = frozenset([((x + 1) % n) * n + (y + 1) % n])
    fluents = tuple(f"b{k}" for k in range(max(1, (n * n - 1).bit_length())))
    ts = make_system(fluents, ("t",), states, [0], trans)
    c = Custom({x * n + y: (x - y) % n for x in range(n) for y in range(n)})
    return ts, c


def random_system(rng: random.Random, n_states=6, n_actions=2, density=0.3):
    """A random nondeterministic system plus a random partition."""
    nbits = max(1, (n_states - 1).bit_length())
    fluents = tuple(f"f{k}" for k in range(nbits))
    actions = tuple(f"a{k}" for k in range(n_actions))
    states = list(range(n_states))
    trans = {}
    for s in states:
        for a in actions:
            succ = frozenset(t for t in states if rng.random() < density)
            if succ:
                trans[(s, label(a))] = succ
    initial = [s for s in states if rng.random() < 0.4] or [0]
    blocks = rng.randint(1, n_states)
    c = Custom({s: rng.randrange(blocks) for s in states})
    return make_system(fluents, actions, states, initial, trans), c


# -- planning and verdict oracles --

def brute_res(esys, i, sigma) -> frozenset:
    """Res by explicit branching, restated without the library helper."""
    beliefs = {i}
    for lab in sigma:
        nxt = set()
        for j in beliefs:
            if j == ERR:
                nxt.add(ERR)
                continue
            succ = esys.lifted.get((j, lab))
            if succ:
                nxt |= succ
            else:
                nxt.add(ERR)
        beliefs = nxt
    return frozenset(beliefs)


def brute_conformant(esys, i, holds, bound) -> list:
    """Every label sequence of length <= bound whose every prefix avoids ERR
    and whose result satisfies ``holds``; length-then-lexicographic order."""
    out = []
    labels = list(esys.labels)
    for length in range(bound + 1):
        for seq in itertools.product(labels, repeat=length):
            if any(ERR in brute_res(esys, i, seq[:k]) for k in range(1, length + 1)):
                continue
            r = brute_res(esys, i, seq)
            if all(holds(j) for j in r):
                out.append(seq)
    return out


def enumerate_runs(succ, initial, is_goal, cutoff=None) -> set:
    """Failure kinds found by unrolling every run from every initial state.

    ``succ(i)`` is the Phi_B successor set.  A run ends well at a goal state;
    an empty successor set is a dead end; revisiting a state on the current
    run closes a goal-free cycle (a lasso).  An empty result means the
    policy works.
    """
    failures = set()

    def walk(path):
        i = path[-1]
        if is_goal(i):
            return
        nxt = succ(i)
        if not nxt:
            failures.add("dead-end")
            return
        for j in sorted(nxt):
            if j in path:
                failures.add("lasso")
            elif cutoff is None or len(path) < cutoff:
                walk(path + [j])

    for i0 in sorted(initial):
        walk([i0])
    return failures


def random_policy(rng: random.Random, ts):
    """Two placeholder rules over fluent literals and a random target mapping."""
    from eqts.scenario import PolicySpec

    def lit():
        f = rng.choice(ts.fluents)
        return formula(f if rng.random() < 0.5 else f"-{f}")

    def target():
        if rng.random() < 0.3:
            return formula(f"{to_text(lit())} & {to_text(lit())}")
        return lit()

    rules = (("q0", lit()), ("q1", lit()))
    mapping = {}
    for k in range(4):
        key = frozenset(f"q{b}" for b in range(2) if k >> b & 1)
        if rng.random() < 0.85:
            mapping[key] = tuple(target() for _ in range(rng.randint(1, 2)))
    return PolicySpec(rules, mapping, target())


def brute_phi(esys, policy, i, bound) -> frozenset:
    """Phi_B(i) from the definitions: targets by universal rule satisfaction,
    results of every exhaustively enumerated conformant plan."""
    if i == ERR:
        return frozenset()

    def sat(f, j):
        if j == ERR:
            return False
        return all(evaluate(f, set(esys.ts.true_fluents(s))) for s in esys.members(j))

    holding = frozenset(p for p, f in policy.rules if sat(f, i))
    targets = policy.mapping.get(holding, policy.otherwise or ())
    out = set()
    for g in targets:
        for plan in brute_conformant(esys, i, lambda j: sat(g, j), bound):
            out |= brute_res(esys, i, plan)
    return frozenset(out)


def equalize(ts, c):
    return build_equalized(ts, c)


def formula(text):
    """Parse a standalone formula."""
    from eqts.langc.syntax import TokenParser
    return TokenParser(text).formula()

from hypothesis import given
from hypothesis import strategies as st

from eqts.formula import (FALSE, TRUE, And, Atom, Not, Or, atoms, compile2, compile3, conj,
                          disj, evaluate, is_literal, literal_parts, neg, to_text)

from oracles import formula

NAMES = ["p", "q", "r", "s"]
INDEX = {n: k for k, n in enumerate(NAMES)}

leaves = st.one_of(st.sampled_from([TRUE, FALSE]), st.sampled_from(NAMES).map(lambda n: Atom(n)))
formulas = st.recursive(
    leaves,
    lambda sub: st.one_of(
        sub.map(Not),
        st.lists(sub, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(sub, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
    ),
    max_leaves=8,
)


def true_keys(m):
    return {n for n in NAMES if m >> INDEX[n] & 1}


@given(formulas, st.integers(0, 15))
def test_compiled_evaluator_matches_reference(f, m):
    assert compile2(f, INDEX)(m) == evaluate(f, true_keys(m))


@given(formulas, st.integers(0, 15), st.integers(0, 15))
def test_three_valued_evaluator_is_sound(f, assigned, m):
    r = compile3(f, INDEX)(assigned, m)
    if r is None:
        return
    # a decided value must hold for every completion of the partial assignment
    free = [b for b in range(4) if not assigned >> b & 1]
    for k in range(1 << len(free)):
        full = m & assigned
        for j, b in enumerate(free):
            if k >> j & 1:
                full |= 1 << b
        assert evaluate(f, true_keys(full)) == r


@given(formulas, st.integers(0, 15))
def test_three_valued_full_assignment_agrees(f, m):
    assert compile3(f, INDEX)(15, m) == evaluate(f, true_keys(m))


@given(formulas)
def test_text_round_trip(f):
    g = formula(to_text(f))
    for m in range(16):
        assert evaluate(g, true_keys(m)) == evaluate(f, true_keys(m))


def test_dnf_fast_path():
    f = formula("(p & -q) | (r & s) | -p")
    ev = compile2(f, INDEX)
    for m in range(16):
        assert ev(m) == evaluate(f, true_keys(m))


def test_smart_constructors_simplify():
    p = Atom("p")
    assert conj() == TRUE and disj() == FALSE
    assert conj(p, TRUE) == p
    assert disj(p, TRUE) == TRUE
    assert neg(neg(p)) == p


def test_literals():
    assert is_literal(formula("-on(b1,b2)"))
    assert not is_literal(formula("p & q"))
    a, positive = literal_parts(formula("-on(b1,b2)"))
    assert a.key == "on(b1,b2)" and positive is False
    assert {x.key for x in atoms(formula("p & -(q | on(a,b))"))} == {"p", "q", "on(a,b)"}

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eqts.core import label, make_system
from eqts.equalize import (ERR, Custom, Type1, Type2, Violation, build_equalized,
                           check_initial_clustering, check_proper, check_strong_proper,
                           constant, identity, to_dot)
from eqts.errors import SignatureError, TotalityError
from eqts.export import equalized_from_json, equalized_to_json

from oracles import executability_merge, formula, lockstep_product, random_system, three_state_merge

seeds = st.integers(0, 2 ** 32)


def brute_condition1(ts, es):
    out = set()
    for (i, lab), succ in es.lifted.items():
        for j in succ:
            for t in es.members(j):
                if not any(t in ts.transitions.get((s, lab), ()) for s in es.members(i)):
                    out.add((i, lab, j, t))
    return out


def brute_condition2(ts, es):
    out = set()
    for (i, lab), succ in es.lifted.items():
        for j in succ:
            for s in es.members(i):
                if not ts.transitions.get((s, lab), frozenset()) & es.members(j):
                    out.add((i, lab, j, s))
    return out


def as_set(violations):
    return {(v.source, v.label, v.target, v.witness) for v in violations}


@given(seeds)
def test_equalized_states_partition_the_states(seed):
    ts, c = random_system(random.Random(seed))
    es = build_equalized(ts, c)
    members = [s for e in es.estates for s in e.members]
    assert sorted(members) == sorted(ts.states)
    assert [min(e.members) for e in es.estates] == sorted(min(e.members) for e in es.estates)


@given(seeds)
def test_lifted_map_is_existential(seed):
    ts, c = random_system(random.Random(seed))
    es = build_equalized(ts, c)
    for i in es.ids:
        for lab in ts.labels:
            want = {es.of_state[t] for s in es.members(i)
                    for t in ts.transitions.get((s, lab), ())}
            assert set(es.step(i, lab)) == want


@given(seeds)
def test_condition_checks_match_definitions(seed):
    ts, c = random_system(random.Random(seed))
    es = build_equalized(ts, c)
    assert as_set(check_proper(ts, c, cap=10 ** 6)) == brute_condition1(ts, es)
    assert as_set(check_strong_proper(ts, c, cap=10 ** 6)) == brute_condition2(ts, es)


@given(seeds)
def test_identity_is_always_proper(seed):
    ts, _ = random_system(random.Random(seed), n_states=8)
    c = identity(ts)
    assert check_proper(ts, c) == [] and check_strong_proper(ts, c) == []


def test_three_state_merge_witness():
    ts, c = three_state_merge()
    assert check_proper(ts, c) == [Violation("proper", 0, label("a"), 1, 2)]


def test_executability_merge_breaks_condition_two():
    ts, c = executability_merge()
    assert check_proper(ts, c) == []
    assert check_strong_proper(ts, c) == [Violation("strong-proper", 0, label("a"), 1, 2)]


def test_constant_classification_partial_executability():
    ts = make_system(("x", "y"), ("a",), [0, 1, 2], [0], {(0, "a"): {1}})
    assert check_proper(ts, constant(ts)) != []


def test_lockstep_product_is_proper():
    ts, c = lockstep_product(3)
    assert check_proper(ts, c) == [] and check_strong_proper(ts, c) == []


def test_violation_cap():
    ts, c = random_system(random.Random(3), n_states=10, density=0.5)
    assert len(check_proper(ts, constant(ts), cap=2)) <= 2


def test_initial_clustering():
    ts = make_system(("x",), ("a",), [0, 1], [0], {})
    assert check_initial_clustering(ts, identity(ts))
    assert not check_initial_clustering(ts, constant(ts))


def test_type1_profile_marks_unknowns():
    c = Type1(("p", "q", "r"), ["q"])
    assert c.profile(c.key(0b110)) == {"p": "u", "q": "t", "r": "u"}
    assert c.key(0b010) == c.key(0b111)
    with pytest.raises(SignatureError):
        Type1(("p",), ["z"])


def test_type2_uses_definitions():
    c = Type2(("p", "q"), [("both", formula("p & q")), ("one", formula("p | q"))])
    assert c.describe(c.key(0b11)) == ["both", "one"]
    assert c.describe(c.key(0b01)) == ["one"]
    assert c.describe(c.key(0)) == []


def test_custom_table_must_be_total():
    ts = make_system(("x",), ("a",), [0, 1], [0], {})
    with pytest.raises(TotalityError):
        build_equalized(ts, Custom({0: "A"}))


def test_error_state_is_absorbing():
    ts, c = three_state_merge()
    es = build_equalized(ts, c)
    assert es.step(ERR, label("a")) == {ERR}
    assert es.name(ERR) == "err"


def test_formula_satisfaction_is_universal():
    ts = make_system(("p", "q"), ("a",), [0b01, 0b11], [0b01], {})
    es = build_equalized(ts, Type1(ts.fluents, ["p"]))
    (i,) = es.ids
    assert es.lift_formula(formula("p"))(i)
    assert not es.lift_formula(formula("q"))(i)
    assert not es.lift_formula(formula("p"))(ERR)


@given(seeds)
def test_export_round_trip(seed):
    ts, c = random_system(random.Random(seed))
    es = build_equalized(ts, c)
    back = equalized_from_json(json.loads(json.dumps(equalized_to_json(es))))
    assert [e.members for e in back.estates] == [e.members for e in es.estates]
    assert dict(back.lifted) == dict(es.lifted)
    assert back.initial == es.initial


def test_dot_has_initial_marker():
    ts, c = three_state_merge()
    dot = to_dot(build_equalized(ts, c))
    assert "e0" in dot and "peripheries=2" in dot

"""Per-theory solvers: worked examples, witness replay, monotonicity, and
agreement with the brute-force enumerations."""

import random

import pytest

from qcsp.checking import check_part_witness, check_value_witness
from qcsp.formulas import RelationSymbol, eq, make_instance, neq, rel
from qcsp.oracle import brute_decide_theory
from qcsp.theories import (
    ContractViolation,
    Digraph,
    TheorySolver,
    TournamentSet,
    builtin_mi,
    canonical_ranks,
    entails_eq,
    eq_decide,
    henson_decide,
    pa_decide,
    relation_from_predicate,
    relation_for_name,
    temporal_decide,
)

LT = RelationSymbol("t1", "lt", 2)
LEQ = RelationSymbol("t1", "leq", 2)
MI = RelationSymbol("t1", "mi", 3)
E = RelationSymbol("t1", "E", 2)
C3 = Digraph(("a", "b", "c"), frozenset({("a", "b"), ("b", "c"), ("c", "a")}))
T3 = Digraph(("a", "b", "c"), frozenset({("a", "b"), ("a", "c"), ("b", "c")}))
MI_RELS = {"mi": builtin_mi()}


def test_eq_decide_examples():
    assert not eq_decide(make_instance([eq("x", "y"), eq("y", "z"), neq("x", "z")])).sat
    result = eq_decide(make_instance([neq("x", "y"), neq("y", "z"), neq("x", "z")]))
    assert result.sat
    assert len(set(result.witness.values())) == 3
    assert eq_decide(make_instance([])).sat


def test_eq_decide_rejects_rel_atoms():
    with pytest.raises(ContractViolation):
        eq_decide(make_instance([rel(LT, "x", "y")]))


def test_eq_block_numbering_deterministic():
    result = eq_decide(make_instance([eq("m", "z"), neq("a", "z")]))
    # classes ordered by least member: {a} then {m, z}
    assert result.witness == {"a": 0, "m": 1, "z": 1}


def test_pa_decide_examples():
    result = pa_decide(make_instance([rel(LT, "x", "y"), rel(LT, "y", "z")]))
    assert result.sat
    assert result.witness == {"x": 0, "y": 1, "z": 2}
    assert not pa_decide(make_instance([rel(LT, "x", "y"), rel(LT, "y", "x")])).sat
    assert not pa_decide(
        make_instance([rel(LEQ, "x", "y"), rel(LEQ, "y", "x"), neq("x", "y")])
    ).sat


def test_pa_decide_rejects_other_relations():
    with pytest.raises(ContractViolation):
        pa_decide(make_instance([rel(MI, "x", "y", "z")]))


def test_temporal_decide_examples():
    unsat = make_instance(
        [rel(MI, "x", "y", "z"), rel(LT, "x", "y"), rel(LT, "x", "z")]
    )
    assert not temporal_decide(unsat, MI_RELS).sat

    sat = make_instance(
        [rel(MI, "x", "y", "z"), rel(LEQ, "x", "y"), rel(LEQ, "x", "z")]
    )
    result = temporal_decide(sat, MI_RELS)
    assert result.sat
    assert result.witness["x"] == result.witness["y"]

    four = make_instance(
        [
            rel(MI, "a", "b", "c"),
            rel(MI, "c", "d", "a"),
            rel(LEQ, "a", "b"),
            rel(LEQ, "c", "d"),
            neq("a", "b"),
            neq("c", "d"),
        ]
    )
    assert not temporal_decide(four, MI_RELS).sat


def test_temporal_decide_unresolved_relation():
    other = RelationSymbol("t1", "mystery", 2)
    with pytest.raises(ContractViolation):
        temporal_decide(make_instance([rel(other, "x", "y")]), {})


def test_temporal_handles_repeated_arguments():
    inst = make_instance([rel(MI, "x", "x", "y"), rel(LT, "x", "y")])
    # x >= x holds, so any order with x < y works
    assert temporal_decide(inst, MI_RELS).sat
    inst2 = make_instance([rel(LT, "x", "x")])
    assert not temporal_decide(inst2, MI_RELS).sat


def test_henson_decide_examples():
    triangle = make_instance(
        [rel(E, "x", "y"), rel(E, "y", "z"), rel(E, "z", "x")]
    )
    assert not henson_decide(triangle, (C3,)).sat
    path = make_instance([rel(E, "x", "y"), rel(E, "y", "z")])
    assert henson_decide(path, (C3,)).sat
    # a digon is never realizable in the loopless digon-free age
    digon = make_instance(
        [rel(E, "x", "y"), rel(E, "y", "x"), rel(E, "y", "z"), rel(E, "z", "x")]
    )
    assert not henson_decide(digon, (C3,)).sat


def test_henson_decide_collapse_and_loops():
    assert not henson_decide(make_instance([rel(E, "x", "x")]), (C3,)).sat
    merged = make_instance([eq("x", "y"), rel(E, "x", "y")])
    assert not henson_decide(merged, (C3,)).sat
    assert not henson_decide(make_instance([eq("x", "y"), neq("x", "y")]), (C3,)).sat


def test_henson_transitive_tournament():
    chain = make_instance([rel(E, "x", "y"), rel(E, "y", "z"), rel(E, "x", "z")])
    assert not henson_decide(chain, (T3,)).sat
    assert henson_decide(chain, (C3,)).sat


def test_entails_eq_examples():
    pa = TheorySolver("t1", "point_algebra", True)
    inst = make_instance([rel(LEQ, "x", "y"), rel(LEQ, "y", "x")])
    assert entails_eq(pa, inst, "x", "y")
    eqs = TheorySolver("t1", "equality", True)
    assert not entails_eq(eqs, make_instance([neq("x", "y")]), "x", "z")
    temporal = TheorySolver("t1", "temporal", False, relations=MI_RELS)
    inst3 = make_instance(
        [rel(MI, "x", "y", "z"), rel(LEQ, "x", "y"), rel(LEQ, "x", "z")]
    )
    assert entails_eq(temporal, inst3, "x", "y")


def test_relation_from_predicate():
    full = relation_from_predicate(3, lambda w: True)
    assert len(full.allowed) == 13
    mi = builtin_mi()
    assert len(mi.allowed) == 9
    lt_rel = relation_from_predicate(2, lambda w: w[0] < w[1])
    assert lt_rel.allowed == frozenset({(0, 1)})
    with pytest.raises(ValueError):
        relation_from_predicate(8, lambda w: True)


def test_builtin_mi_matches_rational_sampling():
    # membership agrees with the defining disjunction on sampled triples
    rng = random.Random(3)
    mi = builtin_mi()
    for _ in range(500):
        triple = tuple(rng.randint(0, 4) for _ in range(3))
        x, y, z = triple
        expected = x >= y or x > z
        assert (canonical_ranks(triple) in mi.allowed) == expected


def test_tournament_validation():
    with pytest.raises(ValueError):
        TournamentSet((Digraph(("a", "b"), frozenset({("a", "b"), ("b", "a")})),))
    ok = TournamentSet((C3, T3))
    assert len(ok.tournaments) == 2


def _random_order_instance(rng, n_max=5):
    names = [chr(97 + i) for i in range(rng.randint(1, n_max))]
    atoms = []
    for _ in range(rng.randint(1, 6)):
        kind = rng.choice(["mi", "lt", "leq", "eq", "neq"])
        if kind == "mi":
            atoms.append(rel(MI, *[rng.choice(names) for _ in range(3)]))
        elif kind in ("lt", "leq"):
            symbol = LT if kind == "lt" else LEQ
            atoms.append(rel(symbol, *[rng.choice(names) for _ in range(2)]))
        elif kind == "eq":
            atoms.append(eq(rng.choice(names), rng.choice(names)))
        else:
            atoms.append(neq(rng.choice(names), rng.choice(names)))
    return make_instance(atoms)


def test_temporal_witness_replay_on_random_instances():
    rng = random.Random(17)
    solver = TheorySolver("t1", "temporal", False, relations=MI_RELS)
    for _ in range(500):
        inst = _random_order_instance(rng)
        result = temporal_decide(inst, MI_RELS)
        if result.sat:
            assert check_value_witness(solver, inst, result.witness)


def test_monotonicity_random_instances():
    rng = random.Random(29)
    for _ in range(300):
        inst = _random_order_instance(rng)
        sub_atoms = [a for a in inst.atoms if rng.random() < 0.6]
        sub = make_instance(sub_atoms)
        if not temporal_decide(sub, MI_RELS).sat:
            assert not temporal_decide(inst, MI_RELS).sat


def test_henson_monotonicity_exhaustive_three_vertices():
    names = ["x", "y", "z"]
    pairs = [(a, b) for a in names for b in names if a != b]
    for mask in range(2 ** len(pairs)):
        atoms = [rel(E, *pairs[i]) for i in range(len(pairs)) if mask >> i & 1]
        inst = make_instance(atoms)
        if not henson_decide(inst, (C3,)).sat:
            for extra in pairs:
                bigger = make_instance(atoms + [rel(E, *extra)])
                assert not henson_decide(bigger, (C3,)).sat


def test_pa_agrees_with_temporal_small_slice():
    # full exhaustive agreement runs in the acceptance suite
    rng = random.Random(41)
    for _ in range(400):
        names = [chr(97 + i) for i in range(rng.randint(1, 4))]
        atoms = []
        for _ in range(rng.randint(1, 4)):
            kind = rng.choice(["lt", "leq", "eq", "neq"])
            x, y = rng.choice(names), rng.choice(names)
            if kind in ("lt", "leq"):
                atoms.append(rel(LT if kind == "lt" else LEQ, x, y))
            elif kind == "eq":
                atoms.append(eq(x, y))
            else:
                atoms.append(neq(x, y))
        inst = make_instance(atoms)
        assert pa_decide(inst).sat == temporal_decide(inst, {}).sat


def test_henson_agrees_with_completion_oracle_exhaustive_four():
    names = [f"x{i}" for i in range(4)]
    pairs = [(a, b) for a in names for b in names if a != b]
    for mask in range(2 ** len(pairs)):
        atoms = [rel(E, *pairs[i]) for i in range(len(pairs)) if mask >> i & 1]
        inst = make_instance(atoms)
        solver_sat = henson_decide(inst, (C3,)).sat
        oracle_sat = brute_decide_theory("henson", inst, forbidden=(C3,)).sat
        assert solver_sat == oracle_sat


def test_henson_agrees_with_completion_oracle_sampled_five():
    rng = random.Random(67)
    names = [f"x{i}" for i in range(5)]
    pairs = [(a, b) for a in names for b in names if a != b]
    for _ in range(500):
        mask = rng.randrange(2 ** len(pairs))
        atoms = [rel(E, *pairs[i]) for i in range(len(pairs)) if mask >> i & 1]
        for _ in range(rng.randint(0, 2)):
            atoms.append(neq(*rng.sample(names, 2)))
        inst = make_instance(atoms)
        solver_sat = henson_decide(inst, (C3,)).sat
        oracle_sat = brute_decide_theory("henson", inst, forbidden=(C3,)).sat
        assert solver_sat == oracle_sat


def test_witness_replay_all_solvers():
    rng = random.Random(53)
    pa = TheorySolver("t1", "point_algebra", True)
    eqs = TheorySolver("t1", "equality", True)
    hens = TheorySolver("t1", "henson", False, forbidden=(C3,))
    for _ in range(300):
        names = [chr(97 + i) for i in range(rng.randint(1, 5))]
        eq_atoms = []
        for _ in range(rng.randint(0, 4)):
            kind = rng.choice(["eq", "neq"])
            x, y = rng.choice(names), rng.choice(names)
            eq_atoms.append(eq(x, y) if kind == "eq" else neq(x, y))
        inst = make_instance(eq_atoms)
        result = eq_decide(inst)
        if result.sat:
            assert check_part_witness(eqs, inst, result.witness)

        pa_atoms = list(eq_atoms)
        for _ in range(rng.randint(0, 4)):
            x, y = rng.choice(names), rng.choice(names)
            pa_atoms.append(rel(rng.choice([LT, LEQ]), x, y))
        inst = make_instance(pa_atoms)
        result = pa_decide(inst)
        if result.sat:
            assert check_part_witness(pa, inst, result.witness)

        arc_atoms = []
        for _ in range(rng.randint(0, 5)):
            x, y = rng.choice(names), rng.choice(names)
            arc_atoms.append(rel(E, x, y))
        inst = make_instance(arc_atoms)
        result = henson_decide(inst, (C3,))
        if result.sat:
            assert check_part_witness(hens, inst, result.witness)

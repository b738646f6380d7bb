import itertools

import pytest

from fusionlab.classes import builtin_class
from fusionlab.errors import FusionLabError
from fusionlab.logic import Language, Var, make_language_family, parse_formula, relational_language
from fusionlab.normal_forms import (
    EFlatFormula, FlatLiteral, bounded_from_check, check_bounded, conjoin_bounded, diagram_satisfied,
    eflat_disjunction, flat_diagram, flatten_to_eflat, morleyize, split_flat_by_language,
    unique_witness_violation,
)
from fusionlab.structures import FiniteStructure, evaluate

import oracles

FR = Language(("V",), {"R": 1}, {"f": 1})
GRAPH = relational_language({"E": 2})


def test_nested_term_gets_one_witness():
    (d,) = flatten_to_eflat(parse_formula("R(f(x))", FR), FR)
    assert len(d.witnesses) == 1
    assert str(d) == "exists _w0: f(x)=_w0 & R(_w0)"


def test_shared_subterm_named_once():
    (d,) = flatten_to_eflat(parse_formula("R(f(f(x))) & f(f(x)) = y", FR), FR)
    assert len(d.witnesses) == 2


def test_disjunction_is_equivalent_on_small_structures():
    phi = parse_formula("!(R(f(x)) -> f(y) = x) | R(f(f(y)))", FR)
    psi = eflat_disjunction(flatten_to_eflat(phi, FR))
    for n in (1, 2, 3):
        for S in oracles.all_structures(FR, n):
            for a, b in itertools.product(range(n), repeat=2):
                env = {"x": a, "y": b}
                assert oracles.holds(phi, S, env) == oracles.holds(psi, S, env)


def test_quantified_input_rejected():
    with pytest.raises(FusionLabError):
        flatten_to_eflat(parse_formula("exists y: R(y)", FR), FR)


def test_witness_check_catches_non_unique_body():
    w = Var("w", "V")
    d = EFlatFormula((w,), (FlatLiteral(True, "R", (w,)),), FR)
    M = FiniteStructure(FR, {"V": (0, 1)}, {"R": {(0,), (1,)}}, {"f": {(0,): 0, (1,): 0}}, {})
    assert unique_witness_violation(d, M) is not None


def test_split_by_member_language():
    L1 = relational_language({"R": 3, "E1": 2})
    L2 = relational_language({"R": 3, "E2": 2})
    fam = make_language_family([L1, L2])
    phi = parse_formula("E1(x,y) & R(x,y,z) & !E2(y,z)", fam.union)
    (d,) = flatten_to_eflat(phi, fam.union)
    parts = split_flat_by_language(d.body, fam)
    assert [str(l) for l in parts[1]] == ["E1(x,y)", "R(x,y,z)"]
    assert [str(l) for l in parts[2]] == ["!E2(y,z)"]


def test_flat_diagram_characterizes_structure():
    M = FiniteStructure.relational(GRAPH, ("a", "b"), {"E": {("a", "b"), ("b", "a")}})
    diag = flat_diagram(M)
    assert diagram_satisfied(diag, M, {"a": "a", "b": "b"})
    N = FiniteStructure.relational(GRAPH, ("a", "b"), {})
    assert not diagram_satisfied(diag, N, {"a": "a", "b": "b"})
    assert len(diag) == 4 + 4


def test_morleyization_expansion_satisfies_axioms():
    phi = parse_formula("exists z: E(x,z) & E(z,y)", GRAPH)
    res = morleyize(GRAPH, [phi], avoid={"R0"})
    assert set(res.language.relations) == {"E", "R1"}
    M = FiniteStructure.relational(GRAPH, range(3), {"E": {(0, 1), (1, 0), (1, 2), (2, 1)}})
    X = res.expand(M)
    assert all(evaluate(X, a) for a in res.axioms)
    assert (0, 2) in X.relations["R1"] and (0, 1) not in X.relations["R1"]


def test_bounded_check_verifies_function_graph():
    spec = builtin_class("graphs")
    phi = parse_formula("E(x,y)", GRAPH)
    x, y = Var("x", "V"), Var("y", "V")
    v = check_bounded(phi, (x,), (y,), spec, 1, 3)
    assert not v.verified and len(v.witnesses) == 2
    assert check_bounded(phi, (x,), (y,), spec, 2, 3).verified


def test_bounded_product_bound():
    L = Language(("V",), {}, {"f": 1})
    from fusionlab.classes import ClassSpec
    spec = ClassSpec(L, (), name="unary")
    a = parse_formula("f(x)=y", L)
    b = parse_formula("f(y)=x | y=x", L)
    x, y = Var("x", "V"), Var("y", "V")
    fa = bounded_from_check(a, (x,), (y,), spec, 1, 3)
    with pytest.raises(FusionLabError):
        bounded_from_check(b, (x,), (y,), spec, 1, 3)
    both = conjoin_bounded(fa, fa)
    assert both.k == 1 and both.verified

import itertools

import pytest

from fusionlab.classes import builtin_class, enumerate_models
from fusionlab.errors import StructureError
from fusionlab.logic import Language, parse_formula, relational_language
from fusionlab.structures import (
    FiniteStructure, automorphisms, evaluate, find_isomorphism, generated_substructure, is_isomorphic,
)

import oracles

GRAPH = relational_language({"E": 2})


def path(n):
    E = {(i, i + 1) for i in range(n - 1)}
    return FiniteStructure.relational(GRAPH, range(n), {"E": E | {(b, a) for a, b in E}})


def test_evaluate_agrees_with_oracle():
    phi = parse_formula("exists z: E(x,z) & E(z,y) & x!=y", GRAPH)
    for M in enumerate_models(builtin_class("graphs"), 4):
        S = oracles.from_library(M)
        for a, b in itertools.product(M.universe, repeat=2):
            env = {"x": M.universe.index(a), "y": M.universe.index(b)}
            assert evaluate(M, phi, {"x": a, "y": b}) == oracles.holds(phi, S, env)


def test_path_automorphisms():
    auts = automorphisms(path(4))
    assert len(auts) == 2
    assert auts.is_group()
    assert sorted(len(o) for o in auts.orbits()) == [2, 2]


def test_cycle_automorphism_group_is_dihedral():
    n = 5
    E = {(i, (i + 1) % n) for i in range(n)}
    C = FiniteStructure.relational(GRAPH, range(n), {"E": E | {(b, a) for a, b in E}})
    assert len(automorphisms(C)) == 2 * n
    assert len(automorphisms(C, fixed=[0])) == 2


def test_isomorphism_found_and_valid():
    P = path(4)
    Q = P.rename({0: "d", 1: "c", 2: "b", 3: "a"})
    iso = find_isomorphism(P, Q)
    assert iso is not None and iso.is_valid()
    assert not is_isomorphic(P, FiniteStructure.relational(GRAPH, range(4), {}))


def test_generated_substructure_follows_functions():
    L = Language(("V",), {}, {"f": 1})
    M = FiniteStructure(L, {"V": range(4)}, {}, {"f": {(0,): 1, (1,): 2, (2,): 1, (3,): 3}}, {})
    sub, inc = generated_substructure(M, [0])
    assert set(sub.elements) == {0, 1, 2}
    assert inc.is_valid()


def test_bad_tuple_rejected():
    with pytest.raises(StructureError):
        FiniteStructure.relational(GRAPH, range(2), {"E": {(0, 5)}})


def test_partial_function_rejected():
    L = Language(("V",), {}, {"f": 1})
    with pytest.raises(StructureError):
        FiniteStructure(L, {"V": range(2)}, {}, {"f": {(0,): 1}}, {})

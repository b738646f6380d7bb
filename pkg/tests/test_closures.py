import random

import pytest

from fusionlab.classes import builtin_class
from fusionlab.closures import (
    ClosureOperator, TripleConfig, acl_test_duplication, bcl_closure, ccl_fixpoint, check_closure_laws,
    check_indep_axioms, indep_eval, partner_operator, register_operator,
)
from fusionlab.errors import ClosureDefect, FusionLabError, PreconditionError
from fusionlab.logic import relational_language
from fusionlab.normal_forms import BoundedFormula
from fusionlab.structures import FiniteStructure, generated_substructure
from fusionlab.suites import bcl_pool, random_bcl_triple, random_function_graph, random_operator_pair

import oracles

GRAPH = relational_language({"E": 2})


def graph(elems, edges):
    return FiniteStructure.relational(GRAPH, elems, {"E": set(edges) | {(b, a) for a, b in edges}})


@pytest.mark.parametrize("strategy", ["round-robin", "worklist"])
def test_ccl_matches_brute_force(strategy):
    rng = random.Random(11)
    for _ in range(60):
        host, seed, ops = random_operator_pair(rng)
        got = ccl_fixpoint(host, seed, ops, strategy)
        want = oracles.least_closed_superset(host.universe, seed, lambda s: all(op(host, s) == s for op in ops))
        assert got == want


def test_partner_closure_is_component():
    G = graph(range(5), [(0, 1), (1, 2), (3, 4)])
    assert ccl_fixpoint(G, [0], [partner_operator("E")]) == {0, 1, 2}


def test_shrinking_operator_raises_defect():
    G = graph(range(3), [])
    shrink = ClosureOperator("shrink", lambda M, s: set(list(s)[:1]))
    with pytest.raises(ClosureDefect):
        ccl_fixpoint(G, [0, 1], [shrink])
    with pytest.raises(ClosureDefect):
        register_operator(shrink, [G])


def test_non_idempotent_operator_detected():
    step = ClosureOperator("step", lambda M, s: s | {max(s) + 1} if s and max(s) + 1 in M.elements else s)
    bad = check_closure_laws(step, [graph(range(3), [])])
    assert bad is not None and bad[0] == "idempotent"


def test_bcl_matches_brute_force():
    rng = random.Random(4)
    for _ in range(60):
        host, seed, lib = random_bcl_triple(rng)

        def closed(s):
            if set(generated_substructure(host, s)[0].elements) != s:
                return False
            return all(oracles_witnesses_inside(host, bf, s) for bf in lib)

        assert bcl_closure(host, seed, lib) == oracles.least_closed_superset(host.universe, seed, closed)


def oracles_witnesses_inside(host, bf, s):
    import itertools
    S = oracles.from_library(host)
    idx = {e: i for i, e in enumerate(host.universe)}
    for xs in itertools.product(sorted(s, key=idx.get), repeat=len(bf.x)):
        for ys in itertools.product(host.universe, repeat=len(bf.y)):
            env = {v.name: idx[e] for v, e in zip(bf.x + bf.y, xs + ys)}
            if oracles.holds(bf.formula, S, env) and not set(ys) <= s:
                return False
    return True


def test_bcl_pool_entries_are_verified():
    assert all(bf.verified for bf in bcl_pool())


def test_bcl_rejects_unverified_entry():
    host = random_function_graph(random.Random(0), 3)
    bf = bcl_pool()[0]
    bare = BoundedFormula(bf.formula, bf.x, bf.y, bf.k)
    with pytest.raises(PreconditionError):
        bcl_closure(host, [0], [bare])


def test_duplication_in_graphs_and_bounded_equivalence():
    G = graph(["a", "b"], [("a", "b")])
    v = acl_test_duplication(builtin_class("graphs"), G, ["a"], "b")
    assert v.non_algebraic and v.witness.size == 3
    assert builtin_class("graphs").violation(v.witness) is None
    be = builtin_class("bounded-equivalence")
    pair = FiniteStructure.relational(be.language, ["a", "b"], {"E": {(x, y) for x in "ab" for y in "ab"}})
    assert not acl_test_duplication(be, pair, ["a"], "b").non_algebraic


def test_duplication_preconditions():
    G = graph(["a", "b"], [])
    with pytest.raises(PreconditionError):
        acl_test_duplication(builtin_class("graphs"), G, ["a"], "a")
    with pytest.raises(PreconditionError):
        acl_test_duplication(builtin_class("graphs"), G, ["a"], "b", budget=0)


def test_indep_relations_on_a_path():
    G = graph(range(3), [(0, 1), (1, 2)])
    cfg = TripleConfig.of(G, [0], [2], [1])
    assert indep_eval("free-amalgam", cfg)
    assert indep_eval("non-edge", cfg) and not indep_eval("edge", cfg)
    assert not indep_eval("free-amalgam", TripleConfig.of(G, [0], [1], []))
    with pytest.raises(FusionLabError):
        indep_eval("nope", cfg)


@pytest.mark.parametrize("axiom", ["invariance", "algebraic-independence", "stationarity"])
def test_free_amalgam_axioms_on_graphs(axiom):
    r = check_indep_axioms("free-amalgam", builtin_class("graphs"), axiom, size_limit=4)
    assert r.holds and r.checked > 0


def test_edge_relation_full_existence_needs_expansion():
    with pytest.raises(PreconditionError):
        check_indep_axioms("edge", builtin_class("graphs"), "full-existence", size_limit=3)


@pytest.mark.parametrize("relation", ["edge", "non-edge"])
def test_cross_relations_stationary_on_triangle_free(relation):
    r = check_indep_axioms(relation, builtin_class("triangle-free"), "stationarity", size_limit=4)
    assert r.holds and r.label == "holds-up-to-size 4" and r.witness is None

import itertools

import pytest

from fusionlab.classes import builtin_class, fusion_class
from fusionlab.errors import ClassViolation, LanguageError, PreconditionError, TypeClashError
from fusionlab.fraisse import (
    AmalgamProblem, build_generic, check_class_properties, check_extension_axioms, check_fraisse_expansion,
    find_clash, free_amalgam, henson_types, make_qftype, realize_joint_type, replay_build,
)
from fusionlab.interpretations import henson_reduct
from fusionlab.logic import relational_language
from fusionlab.structures import FiniteStructure
from fusionlab.suites import henson_config

import oracles

GRAPH = relational_language({"E": 2})


def graph(elems, edges):
    return FiniteStructure.relational(GRAPH, elems, {"E": set(edges) | {(b, a) for a, b in edges}})


def test_free_amalgam_of_two_edges():
    base = graph(["a"], [])
    left, right = graph(["a", "b"], [("a", "b")]), graph(["a", "c"], [("a", "c")])
    D, gl, gr = free_amalgam(AmalgamProblem(base, left, right, {"a": "a"}, {"a": "a"}), builtin_class("triangle-free"))
    assert D.size == 3 and ("b", "c") not in D.relations["E"]
    assert gl.is_valid() and gr.is_valid()


def test_free_amalgam_leaving_class_names_axiom():
    base = graph(["a", "b"], [("a", "b")])
    left, right = graph(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")]), graph(["a", "b"], [("a", "b")])
    ident = {"a": "a", "b": "b"}
    D, _, _ = free_amalgam(AmalgamProblem(base, left, right, ident, dict(ident)))
    with pytest.raises(ClassViolation):
        free_amalgam(AmalgamProblem(base, left, right, ident, dict(ident)), builtin_class("triangle-free"))
    assert D.size == 3


def test_tournaments_have_no_free_amalgam_but_amalgamate():
    r = check_class_properties(builtin_class("tournaments"), 4)
    assert r.ok


def test_bounded_equivalence_dap_witness_is_partner():
    r = check_class_properties(builtin_class("bounded-equivalence"), 4)
    assert r.verdicts["AP"].holds and not r.verdicts["dAP"].holds
    w = r.verdicts["dAP"].witness
    assert w.base.size == 1 and w.left.size == w.right.size == 2


def test_functional_language_rejected():
    from fusionlab.classes import ClassSpec
    from fusionlab.logic import Language
    spec = ClassSpec(Language(("V",), {}, {"f": 1}), ())
    with pytest.raises(LanguageError):
        check_class_properties(spec, 2)


def test_generic_graph_build_meets_extension_axioms():
    g = build_generic(builtin_class("graphs"), budget=40, ext_size=2, seed=1)
    rep = check_extension_axioms(g.structure, builtin_class("graphs"), 2)
    assert g.quiescent and rep.satisfied
    elems = g.structure.universe
    assert oracles.triangle_count(elems, g.structure.relations["E"]) >= 1


def test_build_is_seed_deterministic_and_replayable():
    spec = builtin_class("triangle-free")
    a = build_generic(spec, budget=20, ext_size=2, seed=5)
    b = build_generic(spec, budget=20, ext_size=2, seed=5)
    assert a.structure.relations == b.structure.relations
    assert replay_build(spec, a.log).relations == a.structure.relations


def test_extension_audit_agrees_with_oracle_on_clebsch():
    V, E = oracles.clebsch_graph()
    G = FiniteStructure.relational(GRAPH, V, {"E": E})
    assert oracles.triangle_count(V, E) == 0
    for k in (2, 3):
        assert check_extension_axioms(G, builtin_class("triangle-free"), k).satisfied == oracles.extension_ok(V, E, k)
    assert check_extension_axioms(G, builtin_class("triangle-free"), 3).satisfied


def test_extension_audit_flags_a_path():
    G = graph([0, 1, 2], [(0, 1), (1, 2)])
    rep = check_extension_axioms(G, builtin_class("triangle-free"), 1)
    assert not rep.satisfied
    assert rep.satisfied == oracles.extension_ok([0, 1, 2], G.relations["E"], 1)


def test_expansions_of_hypergraphs():
    base = builtin_class("hypergraphs3")
    assert check_fraisse_expansion(base, builtin_class("k1"), 3).verified
    bad = check_fraisse_expansion(builtin_class("graphs"), builtin_class("clique-graphs"), 3)
    assert bad.verified  # every graph expands by an empty predicate


def test_fusion_build_reduct_is_triangle_free():
    g = build_generic(fusion_class(), budget=15, ext_size=1, seed=0)
    G = henson_reduct(g.structure)
    assert oracles.triangle_count(G.universe, G.relations["E"]) == 0


def test_henson_types_realize_and_clash():
    cfg = henson_config()
    g = build_generic(fusion_class(), budget=8, ext_size=1, seed=2)
    M = g.structure
    A, B = M.universe[:1], M.universe[1:3]
    types = henson_types(M, A, B, "new", cfg)
    out = realize_joint_type(M, types, cfg)
    assert all(("new", a) in out.relations["E1"] and ("new", a) in out.relations["E2"] for a in A)
    flipped = dict(types)
    t = types[2]
    lit = next(l for l in t.literals if l.symbol == "R")
    flipped[2] = type(t)(t.base, t.point, t.index, (t.literals - {lit}) | {lit.negate()})
    assert find_clash(flipped, cfg.family) is not None
    with pytest.raises(TypeClashError) as info:
        realize_joint_type(M, flipped, cfg)
    assert (info.value.literal.symbol, info.value.literal.args) == (lit.symbol, lit.args)


def test_inconsistent_member_type_rejected():
    cfg = henson_config()
    M = FiniteStructure.relational(fusion_class().language, ["a"], {})
    truth = {}
    from fusionlab.fraisse import type_atoms
    for r, t in type_atoms(cfg.family[1], ("a",), "c"):
        truth[(r, t)] = r == "E1" and t == ("c", "a")  # not symmetric
    with pytest.raises(ClassViolation):
        make_qftype(M, ("a",), "c", 1, truth, cfg)


def test_budget_must_be_positive():
    with pytest.raises(PreconditionError):
        build_generic(builtin_class("graphs"), budget=0)

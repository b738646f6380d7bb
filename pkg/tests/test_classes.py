import pytest

from fusionlab.classes import ClassSpec, Theory, builtin_class, count_labeled, enumerate_models
from fusionlab.errors import BudgetExceeded
from fusionlab.logic import parse_formula, relational_language
from fusionlab.search import SatProblem, solutions

import oracles

# isomorphism-class counts for sizes 0.. computed by the brute-force oracle
FROZEN = {
    "graphs": [1, 1, 2, 4, 11],
    "triangle-free": [1, 1, 2, 3, 7],
    "tournaments": [1, 1, 1, 2, 4],
    "hypergraphs3": [1, 1, 1, 2, 5, 34],
    "k1": [1, 1, 2, 7, 70],
    "k2": [1, 1, 2, 7, 70],
    "clique-graphs": [1, 2, 5, 14, 50],
    "bounded-equivalence": [1, 1, 2, 2, 3],
    "fusion": [1, 1, 4, 32],
}


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_enumeration_counts(name):
    spec = builtin_class(name)
    assert [len(enumerate_models(spec, n)) for n in range(len(FROZEN[name]))] == FROZEN[name]


@pytest.mark.parametrize("name,arities", [("graphs", {"E": 2}), ("k1", {"R": 3, "E1": 2})])
def test_counts_match_oracle(name, arities):
    spec = builtin_class(name)
    axioms = [parse_formula(a, spec.language) if isinstance(a, str) else a for a in spec.all_axioms]
    for n in range(4):
        want = oracles.set_iso_count(n, arities, lambda S: all(oracles.holds(a, S, {}) for a in axioms))
        assert len(enumerate_models(spec, n)) == want


def test_labeled_graph_count():
    assert [count_labeled(builtin_class("graphs"), n) for n in range(5)] == [2 ** (n * (n - 1) // 2) for n in range(5)]


def test_forbidden_configuration():
    G = relational_language({"E": 2})
    K3 = [M for M in enumerate_models(builtin_class("graphs"), 3) if len(M.relations["E"]) == 6][0]
    spec = ClassSpec(G, ("forall x: !E(x,x)", "forall x y: E(x,y) -> E(y,x)"), [K3], name="no-k3")
    assert [len(enumerate_models(spec, n)) for n in range(5)] == FROZEN["triangle-free"]


def test_theory_violation_names_axiom():
    spec = builtin_class("triangle-free")
    K3 = [M for M in enumerate_models(builtin_class("graphs"), 3) if len(M.relations["E"]) == 6][0]
    ax, env = spec.violation(K3)
    assert "E(z,x)" in str(ax) or env
    assert Theory(spec.language, spec.axioms).satisfied_by(K3) is False


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        enumerate_models(builtin_class("graphs"), 5, budget=10)


def test_sat_enumerates_all_models():
    p = SatProblem(3)
    p.add_clause([1, 2])
    p.add_clause([-1, -3])
    got = {tuple(s) for s in solutions(p)}
    brute = {(a, b, c) for a in (False, True) for b in (False, True) for c in (False, True)
             if (a or b) and not (a and c)}
    assert got == brute

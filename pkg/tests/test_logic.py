import random

import pytest

from fusionlab.errors import LanguageError, ParseError, SortError, UndeclaredSymbolError
from fusionlab.logic import (
    And, Atom, Language, Not, Or, Var, conj, disj, free_vars, make_language_family, parse_formula,
    relational_language, to_text,
)

import oracles

GRAPH = relational_language({"E": 2})
TWO = Language(("M", "N"), {"R": ("M", "N")}, {"f": (("M",), "N")}, {"c": "M"})


def test_parse_and_print_round_trip():
    text = "forall x y: E(x,y) -> E(y,x)"
    phi = parse_formula(text, GRAPH)
    assert to_text(phi) == text
    assert parse_formula(to_text(phi), GRAPH) == phi


@pytest.mark.parametrize("text", ["E(x,y) & !E(y,x) | x=y", "exists z: E(x,z) & E(z,y)", "x!=y <-> !E(x,y)"])
def test_printer_output_reparses(text):
    phi = parse_formula(text, GRAPH)
    assert parse_formula(to_text(phi), GRAPH) == phi


def test_random_formulas_reparse():
    rng = random.Random(3)
    for name, L in oracles.TWO_SYMBOL_LANGUAGES.items():
        for _ in range(20):
            phi = oracles.random_qf(rng, L, size=rng.randint(1, 6))
            assert parse_formula(to_text(phi, L), L) == phi


def test_multisorted_inference():
    phi = parse_formula("R(x, f(x)) & x = c", TWO)
    (x,) = free_vars(phi)
    assert x == Var("x", "M")


def test_sort_mismatch_rejected():
    with pytest.raises(SortError):
        parse_formula("R(x, x)", TWO)


def test_undeclared_symbol():
    with pytest.raises(UndeclaredSymbolError):
        parse_formula("Q(x)", GRAPH)


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse_formula("E(x,", GRAPH)
    assert info.value.position is not None


def test_conj_disj_degenerate_cases():
    a = Atom("E", (Var("x", "V"), Var("y", "V")))
    assert conj(a) == a and disj(a) == a
    assert conj() == And(()) and disj() == Or(())
    assert isinstance(conj(a, Not(a)), And)


def test_family_intersection():
    L1 = relational_language({"R": 3, "E1": 2})
    L2 = relational_language({"R": 3, "E2": 2})
    fam = make_language_family([L1, L2])
    assert fam.indices == (1, 2)
    assert fam.intersection.symbols == frozenset({"R"})
    assert fam.union.symbols == frozenset({"R", "E1", "E2"})


def test_family_rejects_sort_mismatch():
    with pytest.raises(LanguageError):
        make_language_family([GRAPH, TWO])

import json

import pytest

from fusionlab.classes import enumerate_models
from fusionlab.errors import FusionLabError
from fusionlab.report import Report, emit_report
from fusionlab.specfile import (
    SpecFileError, load_class, load_structure, parse_elements, parse_spec, structure_from_json,
    structure_to_json,
)
from fusionlab.structures import FiniteStructure, is_isomorphic

TRIANGLE_FREE = """
# graphs without triangles
language { sorts V; relations E: V V; }
class no-triangles {
  axiom "forall x: !E(x,x)";
  axiom "forall x y: E(x,y) -> E(y,x)";
  forbid "k3.json";
}
"""

K3 = {"sorts": {"V": ["a", "b", "c"]},
      "relations": {"E": [[x, y] for x in "abc" for y in "abc" if x != y]}}


def test_spec_with_forbidden_file(tmp_path):
    (tmp_path / "k3.json").write_text(json.dumps(K3))
    (tmp_path / "tf.spec").write_text(TRIANGLE_FREE)
    spec = load_class(str(tmp_path / "tf.spec"))
    assert spec.name == "no-triangles"
    assert [len(enumerate_models(spec, n)) for n in range(5)] == [1, 1, 2, 3, 7]


def test_slash_arity_and_functions():
    L, spec = parse_spec("language { relations R/3; functions f: V -> V; constants c: V; }")
    assert spec is None
    assert L.relations["R"] == ("V", "V", "V") and "f" in L.functions and "c" in L.constants


def test_spec_errors_carry_position():
    with pytest.raises(SpecFileError) as info:
        parse_spec("language { relations E: V V; } klass x { }")
    assert info.value.position is not None
    with pytest.raises(SpecFileError):
        parse_spec('class x { axiom "true"; }')


def test_builtin_reference():
    assert load_class("builtin:triangle-free").name == "triangle-free"
    with pytest.raises(FusionLabError):
        load_class("builtin:nope")


def test_structure_json_round_trip():
    L, _ = parse_spec("language { sorts V; relations E: V V; functions g: V V -> V; constants c: V; }")
    g = {(x, y): ("a" if x == y else "b") for x in "ab" for y in "ab"}
    M = FiniteStructure(L, {"V": ["a", "b"]}, {"E": {("a", "b")}}, {"g": g}, {"c": "a"})
    doc = structure_to_json(M)
    assert doc["functions"]["g"]["a,b"] == "b"
    N = structure_from_json(json.loads(json.dumps(doc)), L)
    assert is_isomorphic(M, N) and N.constants["c"] == "a"


def test_structure_language_inferred(tmp_path):
    path = tmp_path / "k3.json"
    path.write_text(json.dumps(K3))
    M = load_structure(path)
    assert M.language.relations["E"] == ("V", "V") and M.size == 3
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(FusionLabError):
        load_structure(tmp_path / "bad.json")


def test_parse_elements():
    assert parse_elements("") == [] and parse_elements("a, b,c") == ["a", "b", "c"]


def test_machine_report_is_deterministic_and_float_free():
    def make():
        r = Report(["demo"], seed=3)
        r.add("check", True, "size 2", "ok")
        r.data["set"] = {"b", "a"}
        r.elapsed_ms = 17
        return r

    a, b = emit_report(make(), "machine"), emit_report(make(), "machine")
    assert a == b and "17" not in a
    assert json.loads(a)["data"]["set"] == ["a", "b"]
    assert "time: 17 ms" in emit_report(make())
    r = make()
    r.data["x"] = 0.5
    with pytest.raises(TypeError):
        emit_report(r, "machine")


def test_exit_code_follows_verdicts():
    r = Report(["demo"])
    r.add("info only", True, info=True)
    assert r.exit_code == 0
    r.add("broken", False)
    assert r.exit_code == 1

import pytest

from fusionlab.classes import builtin_class, fusion_class
from fusionlab.errors import ClassViolation, FusionLabError
from fusionlab.fraisse import build_generic
from fusionlab.interpretations import CODECS, get_codec, henson_fusion, henson_reduct, roundtrip_check
from fusionlab.structures import FiniteStructure, find_isomorphism

import oracles

GRAPHS = builtin_class("graphs")

# pass counts per codec at its default size, from the round-trip run
PASSES = {"hypergraph-pi": 19, "hypergraph-dis": 17, "tournament": 9, "function": 31,
          "automorphism": 56, "variation": 109}


@pytest.mark.parametrize("name", sorted(PASSES))
def test_roundtrip(name):
    r = roundtrip_check(name)
    assert r.passed and r.counts()["pass"] == PASSES[name]
    for e in r.entries:
        if e.status == "pass":
            assert set(e.isomorphism.values()) == set(e.source.elements)


def test_every_graph_is_covered_by_pi_codec():
    r = roundtrip_check("hypergraph-pi", 4)
    assert len(r.entries) == sum(oracles.set_iso_count(n, {"E": 2}, lambda S: True) for n in range(5))


def test_pi_codec_on_path():
    P3 = FiniteStructure.relational(GRAPHS.language, range(3), {"E": {(0, 1), (1, 0), (1, 2), (2, 1)}})
    codec = get_codec("hypergraph-pi")
    T = codec.encode(P3)
    assert T.sizes == {"V": 3, "S": 3} and len(T.relations["P"]) == 2
    assert codec.target.violation(T) is None
    assert find_isomorphism(codec.decode(T), P3) is not None


def test_encode_rejects_non_member():
    loop = FiniteStructure.relational(GRAPHS.language, range(1), {"E": {(0, 0)}})
    with pytest.raises(ClassViolation):
        get_codec("hypergraph-pi").encode(loop)


def test_decode_rejects_non_target():
    codec = get_codec("hypergraph-pi")
    T = codec.encode(FiniteStructure.relational(GRAPHS.language, range(2), {}))
    broken = FiniteStructure(T.language, T.carriers, {r: set() for r in T.relations}, {}, {})
    with pytest.raises(ClassViolation):
        codec.decode(broken)


def test_unknown_codec():
    with pytest.raises(FusionLabError):
        get_codec("nope")
    assert set(PASSES) == set(CODECS)


def test_henson_reduct_of_built_fusion():
    M = build_generic(fusion_class(), budget=12, ext_size=1, seed=3).structure
    F = henson_fusion(M)
    assert F.violation() is None
    G = henson_reduct(F)
    assert G.relations["E"] == M.relations["E1"] & M.relations["E2"]
    assert oracles.triangle_count(G.universe, G.relations["E"]) == 0


def test_henson_reduct_rejects_bad_reduct():
    L = fusion_class().language
    tri = {(a, b) for a in range(3) for b in range(3) if a != b}
    M = FiniteStructure.relational(L, range(3), {"E1": tri, "E2": tri})
    with pytest.raises(ClassViolation):
        henson_reduct(M)

import random

from fusionlab.classes import fusion_class
from fusionlab.closures import check_closure_laws
from fusionlab.suites import (
    horn_operator, inject_clash, naive_least_closed, random_fusion_model, random_horn_rules,
    random_function_graph, random_type_pair, predicate_graph_config, suite_closure_laws, suite_henson,
    suite_rg_example,
)
from fusionlab.fraisse import find_clash

import oracles


def test_closure_laws_suite_passes():
    r = suite_closure_laws(count=60, seed=2)
    assert r.exit_code == 0 and len(r.verdicts) == 2


def test_rg_example_suite():
    r = suite_rg_example()
    assert r.exit_code == 0
    assert any("not extendable" in v.check for v in r.verdicts)


def test_henson_suite_reports_triangles_and_coverage():
    r = suite_henson(seeds=range(2), budget=10, ext_size=1, coverage_size=2)
    checks = [v.check for v in r.verdicts]
    assert checks == ["seed 0: triangle-free reduct", "seed 0: triangle-free extension axioms",
                      "seed 1: triangle-free reduct", "seed 1: triangle-free extension axioms"]
    assert all(v.status == "pass" for v in r.verdicts if "reduct" in v.check)


def test_horn_operators_obey_closure_laws():
    rng = random.Random(8)
    for _ in range(20):
        M = random_function_graph(rng, rng.randint(1, 4))
        op = horn_operator(random_horn_rules(rng, M.universe))
        assert check_closure_laws(op, [M]) is None
        seed = rng.sample(list(M.universe), 1)
        assert naive_least_closed(M, seed, [op]) == oracles.least_closed_superset(
            M.universe, seed, lambda s: op(M, s) == s)


def test_injected_clash_is_found():
    rng = random.Random(1)
    cfg = predicate_graph_config()
    M = random_fusion_model(rng, 3, cfg)
    types = random_type_pair(rng, M, cfg)
    assert find_clash(types, cfg.family) is None
    bad, lit = inject_clash(rng, types, cfg)
    clash = find_clash(bad, cfg.family)
    assert clash is not None


def test_random_fusion_model_in_class():
    M = random_fusion_model(random.Random(5), 4)
    assert fusion_class().violation(M) is None and M.size == 4

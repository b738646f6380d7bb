"""The eight primary acceptance criteria, each at its stated tolerance and time limit.

Run with ``pytest tests/test_acceptance.py -v``; one PASS/FAIL line per criterion is
printed in the terminal summary. ``python tests/test_acceptance.py`` prints the same
lines without pytest.
"""

import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from fusionlab.classes import ClassSpec, builtin_class, enumerate_models  # noqa: E402
from fusionlab.closures import bcl_closure, ccl_fixpoint, check_indep_axioms  # noqa: E402
from fusionlab.errors import TypeClashError  # noqa: E402
from fusionlab.fraisse import check_class_properties, check_fraisse_expansion, realize_joint_type  # noqa: E402
from fusionlab.interpretations import CODECS, get_codec, roundtrip_check  # noqa: E402
from fusionlab.normal_forms import eflat_disjunction, flatten_to_eflat, unique_witness_violation  # noqa: E402
from fusionlab.structures import FiniteStructure, generated_substructure  # noqa: E402
from fusionlab import suites  # noqa: E402

RESULTS: dict = {}


def record(n, ok, seconds, limit, detail):
    within = seconds < limit
    RESULTS[n] = (ok and within, f"criterion {n}: {detail} ({seconds:.1f} s, limit {limit} s)")
    return ok and within


# ---------------------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    langs = oracles.TWO_SYMBOL_LANGUAGES
    small = {name: [S for n in (1, 2, 3) for S in {oracles.canonical(S): S for S in oracles.all_structures(L, n)}.values()]
             for name, L in langs.items()}
    reps = {name: [M for n in range(1, 5) for M in enumerate_models(ClassSpec(L, ()), n, 10 ** 7)]
            for name, L in langs.items() if L.functions or L.constants}
    inequivalent = nonunique = 0
    for name, phi in oracles.formula_corpus(seed=0, count=200):
        ds = flatten_to_eflat(phi, langs[name])
        psi = eflat_disjunction(ds)
        for S in small[name]:
            for vals in itertools.product(range(S["n"]), repeat=2):
                env = dict(zip("xy", vals))
                if oracles.holds(phi, S, env) != oracles.holds(psi, S, env):
                    inequivalent += 1
        for d in ds:
            if d.witnesses:
                nonunique += sum(unique_witness_violation(d, M) is not None for M in reps[name])
    ok = inequivalent == 0 and nonunique == 0
    return record(1, ok, time.perf_counter() - start, 60,
                  f"200 formulas, {inequivalent} inequivalent, {nonunique} non-unique witnesses")


def criterion_2():
    start = time.perf_counter()
    failures = []
    for name in ("graphs", "hypergraphs3", "tournaments", "k1", "k2"):
        r = check_class_properties(builtin_class(name), 4)
        failures += [f"{name} {p}" for p, v in r.verdicts.items() if not v.holds]
    r = check_class_properties(builtin_class("bounded-equivalence"), 4, ("dAP",))
    v = r.verdicts["dAP"]
    partner = False
    if not v.holds:
        w = v.witness
        (b,) = w.base.elements
        partner = all(M.size == 2 and all(M.holds("E", b, e) for e in M.elements) for M in (w.left, w.right))
    if not partner:
        failures.append("bounded-equivalence dAP witness")
    return record(2, not failures, time.perf_counter() - start, 120,
                  "JEP/AP/dAP at size 4" + (f", failures: {failures}" if failures else
                                            ", bounded equivalence fails dAP with a partner-element witness"))


def criterion_3():
    start = time.perf_counter()
    base = builtin_class("hypergraphs3")
    verdicts = {n: check_fraisse_expansion(base, builtin_class(n), 4) for n in ("k1", "k2")}
    ok = all(v.verified for v in verdicts.values())
    return record(3, ok, time.perf_counter() - start, 120,
                  ", ".join(f"{n} {v.label}" for n, v in verdicts.items()))


def criterion_4():
    start = time.perf_counter()
    r = suites.suite_henson(seeds=range(5), budget=40)
    tri = [v for v in r.verdicts if "triangle-free reduct" in v.check]
    cov = [v for v in r.verdicts if "extension axioms" in v.check]
    ok = all(v.status == "pass" for v in r.verdicts)
    detail = ("triangles: " + ("none" if all(v.status == "pass" for v in tri) else "FOUND")
              + "; coverage at 3: " + ", ".join(v.detail.split()[0] for v in cov))
    return record(4, ok, time.perf_counter() - start, 180, detail)


def criterion_5():
    start = time.perf_counter()
    graphs, clique = builtin_class("graphs"), builtin_class("clique-graphs")
    stat = [check_indep_axioms("free-amalgam", builtin_class(c), "stationarity", size_limit=4)
            for c in ("graphs", "hypergraphs3")]
    edge = check_indep_axioms("edge", graphs, "full-existence", clique, 4)
    non = check_indep_axioms("non-edge", graphs, "full-existence", clique, 4)
    witnessed = False
    if not non.holds:
        w = non.witness
        M, (a,) = w["host"], tuple(w["A"])
        forced = {(r, t) for r, t, val in w["forced"] if val}
        witnessed = M.holds("P", a) and any(M.holds("P", b) and ("E", ("a*", b)) in forced for b in w["B"] - w["C"])
    ok = all(s.holds for s in stat) and edge.holds and witnessed
    return record(5, ok, time.perf_counter() - start, 120,
                  f"stationarity {[s.label for s in stat]}, edge {edge.label}, non-edge "
                  + ("fails with P(a*), P(b), a*Eb" if witnessed else "did not give the expected witness"))


def criterion_6():
    start = time.perf_counter()
    reports = {name: roundtrip_check(name) for name in CODECS}
    explicit = all(e.isomorphism is not None for r in reports.values() for e in r.entries if e.status == "pass")
    P3 = FiniteStructure.relational(builtin_class("graphs").language, range(3),
                                    {"E": {(0, 1), (1, 0), (1, 2), (2, 1)}})
    T = get_codec("hypergraph-pi").encode(P3)
    derived = T.sizes["S"] == 3 and len(T.relations["P"]) == 2
    ok = len(reports) == 6 and all(r.passed for r in reports.values()) and explicit and derived
    return record(6, ok, time.perf_counter() - start, 120,
                  ", ".join(f"{n} {r.counts()['pass']}" for n, r in reports.items())
                  + f"; P3: |S|={T.sizes['S']}, |P|={len(T.relations['P'])}")


def criterion_7():
    start = time.perf_counter()
    rng = random.Random(7)
    ccl_bad = bcl_bad = 0
    for _ in range(200):
        host, seed, ops = suites.random_operator_pair(rng)
        expect = oracles.least_closed_superset(host.universe, seed,
                                               lambda s: all(frozenset(op(host, s)) == s for op in ops))
        if any(ccl_fixpoint(host, seed, ops, st) != expect for st in ("round-robin", "worklist")):
            ccl_bad += 1
    for _ in range(200):
        host, seed, lib = suites.random_bcl_triple(rng)
        c = bcl_closure(host, seed, lib)
        gen = set(generated_substructure(host, seed)[0].elements)
        if not (gen <= c and set(seed) <= c and bcl_closure(host, c, lib) == c):
            bcl_bad += 1
    return record(7, ccl_bad == 0 and bcl_bad == 0, time.perf_counter() - start, 60,
                  f"ccl mismatches {ccl_bad}/200, bcl failures {bcl_bad}/200")


def criterion_8():
    start = time.perf_counter()
    rng = random.Random(8)
    configs = [suites.henson_config(), suites.predicate_graph_config()]
    wrong_realize = wrong_clash = done = 0
    while done < 100:
        cfg = configs[done % 2]
        M = suites.random_fusion_model(rng, rng.randint(1, 5), cfg)
        types = suites.random_type_pair(rng, M, cfg)
        if types is None:
            continue
        done += 1
        try:
            out = realize_joint_type(M, types, cfg)
            point = types[1].point
            for i, t in types.items():
                red = out.reduct(cfg.family[i])
                if cfg.classes[i].violation(red) is not None:
                    wrong_realize += 1
                for lit in t.literals:
                    if red.holds(lit.symbol, *lit.args) != lit.positive:
                        wrong_realize += 1
            if out.induced([e for e in out.universe if e != point]).relations != M.relations:
                wrong_realize += 1
        except Exception:
            wrong_realize += 1
        clashed, lit = suites.inject_clash(rng, types, cfg)
        try:
            realize_joint_type(M, clashed, cfg)
            wrong_clash += 1
        except TypeClashError as exc:
            if (exc.literal.symbol, exc.literal.args) != (lit.symbol, lit.args):
                wrong_clash += 1
    return record(8, wrong_realize == 0 and wrong_clash == 0, time.perf_counter() - start, 60,
                  f"{wrong_realize} bad realizations, {wrong_clash} misclassified clashes over 100 pairs")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("n", range(1, 9))
def test_primary_criterion(n):
    assert CRITERIA[n - 1](), RESULTS[n][1]


if __name__ == "__main__":
    for n, fn in enumerate(CRITERIA, 1):
        fn()
        ok, line = RESULTS[n]
        print(("PASS " if ok else "FAIL ") + line, flush=True)

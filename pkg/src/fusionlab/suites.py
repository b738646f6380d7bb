"""Random instance generators and the packaged reproduction suites."""

from __future__ import annotations

import itertools
import random
import time
from functools import lru_cache

from .classes import ClassSpec, clique_graphs, fusion_class, graphs, hyper_edge_class, triangle_free
from .closures import ClosureOperator, bcl_closure, ccl_fixpoint, check_indep_axioms
from .fraisse import (
    FamilyConfig, QfType, build_generic, check_extension_axioms, make_qftype, type_atoms,
)
from .errors import ClassViolation
from .interpretations import CODECS, HENSON_FAMILY, henson_reduct, roundtrip_check
from .logic import Language, free_vars, make_language_family, parse_formula
from .normal_forms import bounded_from_check
from .report import Report
from .structures import FiniteStructure, generated_substructure

# ---------------------------------------------------------------------------
# closure operators from random Horn rules


def horn_operator(rules, name="horn") -> ClosureOperator:
    """Least superset closed under rules (premise set -> element); always a closure operator."""
    rules = tuple((frozenset(p), c) for p, c in rules)

    def fn(M, s):
        out = set(s)
        changed = True
        while changed:
            changed = False
            for prem, c in rules:
                if c not in out and prem <= out:
                    out.add(c)
                    changed = True
        return out

    return ClosureOperator(name, fn, f"{len(rules)} Horn rules")


def random_horn_rules(rng: random.Random, elements, count=None):
    elements = list(elements)
    count = rng.randint(0, 2 * len(elements)) if count is None else count
    rules = []
    for _ in range(count):
        prem = rng.sample(elements, rng.randint(0, min(2, len(elements))))
        rules.append((prem, rng.choice(elements)))
    return rules


FUNC_GRAPH = Language(("V",), {"R": 2}, {"f": 1})


def function_graphs() -> ClassSpec:
    return ClassSpec(FUNC_GRAPH, ("forall x: !R(x,x)", "forall x y: R(x,y) -> R(y,x)"), name="function-graphs")


def random_function_graph(rng: random.Random, n: int) -> FiniteStructure:
    V = list(range(n))
    f = {(v,): rng.choice(V) for v in V}
    R = set()
    for a, b in itertools.combinations(V, 2):
        if rng.random() < 0.35:
            R |= {(a, b), (b, a)}
    return FiniteStructure(FUNC_GRAPH, {"V": V}, {"R": R}, {"f": f}, {})


def random_operator_pair(rng: random.Random, max_size: int = 6):
    """(host, seed, [op1, op2]) with operators drawn from function closure and Horn rules."""
    n = rng.randint(1, max_size)
    host = random_function_graph(rng, n)
    ops = []
    for i in range(2):
        if rng.random() < 0.3:
            ops.append(ClosureOperator(f"generated{i}", lambda M, s: generated_substructure(M, s)[0].elements))
        else:
            ops.append(horn_operator(random_horn_rules(rng, host.universe), f"horn{i}"))
    seed = rng.sample(list(host.universe), rng.randint(0, n))
    return host, seed, ops


# formulas bounded in every structure of the language, certified on small members
_BCL_POOL = (
    ("f(x)=y", ("x",), ("y",), 1),
    ("f(f(x))=y", ("x",), ("y",), 1),
    ("f(x)=y & R(x,y)", ("x",), ("y",), 1),
    ("y=x | f(x)=y", ("x",), ("y",), 2),
    ("f(x1)=y & R(x2,y)", ("x1", "x2"), ("y",), 1),
    ("f(y)=x & f(x)=y", ("x",), ("y",), 1),
    ("f(x)=y1 & f(y1)=y2", ("x",), ("y1", "y2"), 1),
)


@lru_cache(maxsize=None)
def bcl_pool(size_limit: int = 3) -> tuple:
    spec = function_graphs()
    out = []
    for text, xs, ys, k in _BCL_POOL:
        phi = parse_formula(text, FUNC_GRAPH)
        var = {v.name: v for v in free_vars(phi)}
        out.append(bounded_from_check(phi, tuple(var[x] for x in xs), tuple(var[y] for y in ys), spec, k,
                                      size_limit))
    return tuple(out)


def random_bcl_triple(rng: random.Random, max_size: int = 6):
    pool = bcl_pool()
    n = rng.randint(1, max_size)
    host = random_function_graph(rng, n)
    seed = rng.sample(list(host.universe), rng.randint(0, min(2, n)))
    library = rng.sample(pool, rng.randint(0, len(pool)))
    return host, seed, library


# ---------------------------------------------------------------------------
# joint types


def henson_config() -> FamilyConfig:
    return FamilyConfig(HENSON_FAMILY, {1: hyper_edge_class(1), 2: hyper_edge_class(2)}, True, "henson")


PRED_GRAPH = {i: Language(("V",), {f"E{i}": 2, "P": 1}) for i in (1, 2)}


def predicate_graph_config() -> FamilyConfig:
    """Two graphs sharing a unary predicate; both members have free amalgamation."""
    classes = {i: ClassSpec(PRED_GRAPH[i], (f"forall x: !E{i}(x,x)", f"forall x y: E{i}(x,y) -> E{i}(y,x)"),
                            name=f"pgraph{i}") for i in (1, 2)}
    family = make_language_family([PRED_GRAPH[1], PRED_GRAPH[2]])
    return FamilyConfig(family, classes, True, "predicate-graphs")


def random_fusion_model(rng: random.Random, n: int, config: FamilyConfig | None = None) -> FiniteStructure:
    """Random member of the union class: a built model restricted to n points."""
    spec = fusion_class() if config is None else config.union_class()
    g = build_generic(spec, budget=max(n, 1), ext_size=1, seed=rng.randrange(10 ** 6),
                      completion="random", precheck=False)
    M = g.structure
    return M.induced(M.universe[:n]) if len(M.universe) > n else M


def random_type_pair(rng: random.Random, model: FiniteStructure, config: FamilyConfig, point="c",
                     tries: int = 200):
    """Compatible member types over a random base: shared atoms agree, each type is class-consistent."""
    base = tuple(rng.sample(list(model.universe), rng.randint(0, min(3, len(model.universe)))))
    shared = config.family.intersection

    def orbit(atom):  # symmetric, irreflexive reading of every relation
        r, t = atom
        return (r, frozenset(t)) if len(set(t)) == len(t) else None

    for _ in range(tries):
        coins = {}

        def flip(atom, p):
            key = orbit(atom)
            if key is None:
                return False
            if key not in coins:
                coins[key] = rng.random() < p
            return coins[key]

        shared_truth = {a: flip(a, 0.3) for a in type_atoms(shared, base, point)}
        types = {}
        try:
            for i in config.family.indices:
                truth = dict(shared_truth)
                for a in type_atoms(config.family[i], base, point):
                    if a not in truth:
                        truth[a] = flip(a, 0.4)
                types[i] = make_qftype(model, base, point, i, truth, config)
        except ClassViolation:
            continue
        return types
    return None


def inject_clash(rng: random.Random, types: dict, config: FamilyConfig):
    """Flip one shared literal in one member type; returns (new types, flipped literal as it now stands)."""
    shared = config.family.intersection.symbols
    idx = rng.choice(sorted(types))
    t = types[idx]
    candidates = sorted(t.restricted(shared), key=lambda l: (l.symbol, tuple(map(repr, l.args))))
    if not candidates:
        return None
    lit = rng.choice(candidates)
    new = QfType(t.base, t.point, t.index, (t.literals - {lit}) | {lit.negate()})
    out = dict(types)
    out[idx] = new
    return out, lit.negate()


# ---------------------------------------------------------------------------
# suites


def _timed(report, start):
    report.elapsed_ms = int((time.perf_counter() - start) * 1000)
    return report


def suite_henson(seeds=range(5), budget: int = 40, ext_size: int = 2, coverage_size: int = 3) -> Report:
    start = time.perf_counter()
    report = Report(["suite", "henson"], seed=None)
    tf = triangle_free()
    for seed in seeds:
        g = build_generic(fusion_class(), budget=budget, ext_size=ext_size, seed=seed)
        G = henson_reduct(g.structure)
        E = G.relations["E"]
        triangles = sum(1 for a, b in E for c in G.universe if (b, c) in E and (c, a) in E) // 6
        report.add(f"seed {seed}: triangle-free reduct", triangles == 0, f"budget {budget}",
                   f"{len(G.universe)} points, {len(E) // 2} edges, {triangles} triangles")
        cov = check_extension_axioms(G, tf, coverage_size)
        realized = cov.checked - len(cov.missing)
        report.add(f"seed {seed}: triangle-free extension axioms", cov.satisfied, f"subsets up to size {coverage_size}",
                   f"{realized}/{cov.checked} realized")
        if cov.missing and seed == min(seeds):
            subset, code, text = cov.missing[0]
            report.witness(f"seed {seed}: unrealized extension", G, subset=list(subset), type=text)
    return _timed(report, start)


def suite_rg_example(size_limit: int = 4) -> Report:
    start = time.perf_counter()
    report = Report(["suite", "rg-example"])
    G, K = graphs(), clique_graphs()
    for rel in ("edge", "non-edge"):
        for axiom in ("invariance", "stationarity"):
            r = check_indep_axioms(rel, G, axiom, size_limit=size_limit)
            report.add(f"{rel} {axiom}", r.holds, r.label)
    r = check_indep_axioms("edge", G, "full-existence", K, size_limit)
    report.add("edge full-existence into clique-graphs", r.holds, r.label)
    r = check_indep_axioms("non-edge", G, "full-existence", K, size_limit)
    ok = False
    if not r.holds:
        w = r.witness
        M = w["host"]
        a = w["A"][0]
        bs = sorted(w["B"] - w["C"])
        forced = {(rel, t) for rel, t, val in w["forced"] if val}
        ok = any((a,) in M.relations["P"] and (b,) in M.relations["P"] and ("E", ("a*", b)) in forced
                 for b in bs)
        report.witness("non-edge full-existence failure", M, A=list(w["A"]), B=sorted(w["B"]),
                       C=sorted(w["C"]), forced=[f"{rel}({','.join(map(str, t))})" if v else
                                                 f"!{rel}({','.join(map(str, t))})" for rel, t, v in w["forced"]])
    report.add("non-edge is not extendable (P(a*), P(b) force a*Eb)", ok, r.label)
    return _timed(report, start)


def suite_roundtrips(size_limit: int | None = None) -> Report:
    start = time.perf_counter()
    report = Report(["suite", "roundtrips"])
    for name in CODECS:
        r = roundtrip_check(name, size_limit)
        c = r.counts()
        report.add(f"{name} round trip", r.passed, f"size <= {r.size_limit}",
                   f"{c['pass']} passed, {c['fail']} failed, {c['skipped']} skipped")
        bad = next((e for e in r.entries if e.status == "fail"), None)
        if bad is not None:
            report.witness(f"{name} failure: {bad.detail}", bad.source)
    return _timed(report, start)


def naive_least_closed(host, seed, ops) -> frozenset:
    """Intersection of all supersets of seed fixed by every operator."""
    universe = list(host.universe)
    best = frozenset(universe)
    rest = [e for e in universe if e not in seed]
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            s = frozenset(seed) | frozenset(extra)
            if all(op(host, s) == s for op in ops):
                best &= s
    return best


def suite_closure_laws(count: int = 200, seed: int = 0) -> Report:
    start = time.perf_counter()
    report = Report(["suite", "closure-laws"], seed=seed)
    rng = random.Random(seed)
    bad = 0
    for _ in range(count):
        host, s, ops = random_operator_pair(rng)
        a = ccl_fixpoint(host, s, ops, "round-robin")
        b = ccl_fixpoint(host, s, ops, "worklist")
        if a != b or a != naive_least_closed(host, s, ops):
            bad += 1
    report.add("ccl fixpoint equals the least closed superset", bad == 0, f"{count} random operator pairs",
               f"{bad} mismatches")
    bad = 0
    for _ in range(count):
        host, s, lib = random_bcl_triple(rng)
        c = bcl_closure(host, s, lib)
        gen = set(generated_substructure(host, s)[0].elements)
        if not gen <= c or bcl_closure(host, c, lib) != c:
            bad += 1
    report.add("bcl is idempotent and contains the generated substructure", bad == 0,
               f"{count} random triples", f"{bad} failures")
    return _timed(report, start)


SUITES = {
    "henson": suite_henson,
    "rg-example": suite_rg_example,
    "roundtrips": suite_roundtrips,
    "closure-laws": suite_closure_laws,
}

"""Closure operators and ternary independence relations with finite axiom checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .classes import ClassSpec, enumerate_models
from .errors import ClosureDefect, FusionLabError, PreconditionError, StructureError
from .fraisse import check_fraisse_expansion, require_relational
from .normal_forms import BoundedFormula
from .search import Grounding
from .structures import FiniteStructure, automorphisms, compiled, element_name, generated_substructure

# ---------------------------------------------------------------------------
# Closure operators


@dataclass(frozen=True)
class ClosureOperator:
    name: str
    fn: Callable  # (structure, frozenset) -> set
    note: str = ""

    def __call__(self, structure, elements) -> frozenset:
        return frozenset(self.fn(structure, frozenset(elements)))


def _subsets(elements):
    elements = list(elements)
    for k in range(len(elements) + 1):
        for c in itertools.combinations(elements, k):
            yield frozenset(c)


def check_closure_laws(op: ClosureOperator, samples: Iterable[FiniteStructure]):
    """First law violation as (law, structure, set[, set]) over all subsets of the samples, or None."""
    for M in samples:
        subs = list(_subsets(M.elements))
        image = {s: op(M, s) for s in subs}
        for s in subs:
            if not s <= image[s]:
                return ("extensive", M, s)
            if op(M, image[s]) != image[s]:
                return ("idempotent", M, s)
        for s in subs:
            for t in subs:
                if s <= t and not image[s] <= image[t]:
                    return ("monotone", M, s, t)
    return None


OPERATORS: dict = {}


def register_operator(op: ClosureOperator, samples: Iterable[FiniteStructure] = ()) -> ClosureOperator:
    """Check the closure laws on ``samples`` and add ``op`` to the registry."""
    bad = check_closure_laws(op, samples)
    if bad is not None:
        raise ClosureDefect(f"operator {op.name} is not {bad[0]} on {bad[1]!r}")
    OPERATORS[op.name] = op
    return op


def identity_operator() -> ClosureOperator:
    return ClosureOperator("identity", lambda M, s: s, "trivial closure")


def generated_operator() -> ClosureOperator:
    return ClosureOperator("generated", lambda M, s: set(generated_substructure(M, s)[0].elements),
                           "substructure generated under functions and constants")


def partner_operator(rel: str) -> ClosureOperator:
    """Adds every element related by ``rel`` (either direction) to a member of the set."""

    def fn(M, s):
        out = set(s)
        changed = True
        while changed:
            changed = False
            for t in M.relations[rel]:
                if any(x in out for x in t) and not all(x in out for x in t):
                    out.update(t)
                    changed = True
        return out

    return ClosureOperator(f"partners[{rel}]", fn, f"closure under {rel}-adjacency")


def ccl_fixpoint(structure: FiniteStructure, seed: Iterable, operators: list,
                 strategy: str = "round-robin") -> frozenset:
    """Least superset of ``seed`` closed under every operator."""
    current = frozenset(seed)
    for e in current:
        structure.sort_of(e)

    def step(op, s):
        out = op(structure, s)
        if not s <= out:
            raise ClosureDefect(f"operator {op.name} dropped {sorted(map(element_name, s - out))}")
        return out

    if strategy == "round-robin":
        changed = True
        while changed:
            changed = False
            for op in operators:
                nxt = step(op, current)
                if nxt != current:
                    current, changed = nxt, True
        return current
    if strategy == "worklist":
        work = list(range(len(operators)))
        while work:
            i = work.pop(0)
            nxt = step(operators[i], current)
            if nxt != current:
                current = nxt
                work.extend(j for j in range(len(operators)) if j != i and j not in work)
                if i not in work:
                    work.append(i)
        return current
    raise ValueError(f"unknown strategy {strategy!r}")


def bcl_closure(host: FiniteStructure, seed: Iterable, library: list) -> frozenset:
    """Close under generation and under witnesses of verified bounded formulas."""
    for bf in library:
        if not isinstance(bf, BoundedFormula) or not bf.verified:
            raise PreconditionError("bcl library entries must carry a verification record")
    current = frozenset(generated_substructure(host, seed)[0].elements)
    while True:
        grown = set(current)
        for bf in library:
            fn = compiled(bf.formula)
            pools_x = [[e for e in host.carriers[v.sort] if e in current] for v in bf.x]
            for xvals in itertools.product(*pools_x):
                env = dict(zip(bf.x, xvals))
                for yvals in itertools.product(*(host.carriers[v.sort] for v in bf.y)):
                    env.update(zip(bf.y, yvals))
                    if fn(host, env):
                        grown.update(yvals)
        grown = frozenset(generated_substructure(host, grown)[0].elements)
        if grown == current:
            return current
        current = grown


# ---------------------------------------------------------------------------
# Algebraicity by duplication


@dataclass
class DuplicationVerdict:
    non_algebraic: bool
    budget: int
    witness: FiniteStructure | None = None
    duplicate: object = None

    @property
    def label(self) -> str:
        return "non-algebraic-witnessed" if self.non_algebraic else f"no-duplicate-up-to-budget {self.budget}"


def acl_test_duplication(spec: ClassSpec, host: FiniteStructure, base: Iterable, point,
                         budget: int = 1) -> DuplicationVerdict:
    """Search a class extension of ``host`` holding a second copy of ``point`` over ``base``.

    Heredity of the class makes one new point enough: any larger witness
    restricts to host plus the copy.
    """
    require_relational(spec)
    if budget < 1:
        raise PreconditionError("budget must be at least 1")
    base = frozenset(base)
    if point in base:
        raise PreconditionError("the point must lie outside the base")
    v = spec.violation(host)
    if v is not None:
        raise PreconditionError("host is not a class member")
    copy = ("dup", point)
    while copy in host:
        copy = ("dup", copy)
    carriers = {host.language.sorts[0]: tuple(host.universe) + (copy,)}
    inside = base | {point}

    def known(r, t):
        if copy not in t:
            return t in host.relations[r]
        if all(x in base or x == copy for x in t):
            return tuple(point if x == copy else x for x in t) in host.relations[r]
        return None

    g = Grounding(spec.language, carriers, spec.compiled, known, {copy})
    sol = g.solve()
    if sol is None:
        return DuplicationVerdict(False, budget)
    rels = {r: set(ts) for r, ts in host.relations.items()}
    for r, profile in spec.language.relations.items():
        for t in itertools.product(carriers[host.language.sorts[0]], repeat=len(profile)):
            if copy in t and (known(r, t) or sol.get((r, t))):
                rels[r].add(t)
    W = FiniteStructure(host.language, carriers, rels, {}, {})
    return DuplicationVerdict(True, budget, W, copy)


# ---------------------------------------------------------------------------
# Independence relations


@dataclass(frozen=True)
class TripleConfig:
    host: FiniteStructure
    A: frozenset
    B: frozenset
    C: frozenset

    @classmethod
    def of(cls, host, A, B, C):
        A, B, C = frozenset(A), frozenset(B), frozenset(C)
        for e in A | B | C:
            host.sort_of(e)
        return cls(host, A, B, C)


def _free_amalgam_indep(cfg: TripleConfig) -> bool:
    ac, bc = cfg.A | cfg.C, cfg.B | cfg.C
    if ac & bc != cfg.C:
        return False
    left, right = ac - cfg.C, bc - cfg.C
    whole = ac | bc
    for ts in cfg.host.relations.values():
        for t in ts:
            if all(x in whole for x in t) and any(x in left for x in t) and any(x in right for x in t):
                return False
    return True


def _cross(edge: bool, rel: str = "E"):
    def fn(cfg: TripleConfig) -> bool:
        if not cfg.A & cfg.B <= cfg.C:
            return False
        E = cfg.host.relations[rel]
        for a in cfg.A - cfg.C:
            for b in cfg.B - cfg.C:
                if ((a, b) in E) != edge:
                    return False
        return True

    return fn


@dataclass(frozen=True)
class IndependenceRelation:
    name: str
    fn: Callable
    host_class: str
    forced_value: Callable | None = None  # (a*, b) cross atoms the relation fixes

    def __call__(self, cfg: TripleConfig) -> bool:
        return self.fn(cfg)


RELATIONS = {
    "free-amalgam": IndependenceRelation("free-amalgam", _free_amalgam_indep, "any relational class"),
    "edge": IndependenceRelation("edge", _cross(True), "graphs"),
    "non-edge": IndependenceRelation("non-edge", _cross(False), "graphs"),
}


def get_relation(name) -> IndependenceRelation:
    if isinstance(name, IndependenceRelation):
        return name
    try:
        return RELATIONS[name]
    except KeyError:
        raise FusionLabError(f"unknown independence relation {name!r}; known: {', '.join(RELATIONS)}") from None


def indep_eval(relation, config: TripleConfig) -> bool:
    return get_relation(relation)(config)


# ---------------------------------------------------------------------------
# Axiom checks

AXIOMS = ("invariance", "algebraic-independence", "stationarity", "full-existence")
QE_NOTE = "stated for quantifier-free types; exact for classes with quantifier elimination"


@dataclass
class IndepReport:
    relation: str
    axiom: str
    class_name: str
    holds: bool
    size_limit: int
    checked: int
    witness: dict | None = None
    closed_sets: str = "acl trivial: every point passed the duplication test"
    note: str = QE_NOTE

    @property
    def label(self) -> str:
        return f"holds-up-to-size {self.size_limit}" if self.holds else "fails-with-witness"


def _hosts(spec, size_limit, budget=None):
    for k in range(size_limit + 1):
        yield from enumerate_models(spec, k, budget)


def _partial_iso(M: FiniteStructure, mapping: Mapping) -> bool:
    """Is ``mapping`` (dict) an isomorphism between induced substructures of M?"""
    if len(set(mapping.values())) != len(mapping):
        return False
    dom = list(mapping)
    for r, profile in M.language.relations.items():
        rel = M.relations[r]
        for t in itertools.product(dom, repeat=len(profile)):
            if (t in rel) != (tuple(mapping[x] for x in t) in rel):
                return False
    return True


def _acl_report(spec, size_limit, budget=None):
    """Check that duplication certifies trivial acl on all small members."""
    for M in _hosts(spec, max(size_limit - 1, 0), budget):
        for base in _subsets(M.elements):
            for p in M.elements:
                if p in base:
                    continue
                if not acl_test_duplication(spec, M, base, p).non_algebraic:
                    return False, (M, base, p)
    return True, None


def check_indep_axioms(relation, spec: ClassSpec, axiom: str, expansion: ClassSpec | None = None,
                       size_limit: int = 4, budget: int | None = None) -> IndepReport:
    """Finite restatement of one independence axiom, exhaustive over members up to size_limit."""
    rel = get_relation(relation)
    require_relational(spec)
    if axiom not in AXIOMS:
        raise FusionLabError(f"unknown axiom {axiom!r}; known: {', '.join(AXIOMS)}")
    report = IndepReport(rel.name, axiom, spec.name, True, size_limit, 0)
    if axiom == "full-existence":
        if expansion is None:
            raise PreconditionError("full-existence needs an expansion class")
        verdict = check_fraisse_expansion(spec, expansion, size_limit, budget)
        if not verdict.verified:
            raise PreconditionError(f"{expansion.name} is not a verified Fraisse expansion of {spec.name} "
                                    f"up to size {size_limit}")
        return _full_existence(rel, spec, expansion, size_limit, report, budget)
    trivial, bad = _acl_report(spec, size_limit, budget)
    if not trivial:
        report.closed_sets = "acl nontrivial: closed sets are those containing every undupl. point"
    if axiom == "invariance":
        return _invariance(rel, spec, size_limit, report, budget)
    if axiom == "algebraic-independence":
        return _alg_independence(rel, spec, size_limit, report, trivial, budget)
    return _stationarity(rel, spec, size_limit, report, budget)


def _closed(spec, M, C):
    for p in M.elements:
        if p not in C and not acl_test_duplication(spec, M, C, p).non_algebraic:
            return False
    return True


def _invariance(rel, spec, size_limit, report, budget):
    for M in _hosts(spec, size_limit, budget):
        auts = automorphisms(M).maps
        subs = list(_subsets(M.elements))
        for A, B, C in itertools.product(subs, repeat=3):
            val = rel(TripleConfig(M, A, B, C))
            for g in auts:
                report.checked += 1
                img = [frozenset(g[x] for x in S) for S in (A, B, C)]
                if rel(TripleConfig(M, *img)) != val:
                    report.holds = False
                    report.witness = {"host": M, "A": A, "B": B, "C": C, "automorphism": g}
                    return report
    return report


def _alg_independence(rel, spec, size_limit, report, trivial, budget):
    for M in _hosts(spec, size_limit, budget):
        subs = list(_subsets(M.elements))
        for C in subs:
            if not trivial and not _closed(spec, M, C):
                continue
            for A, B in itertools.product(subs, repeat=2):
                report.checked += 1
                if rel(TripleConfig(M, A, B, C)) and (A | C) & (B | C) != C:
                    report.holds = False
                    report.witness = {"host": M, "A": A, "B": B, "C": C}
                    return report
    return report


def _stationarity(rel, spec, size_limit, report, budget):
    for M in _hosts(spec, size_limit, budget):
        elems = M.elements
        for C in _subsets(elems):
            rest = [e for e in elems if e not in C]
            subs_b = list(_subsets(elems))
            for k in range(1, len(rest) + 1):
                for A in itertools.combinations(rest, k):
                    for A2 in itertools.permutations(rest, k):
                        over_c = dict(zip(A, A2))
                        over_c.update({c: c for c in C})
                        if not _partial_iso(M, over_c):
                            continue
                        for B in subs_b:
                            report.checked += 1
                            if not rel(TripleConfig(M, frozenset(A), B, C)):
                                continue
                            if not rel(TripleConfig(M, frozenset(A2), B, C)):
                                continue
                            full = dict(over_c)
                            ok = True
                            for b in B:
                                if full.setdefault(b, b) != b:
                                    ok = False
                                    break
                            if ok and any(full[x] == b and x != b for x in A for b in B):
                                ok = False
                            if ok and not _partial_iso(M, full):
                                ok = False
                            if not ok:
                                report.holds = False
                                report.witness = {"host": M, "A": A, "A*": A2, "B": B, "C": C}
                                return report
    return report


def _full_existence(rel, spec, expansion, size_limit, report, budget):
    """For every expansion member M and A, B, C in M, find A* with A's expansion type over C
    and A* independent from B over C, in M or in a one-step expansion-class extension of M."""
    report.closed_sets = "acl trivial in the expansion; every C treated as closed"
    sort = expansion.language.sorts[0]
    cache = {}  # satisfiability of fresh-point constraint sets
    for M in _hosts(expansion, size_limit, budget):
        elems = M.elements
        for C in _subsets(elems):
            rest = [e for e in elems if e not in C]
            for k in range(1, len(rest) + 1):
                for A in itertools.combinations(rest, k):
                    for B in _subsets(elems):
                        report.checked += 1
                        found, forced = _find_independent_copy(rel, spec, expansion, M, A, B, C, sort, cache)
                        if not found:
                            report.holds = False
                            report.witness = {"host": M, "A": A, "B": B, "C": C, "forced": forced}
                            return report
    return report


def _star_names(k):
    return ["a*"] if k == 1 else [f"a*{i + 1}" for i in range(k)]


def _find_independent_copy(rel, spec, expansion, M, A, B, C, sort, cache):
    k = len(A)
    stars = _star_names(k)
    outside = [e for e in M.elements if e not in C]
    options = outside + stars
    first_forced = []

    def candidates():
        # fresh copies first: they succeed whenever anything does in a class with amalgamation
        yield tuple(stars), list(stars)
        for choice in itertools.product(options, repeat=k):
            fresh = [x for x in choice if x in stars]
            if len(fresh) < k and len(set(choice)) == k and fresh == stars[:len(fresh)]:
                yield choice, fresh

    for choice, fresh in candidates():
        mapping = dict(zip(A, choice))
        mapping.update({c: c for c in C})
        carriers = {sort: tuple(M.elements) + tuple(fresh)}
        ok, forced = _realize_copy(rel, expansion, M, mapping, B, C, carriers, set(fresh), spec, cache)
        if ok:
            return True, []
        if forced and not first_forced:
            first_forced = forced
    return False, first_forced


def _realize_copy(rel, expansion, M, mapping, B, C, carriers, fresh, spec, cache):
    """Is there an expansion-class structure on ``carriers`` extending M where the image of A
    has A's type over C and is independent from B over C?  Returns (ok, forced literals)."""
    typed = {}
    for r, profile in expansion.language.relations.items():
        for t in itertools.product(list(mapping), repeat=len(profile)):
            img = (r, tuple(mapping[x] for x in t))
            want = t in M.relations[r]
            if typed.setdefault(img, want) != want:
                return False, []
    type_only = dict(typed)
    Astar = frozenset(v for k, v in mapping.items() if k not in C)
    cross = _independence_atoms(rel, spec, Astar, frozenset(B), frozenset(C), carriers)
    if cross is None:
        return False, []
    for key, val in cross.items():
        if typed.setdefault(key, val) != val:
            return False, []
    for (r, t), val in typed.items():
        if not fresh.intersection(t) and (t in M.relations[r]) != val:
            return False, []
    if not fresh:
        return True, []

    def known(r, t):
        if not fresh.intersection(t):
            return t in M.relations[r]
        return typed.get((r, t))

    key = (M, frozenset(fresh),
           frozenset(item for item in typed.items() if fresh.intersection(item[0][1])))
    if key not in cache:
        g = Grounding(expansion.language, carriers, expansion.compiled, known, fresh)
        cache[key] = not g.sat.unsat and g.solve() is not None
    if cache[key]:
        return True, []

    # a cross atom is forced when the type alone rules out the value independence asks for
    def known_type(r, t):
        if not fresh.intersection(t):
            return t in M.relations[r]
        return type_only.get((r, t))

    forced = []
    for (r, t), val in cross.items():
        if not fresh.intersection(t) or (r, t) in type_only:
            continue
        g2 = Grounding(expansion.language, carriers, expansion.compiled, known_type, fresh)
        if g2.sat.unsat:
            continue
        g2.add_unit((r, t), val)
        if g2.solve() is None:
            forced.append((r, t, not val))
    return False, forced


def _independence_atoms(rel, spec, A, B, C, carriers):
    """Atoms an independence relation fixes between A and B over C (None if impossible)."""
    if not A & B <= C:
        return None
    out = {}
    sort = next(iter(carriers))
    if rel.name in ("edge", "non-edge"):
        val = rel.name == "edge"
        for a in A - C:
            for b in B - C:
                out[("E", (a, b))] = val
                out[("E", (b, a))] = val
        return out
    if rel.name == "free-amalgam":
        left, right = (A | C) - C, (B | C) - C
        whole = A | B | C
        for r, profile in spec.language.relations.items():
            for t in itertools.product(sorted(whole, key=repr), repeat=len(profile)):
                if any(x in left for x in t) and any(x in right for x in t):
                    out[(r, t)] = False
        return out
    raise FusionLabError(f"full-existence is not implemented for relation {rel.name}")

"""Finite multi-sorted structures, Tarski evaluation, embeddings and automorphisms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Hashable, Iterable, Iterator, Mapping

from .errors import BudgetExceeded, StructureError
from .logic import (
    And, App, Atom, Const, Eq, Exists, Forall, Formula, Iff, Implies, Language, Not, Or, Var,
    free_vars,
)

Element = Hashable


def element_name(e) -> str:
    """Stable string name used for serialization and display."""
    if isinstance(e, str):
        return e
    if isinstance(e, tuple):
        return "<" + ",".join(element_name(x) for x in e) + ">"
    return str(e)


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    """Sorted finite carriers plus interpretations of every symbol.

    Elements are arbitrary hashables and must be distinct across sorts.
    Relations are frozensets of tuples; function tables are total dicts
    from argument tuples to values.
    """

    language: Language
    carriers: Mapping
    relations: Mapping
    functions: Mapping
    constants: Mapping

    def __post_init__(self):
        lang = self.language
        carriers = {s: tuple(self.carriers.get(s, ())) for s in lang.sorts}
        extra = set(self.carriers) - set(lang.sorts)
        if extra:
            raise StructureError(f"carriers for undeclared sorts {sorted(extra)}")
        sort_of = {}
        for s, elems in carriers.items():
            for e in elems:
                if e in sort_of:
                    raise StructureError(f"element {element_name(e)} appears twice (sorts {sort_of[e]}, {s})")
                sort_of[e] = s
        rels = {}
        for name, profile in lang.relations.items():
            tuples = frozenset(tuple(t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != len(profile) or any(sort_of.get(x) != s for x, s in zip(t, profile)):
                    raise StructureError(f"tuple {tuple(map(element_name, t))} is not sort-correct for {name}")
            rels[name] = tuples
        unknown = set(self.relations) - set(lang.relations)
        if unknown:
            raise StructureError(f"interpretation given for undeclared relations {sorted(unknown)}")
        funs = {}
        for name, (args, result) in lang.functions.items():
            table = dict(self.functions.get(name, {}))
            table = {tuple(k) if isinstance(k, tuple) else (k,): v for k, v in table.items()}
            for key in itertools.product(*(carriers[s] for s in args)):
                if key not in table:
                    raise StructureError(f"function {name} undefined at {tuple(map(element_name, key))}")
                if sort_of.get(table[key]) != result:
                    raise StructureError(f"function {name} leaves sort {result} at {key}")
            if len(table) != len(list(itertools.product(*(carriers[s] for s in args)))):
                raise StructureError(f"function {name} has entries outside its domain")
            funs[name] = MappingProxyType(table)
        consts = {}
        for name, s in lang.constants.items():
            if name not in self.constants:
                raise StructureError(f"constant {name} is not interpreted")
            v = self.constants[name]
            if sort_of.get(v) != s:
                raise StructureError(f"constant {name} is not an element of sort {s}")
            consts[name] = v
        object.__setattr__(self, "carriers", MappingProxyType(carriers))
        object.__setattr__(self, "relations", MappingProxyType(rels))
        object.__setattr__(self, "functions", MappingProxyType(funs))
        object.__setattr__(self, "constants", MappingProxyType(consts))
        object.__setattr__(self, "_sort_of", sort_of)

    # -- construction helpers -------------------------------------------
    @classmethod
    def relational(cls, language: Language, elements: Iterable, relations: Mapping | None = None):
        """Single-sorted relational structure."""
        if not language.single_sorted:
            raise StructureError("relational() needs a single-sorted language")
        return cls(language, {language.sorts[0]: tuple(elements)}, dict(relations or {}), {}, {})

    # -- queries --------------------------------------------------------
    def sort_of(self, e) -> str:
        try:
            return self._sort_of[e]
        except KeyError:
            raise StructureError(f"{element_name(e)} is not an element") from None

    def __contains__(self, e) -> bool:
        return e in self._sort_of

    @property
    def elements(self) -> tuple:
        return tuple(e for s in self.language.sorts for e in self.carriers[s])

    @property
    def size(self) -> int:
        return len(self._sort_of)

    def __len__(self):
        return self.size

    @property
    def sizes(self) -> dict:
        return {s: len(c) for s, c in self.carriers.items()}

    @property
    def universe(self) -> tuple:
        """Carrier of a single-sorted structure."""
        if len(self.language.sorts) != 1:
            raise StructureError("universe is only defined for single-sorted structures")
        return self.carriers[self.language.sorts[0]]

    def holds(self, rel: str, *args) -> bool:
        return tuple(args) in self.relations[rel]

    def apply(self, func: str, *args):
        return self.functions[func][tuple(args)]

    def tuple_count(self) -> int:
        return sum(len(t) for t in self.relations.values())

    def key(self):
        return (self.language, tuple(self.carriers.items()),
                tuple((k, frozenset(v)) for k, v in self.relations.items()),
                tuple((k, frozenset(v.items())) for k, v in self.functions.items()),
                tuple(self.constants.items()))

    def __eq__(self, other):
        return isinstance(other, FiniteStructure) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        carriers = "; ".join(f"{s}={{{','.join(map(element_name, c))}}}" for s, c in self.carriers.items())
        rels = " ".join(f"{r}:{len(t)}" for r, t in self.relations.items())
        return f"FiniteStructure({carriers} | {rels})"

    # -- derived structures ---------------------------------------------
    def reduct(self, language: Language) -> "FiniteStructure":
        if not language.issubset(self.language) or language.sorts != self.language.sorts:
            raise StructureError("reduct language must be a sublanguage with the same sorts")
        return FiniteStructure(language, self.carriers,
                               {r: self.relations[r] for r in language.relations},
                               {f: self.functions[f] for f in language.functions},
                               {c: self.constants[c] for c in language.constants})

    def induced(self, keep: Iterable) -> "FiniteStructure":
        """Substructure on ``keep``; it must be closed under functions and contain constants."""
        keep = set(keep)
        for e in keep:
            self.sort_of(e)
        carriers = {s: tuple(e for e in c if e in keep) for s, c in self.carriers.items()}
        rels = {r: {t for t in ts if all(x in keep for x in t)} for r, ts in self.relations.items()}
        funs = {}
        for f, table in self.functions.items():
            sub = {}
            for k, v in table.items():
                if all(x in keep for x in k):
                    if v not in keep:
                        raise StructureError(f"{sorted(map(element_name, keep))} is not closed under {f}")
                    sub[k] = v
            funs[f] = sub
        for c, v in self.constants.items():
            if v not in keep:
                raise StructureError(f"substructure misses constant {c}")
        return FiniteStructure(self.language, carriers, rels, funs, dict(self.constants))

    def rename(self, mapping: Mapping) -> "FiniteStructure":
        """Isomorphic copy with elements renamed (mapping must be injective)."""
        m = lambda e: mapping.get(e, e)  # noqa: E731
        images = [m(e) for e in self.elements]
        if len(set(images)) != len(images):
            raise StructureError("renaming is not injective")
        return FiniteStructure(
            self.language,
            {s: tuple(m(e) for e in c) for s, c in self.carriers.items()},
            {r: {tuple(m(x) for x in t) for t in ts} for r, ts in self.relations.items()},
            {f: {tuple(m(x) for x in k): m(v) for k, v in tb.items()} for f, tb in self.functions.items()},
            {c: m(v) for c, v in self.constants.items()},
        )


# ---------------------------------------------------------------------------
# Evaluation


def _compile_term(t) -> Callable:
    if isinstance(t, Var):
        return lambda M, env: env[t]
    if isinstance(t, Const):
        name = t.name
        return lambda M, env: M.constants[name]
    subs = [_compile_term(a) for a in t.args]
    name = t.func
    if len(subs) == 1:
        s0 = subs[0]
        return lambda M, env: M.functions[name][(s0(M, env),)]
    return lambda M, env: M.functions[name][tuple(s(M, env) for s in subs)]


def compile_formula(f: Formula) -> Callable:
    """Turn a formula into ``fn(structure, env)`` with env mapping Var to element."""
    if isinstance(f, Eq):
        l, r = _compile_term(f.left), _compile_term(f.right)
        return lambda M, env: l(M, env) == r(M, env)
    if isinstance(f, Atom):
        subs = [_compile_term(a) for a in f.args]
        rel = f.rel
        if all(isinstance(a, Var) for a in f.args):
            vs = f.args
            return lambda M, env: tuple(env[v] for v in vs) in M.relations[rel]
        return lambda M, env: tuple(s(M, env) for s in subs) in M.relations[rel]
    if isinstance(f, Not):
        g = compile_formula(f.arg)
        return lambda M, env: not g(M, env)
    if isinstance(f, And):
        gs = [compile_formula(a) for a in f.args]
        return lambda M, env: all(g(M, env) for g in gs)
    if isinstance(f, Or):
        gs = [compile_formula(a) for a in f.args]
        return lambda M, env: any(g(M, env) for g in gs)
    if isinstance(f, Implies):
        a, b = compile_formula(f.left), compile_formula(f.right)
        return lambda M, env: (not a(M, env)) or b(M, env)
    if isinstance(f, Iff):
        a, b = compile_formula(f.left), compile_formula(f.right)
        return lambda M, env: a(M, env) == b(M, env)
    if isinstance(f, (Exists, Forall)):
        body = compile_formula(f.body)
        vs = f.vars
        quant = any if isinstance(f, Exists) else all

        def run(M, env):
            inner = dict(env)

            def gen():
                for vals in itertools.product(*(M.carriers[v.sort] for v in vs)):
                    inner.update(zip(vs, vals))
                    yield body(M, inner)

            return quant(gen())

        return run
    raise TypeError(f"not a formula: {f!r}")


_COMPILED: dict = {}


def compiled(f: Formula) -> Callable:
    fn = _COMPILED.get(f)
    if fn is None:
        if len(_COMPILED) > 4096:
            _COMPILED.clear()
        fn = _COMPILED[f] = compile_formula(f)
    return fn


def normalize_assignment(formula: Formula, assignment: Mapping | None) -> dict:
    """Map a name- or Var-keyed assignment onto the free variables exactly."""
    fv = free_vars(formula)
    assignment = dict(assignment or {})
    by_name = {}
    for k, v in assignment.items():
        by_name[k.name if isinstance(k, Var) else k] = v
    names = {v.name for v in fv}
    missing = names - set(by_name)
    extra = set(by_name) - names
    if missing or extra:
        raise StructureError(f"assignment mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
    return {v: by_name[v.name] for v in fv}


def evaluate(structure: FiniteStructure, formula: Formula, assignment: Mapping | None = None) -> bool:
    """Tarski satisfaction; ``assignment`` must cover exactly the free variables."""
    env = normalize_assignment(formula, assignment)
    for v, e in env.items():
        if structure.sort_of(e) != v.sort:
            raise StructureError(f"{v.name} is of sort {v.sort} but {element_name(e)} is not")
    return compiled(formula)(structure, env)


# ---------------------------------------------------------------------------
# Embeddings


@dataclass(frozen=True, eq=False)
class Embedding:
    source: FiniteStructure
    target: FiniteStructure
    mapping: Mapping

    def __call__(self, e):
        return self.mapping[e]

    def image(self, elements: Iterable) -> set:
        return {self.mapping[e] for e in elements}

    def inverse(self) -> "Embedding":
        """Inverse of a bijective embedding."""
        if len(self.mapping) != self.target.size:
            raise StructureError("only isomorphisms can be inverted")
        return Embedding(self.target, self.source, {v: k for k, v in self.mapping.items()})

    def compose(self, other: "Embedding") -> "Embedding":
        """``other`` after ``self``."""
        return Embedding(self.source, other.target, {k: other.mapping[v] for k, v in self.mapping.items()})

    def is_valid(self) -> bool:
        return is_embedding(self.source, self.target, self.mapping)

    def __repr__(self):
        pairs = ", ".join(f"{element_name(k)}->{element_name(v)}" for k, v in self.mapping.items())
        return f"Embedding({pairs})"


def is_embedding(source: FiniteStructure, target: FiniteStructure, mapping: Mapping) -> bool:
    """Injective, sort-preserving, preserves and reflects relations, commutes with functions."""
    if set(mapping) != set(source.elements):
        return False
    if len(set(mapping.values())) != len(mapping):
        return False
    for e, v in mapping.items():
        if v not in target or target.sort_of(v) != source.sort_of(e):
            return False
    image = set(mapping.values())
    for r, tuples in source.relations.items():
        mapped = {tuple(mapping[x] for x in t) for t in tuples}
        if not mapped <= target.relations[r]:
            return False
        if any(all(x in image for x in t) and t not in mapped for t in target.relations[r]):
            return False
    for f, table in source.functions.items():
        for k, v in table.items():
            if target.functions[f][tuple(mapping[x] for x in k)] != mapping[v]:
                return False
    return all(target.constants[c] == mapping[v] for c, v in source.constants.items())


def _degree_profile(M: FiniteStructure) -> dict:
    prof = {e: {} for e in M.elements}
    for r, tuples in M.relations.items():
        for t in tuples:
            for i, x in enumerate(t):
                key = (r, i)
                prof[x][key] = prof[x].get(key, 0) + 1
    return prof


def _touching(M: FiniteStructure) -> dict:
    touch = {e: [] for e in M.elements}
    for r, tuples in M.relations.items():
        for t in tuples:
            for x in set(t):
                touch[x].append((r, t))
    for f, table in M.functions.items():
        for k, v in table.items():
            for x in set(k) | {v}:
                touch[x].append((f, k + (v,)))
    return touch


def iter_embeddings(source: FiniteStructure, target: FiniteStructure, partial: Mapping | None = None,
                    bijective: bool = False) -> Iterator[Embedding]:
    """Backtracking search in canonical order (source order, target candidates in carrier order)."""
    if source.language != target.language:
        raise StructureError("embedding search needs structures over the same language")
    partial = dict(partial or {})
    for c, v in source.constants.items():
        if partial.setdefault(v, target.constants[c]) != target.constants[c]:
            return
    if bijective and source.sizes != target.sizes:
        return
    for s in source.language.sorts:
        if len(source.carriers[s]) > len(target.carriers[s]):
            return
    for k, v in partial.items():
        if k not in source or v not in target or source.sort_of(k) != target.sort_of(v):
            return
    if len(set(partial.values())) != len(partial):
        return
    sp, tp = _degree_profile(source), _degree_profile(target)
    s_touch, t_touch = _touching(source), _touching(target)
    s_fun = {f: tb for f, tb in source.functions.items()}
    t_fun = {f: tb for f, tb in target.functions.items()}

    def fits(e, v):
        de, dv = sp[e], tp[v]
        if bijective:
            return de == dv
        return all(dv.get(k, 0) >= n for k, n in de.items())

    forward: dict = {}
    backward: dict = {}

    def consistent(e) -> bool:
        for sym, t in s_touch[e]:
            if all(x in forward for x in t):
                img = tuple(forward[x] for x in t)
                if sym in s_fun:
                    if t_fun[sym][img[:-1]] != img[-1]:
                        return False
                elif img not in target.relations[sym]:
                    return False
        for sym, t in t_touch[forward[e]]:
            if sym in t_fun:
                continue
            if all(x in backward for x in t):
                if tuple(backward[x] for x in t) not in source.relations[sym]:
                    return False
        return True

    for e, v in partial.items():
        if not fits(e, v):
            return
        forward[e], backward[v] = v, e
    for e in partial:
        if not consistent(e):
            return
    order = [e for e in source.elements if e not in partial]
    candidates = {e: [v for v in target.carriers[source.sort_of(e)] if fits(e, v)] for e in order}

    def extend(i):
        if i == len(order):
            yield Embedding(source, target, dict(forward))
            return
        e = order[i]
        for v in candidates[e]:
            if v in backward:
                continue
            forward[e], backward[v] = v, e
            if consistent(e):
                yield from extend(i + 1)
            del forward[e], backward[v]

    yield from extend(0)


def find_embeddings(source: FiniteStructure, target: FiniteStructure, partial: Mapping | None = None,
                    limit: int | None = None) -> list:
    """All embeddings extending ``partial`` in canonical order (at most ``limit``)."""
    return list(itertools.islice(iter_embeddings(source, target, partial), limit))


def find_isomorphism(a: FiniteStructure, b: FiniteStructure, partial: Mapping | None = None):
    return next(iter_embeddings(a, b, partial, bijective=True), None)


def is_isomorphic(a: FiniteStructure, b: FiniteStructure) -> bool:
    return find_isomorphism(a, b) is not None


# ---------------------------------------------------------------------------
# Generated substructures


def generated_substructure(structure: FiniteStructure, seed: Iterable):
    """Least substructure containing ``seed`` and the constants; returns (substructure, inclusion)."""
    closed = set()
    todo = list(seed) + list(structure.constants.values())
    for e in todo:
        structure.sort_of(e)
    while todo:
        closed.update(todo)
        todo = []
        for f, (args, _) in structure.language.functions.items():
            pools = [[e for e in structure.carriers[s] if e in closed] for s in args]
            for key in itertools.product(*pools):
                v = structure.functions[f][key]
                if v not in closed and v not in todo:
                    todo.append(v)
    sub = structure.induced(closed)
    return sub, Embedding(sub, structure, {e: e for e in sub.elements})


# ---------------------------------------------------------------------------
# Automorphisms

DEFAULT_AUT_BUDGET = 100_000


@dataclass(frozen=True, eq=False)
class AutomorphismSet:
    structure: FiniteStructure
    fixed: frozenset
    maps: tuple

    def __len__(self):
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def is_group(self) -> bool:
        keys = {tuple(sorted(m.items(), key=repr)) for m in self.maps}

        def key(m):
            return tuple(sorted(m.items(), key=repr))

        identity = {e: e for e in self.structure.elements}
        if key(identity) not in keys:
            return False
        for g in self.maps:
            if key({v: k for k, v in g.items()}) not in keys:
                return False
            for h in self.maps:
                if key({e: h[g[e]] for e in g}) not in keys:
                    return False
        return True

    def orbits(self, arity: int = 1) -> list:
        """Orbit partition of ``arity``-tuples of elements (single carrier order)."""
        seen = set()
        out = []
        for t in itertools.product(self.structure.elements, repeat=arity):
            if t in seen:
                continue
            orbit = {tuple(m[x] for x in t) for m in self.maps}
            seen |= orbit
            out.append(sorted(orbit, key=lambda u: [self.structure.elements.index(x) for x in u]))
        return out


def automorphisms(structure: FiniteStructure, fixed: Iterable = (), budget: int | None = None) -> AutomorphismSet:
    """All automorphisms fixing ``fixed`` pointwise; raises BudgetExceeded past ``budget``."""
    fixed = frozenset(fixed)
    budget = DEFAULT_AUT_BUDGET if budget is None else budget
    maps = []
    for emb in iter_embeddings(structure, structure, {e: e for e in fixed}, bijective=True):
        maps.append(emb.mapping)
        if len(maps) > budget:
            raise BudgetExceeded(f"more than {budget} automorphisms")
    return AutomorphismSet(structure, fixed, tuple(maps))


# ---------------------------------------------------------------------------
# Canonical codes


def structure_code(M: FiniteStructure, order: Mapping | None = None) -> tuple:
    """Code of M under the element order ``order`` (element -> rank within its sort)."""
    lang = M.language
    if order is None:
        order = {e: i for s in lang.sorts for i, e in enumerate(M.carriers[s])}
    by_rank = {s: [None] * len(M.carriers[s]) for s in lang.sorts}
    for s in lang.sorts:
        for e in M.carriers[s]:
            by_rank[s][order[e]] = e
    code = [len(M.carriers[s]) for s in lang.sorts]
    for r, profile in lang.relations.items():
        rel = M.relations[r]
        for idx in itertools.product(*(range(len(M.carriers[s])) for s in profile)):
            code.append(1 if tuple(by_rank[s][i] for s, i in zip(profile, idx)) in rel else 0)
    for f, (args, result) in lang.functions.items():
        table = M.functions[f]
        for idx in itertools.product(*(range(len(M.carriers[s])) for s in args)):
            code.append(order[table[tuple(by_rank[s][i] for s, i in zip(args, idx))]])
    for c in lang.constants:
        code.append(order[M.constants[c]])
    return tuple(code)


def canonical_code(M: FiniteStructure) -> tuple:
    """Minimum code over all per-sort permutations (exact; desk scale only)."""
    lang = M.language
    best = None
    perms = [itertools.permutations(range(len(M.carriers[s]))) for s in lang.sorts]
    for choice in itertools.product(*perms):
        order = {}
        for s, p in zip(lang.sorts, choice):
            for e, rank in zip(M.carriers[s], p):
                order[e] = rank
        code = structure_code(M, order)
        if best is None or code < best:
            best = code
    return best

"""Theories, universal classes of finite structures, and enumeration up to isomorphism."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BudgetExceeded, ClassViolation, LanguageError
from .logic import (
    Atom, Eq, Forall, Formula, Language, Not, Var, conj, parse_formula, relational_language, to_text,
    universal_parts,
)
from .search import CompiledAxiom, Grounding, budget_guard, solutions
from .structures import FiniteStructure, compiled, element_name, structure_code

DEFAULT_BUDGET = 200_000


def default_budget() -> int:
    """Enumeration budget; ``FUSIONLAB_BUDGET`` overrides the default."""
    value = os.environ.get("FUSIONLAB_BUDGET")
    return int(value) if value else DEFAULT_BUDGET


def _as_formula(axiom, language):
    return parse_formula(axiom, language) if isinstance(axiom, str) else axiom


class Theory:
    """A language plus arbitrary first-order axioms, checked by evaluation."""

    def __init__(self, language: Language, axioms=(), name: str = ""):
        self.language = language
        self.axioms = tuple(_as_formula(a, language) for a in axioms)
        self.name = name or "theory"

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, {len(self.axioms)} axioms)"

    def violation(self, structure: FiniteStructure):
        """First violated axiom as (formula, assignment) or None."""
        self._check_language(structure)
        for ax in self.axioms:
            if not compiled(ax)(structure, {}):
                return ax, {}
        return None

    def _check_language(self, structure):
        if structure.language != self.language:
            raise LanguageError(f"structure language {structure.language!r} differs from {self.name}'s")

    def satisfied_by(self, structure: FiniteStructure) -> bool:
        return self.violation(structure) is None

    def check(self, structure: FiniteStructure) -> None:
        v = self.violation(structure)
        if v is not None:
            formula, assignment = v
            shown = ", ".join(f"{k.name}={element_name(e)}" for k, e in assignment.items())
            raise ClassViolation(f"{self.name}: axiom {to_text(formula)} fails"
                                 + (f" at {shown}" if shown else ""), formula, assignment)


def forbidden_axiom(config: FiniteStructure) -> Formula:
    """Universal sentence saying ``config`` does not embed."""
    elems = config.elements
    xs = {e: Var(f"x{i}", config.sort_of(e)) for i, e in enumerate(elems)}
    lits = []
    for a, b in itertools.combinations(elems, 2):
        if config.sort_of(a) == config.sort_of(b):
            lits.append(Not(Eq(xs[a], xs[b])))
    lang = config.language
    for r, profile in lang.relations.items():
        for t in itertools.product(*(config.carriers[s] for s in profile)):
            atom = Atom(r, tuple(xs[e] for e in t))
            lits.append(atom if t in config.relations[r] else Not(atom))
    if lang.functions or lang.constants:
        raise LanguageError("forbidden configurations must be relational")
    body = Not(conj(*lits)) if lits else Not(conj())
    return Forall(tuple(xs.values()), body) if xs else body


class ClassSpec(Theory):
    """A universal class: universal axioms plus forbidden configurations."""

    def __init__(self, language: Language, axioms=(), forbidden=(), name: str = ""):
        super().__init__(language, axioms, name or "class")
        self.forbidden = tuple(forbidden)
        for ax in self.axioms:
            if universal_parts(ax) is None:
                raise LanguageError(f"class axiom is not universal: {to_text(ax)}")
        for f in self.forbidden:
            if f.language != language:
                raise LanguageError("forbidden configuration over a different language")

    @cached_property
    def all_axioms(self) -> tuple:
        return self.axioms + tuple(forbidden_axiom(f) for f in self.forbidden)

    @cached_property
    def compiled(self) -> tuple:
        return tuple(CompiledAxiom.build(a) for a in self.all_axioms)

    @property
    def is_relational(self) -> bool:
        return self.language.is_relational

    def violation(self, structure: FiniteStructure, focus=None):
        self._check_language(structure)
        rels = structure.relations
        g = Grounding(self.language, structure.carriers, self.compiled,
                      lambda r, t: t in rels[r], focus, structure.functions, structure.constants)
        return g.conflict

    def restricted_to(self, language: Language, name: str = "") -> "ClassSpec":
        """Axioms that mention only symbols of ``language`` (a sound but possibly weaker class)."""
        from .logic import symbols_of
        keep = [a for a in self.all_axioms if symbols_of(a) <= language.symbols]
        return ClassSpec(language, keep, (), name or f"{self.name}|{','.join(sorted(language.symbols))}")

    def members(self, size, budget=None) -> list:
        return enumerate_models(self, size, budget)


# ---------------------------------------------------------------------------
# Enumeration


def _sizes_for(language: Language, size) -> dict:
    if isinstance(size, int):
        if not language.single_sorted:
            sizes = {s: size for s in language.sorts}
        else:
            sizes = {language.sorts[0]: size}
    else:
        sizes = {s: int(size.get(s, 0)) for s in language.sorts}
    if any(v < 0 for v in sizes.values()):
        raise ValueError("sizes must be non-negative")
    return sizes


def standard_carriers(language: Language, sizes: dict) -> dict:
    """Elements 0..N-1 numbered consecutively in sort order."""
    out = {}
    n = 0
    for s in language.sorts:
        out[s] = tuple(range(n, n + sizes[s]))
        n += sizes[s]
    return out


def _relational_perm_index(language, carriers):
    """Atoms in code order and, per permutation, the atom index at each code position."""
    atoms = []
    for r, profile in language.relations.items():
        for t in itertools.product(*(carriers[s] for s in profile)):
            atoms.append((r, t))
    pos = {a: i for i, a in enumerate(atoms)}
    perms = []
    for choice in itertools.product(*(itertools.permutations(carriers[s]) for s in language.sorts)):
        # choice[k][rank] = element holding that rank
        by_rank = dict(zip(language.sorts, choice))
        row = []
        for r, profile in language.relations.items():
            for idx in itertools.product(*(range(len(carriers[s])) for s in profile)):
                row.append(pos[(r, tuple(by_rank[s][i] for s, i in zip(profile, idx)))])
        perms.append(row)
    return atoms, np.array(perms, dtype=np.intp).reshape(len(perms), len(atoms))


def enumerate_models(spec: ClassSpec, size, budget: int | None = None) -> list:
    """One canonical representative per isomorphism class, ordered by (tuple count, code)."""
    budget = default_budget() if budget is None else budget
    lang = spec.language
    sizes = _sizes_for(lang, size)
    carriers = standard_carriers(lang, sizes)
    tick = budget_guard(budget)
    func_choices = 1
    for f, (args, result) in lang.functions.items():
        dom = 1
        for s in args:
            dom *= len(carriers[s])
        func_choices *= len(carriers[result]) ** dom
    for c, s in lang.constants.items():
        func_choices *= len(carriers[s])
    if func_choices == 0:
        return []
    if func_choices > budget:
        raise BudgetExceeded(f"{func_choices} function/constant interpretations exceed budget {budget}")

    found: dict = {}
    if lang.is_relational:
        atoms, perm_index = _relational_perm_index(lang, carriers)
        g = Grounding(lang, carriers, spec.compiled, lambda r, t: None, None)
        order = [g.index[a] for a in atoms]
        batch = []

        def flush():
            if not batch:
                return
            S = np.array(batch, dtype=np.uint8)[:, order]
            codes = np.packbits(S[:, perm_index], axis=2)
            for row in codes:
                key = min(r.tobytes() for r in row)
                found.setdefault(key, None)
            batch.clear()

        for sol in solutions(g.sat):
            tick()
            batch.append(sol)
            if len(batch) >= 2048:
                flush()
        flush()
        reps = []
        nat = len(atoms)
        for key in found:
            bits = np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:nat]
            rels = {r: set() for r in lang.relations}
            # code position i corresponds to atoms[i] under the identity order
            for i, b in enumerate(bits):
                if b:
                    r, t = atoms[i]
                    rels[r].add(t)
            reps.append(FiniteStructure(lang, carriers, rels, {}, {}))
    else:
        from .structures import canonical_code
        seen = {}
        for funs, consts in _function_interpretations(lang, carriers):
            shell = FiniteStructure(lang, carriers, {}, funs, consts)
            g = Grounding(lang, carriers, spec.compiled, lambda r, t: None, None, shell.functions,
                          shell.constants)
            for sol in g.solutions():
                tick()
                rels = {r: set() for r in lang.relations}
                for (r, t), val in sol.items():
                    if val:
                        rels[r].add(t)
                M = FiniteStructure(lang, carriers, rels, funs, consts)
                code = canonical_code(M)
                if code not in seen:
                    seen[code] = M
        reps = [_canonical_representative(M, code) for code, M in seen.items()]
    reps.sort(key=lambda M: (M.tuple_count(), structure_code(M)))
    return reps


def _function_interpretations(lang, carriers):
    fun_items = []
    for f, (args, result) in lang.functions.items():
        dom = list(itertools.product(*(carriers[s] for s in args)))
        fun_items.append((f, dom, carriers[result]))
    const_items = [(c, carriers[s]) for c, s in lang.constants.items()]
    tables = [itertools.product(vals, repeat=len(dom)) for _, dom, vals in fun_items]
    for choice in itertools.product(*[list(t) for t in tables]):
        funs = {f: dict(zip(dom, vals)) for (f, dom, _), vals in zip(fun_items, choice)}
        for cvals in itertools.product(*(vals for _, vals in const_items)):
            yield funs, {c: v for (c, _), v in zip(const_items, cvals)}


def _canonical_representative(M: FiniteStructure, code) -> FiniteStructure:
    """Relabel M so that its identity-order code is the canonical code."""
    lang = M.language
    for choice in itertools.product(*(itertools.permutations(range(len(M.carriers[s]))) for s in lang.sorts)):
        order = {}
        for s, p in zip(lang.sorts, choice):
            for e, rank in zip(M.carriers[s], p):
                order[e] = rank
        if structure_code(M, order) == code:
            base = {s: M.carriers[s] for s in lang.sorts}
            mapping = {}
            for s in lang.sorts:
                for e in M.carriers[s]:
                    mapping[e] = base[s][order[e]]
            return M.rename(mapping)
    raise AssertionError("canonical code not realized")


def count_labeled(spec: ClassSpec, size, budget: int | None = None) -> int:
    """Number of labeled members on the standard carriers (oracle helper)."""
    budget = default_budget() if budget is None else budget
    lang = spec.language
    carriers = standard_carriers(lang, _sizes_for(lang, size))
    tick = budget_guard(budget)
    total = 0
    for funs, consts in _function_interpretations(lang, carriers):
        g = Grounding(lang, carriers, spec.compiled, lambda r, t: None, None, funs, consts)
        for _ in g.solutions():
            tick()
            total += 1
    return total


# ---------------------------------------------------------------------------
# Library

GRAPH = relational_language({"E": 2})
HYPER3 = relational_language({"R": 3})
L1 = relational_language({"R": 3, "E1": 2})
L2 = relational_language({"R": 3, "E2": 2})
LFUSION = relational_language({"R": 3, "E1": 2, "E2": 2})
CLIQUE = relational_language({"E": 2, "P": 1})
SETS = Language(("V",))

_GRAPH_AXIOMS = ("forall x: !E(x,x)", "forall x y: E(x,y) -> E(y,x)")
_HYPER_AXIOMS = (
    "forall x y z: R(x,y,z) -> R(y,x,z) & R(x,z,y)",
    "forall x y z: R(x,y,z) -> x!=y & y!=z & x!=z",
)


def _edge_axioms(e):
    return (f"forall x: !{e}(x,x)", f"forall x y: {e}(x,y) -> {e}(y,x)")


def graphs() -> ClassSpec:
    return ClassSpec(GRAPH, _GRAPH_AXIOMS, name="graphs")


def triangle_free() -> ClassSpec:
    return ClassSpec(GRAPH, _GRAPH_AXIOMS + ("forall x y z: !(E(x,y) & E(y,z) & E(z,x))",),
                     name="triangle-free")


def hypergraphs3() -> ClassSpec:
    return ClassSpec(HYPER3, _HYPER_AXIOMS, name="hypergraphs3")


def tournaments() -> ClassSpec:
    return ClassSpec(GRAPH, ("forall x: !E(x,x)", "forall x y: x!=y -> E(x,y) | E(y,x)",
                             "forall x y: !(E(x,y) & E(y,x))"), name="tournaments")


def hyper_edge_class(index: int) -> ClassSpec:
    """Hypergraph plus a graph E_i whose triangles are (i=1) or avoid (i=2) hyperedges."""
    e = f"E{index}"
    lang = L1 if index == 1 else L2
    head = "R(x,y,z)" if index == 1 else "!R(x,y,z)"
    return ClassSpec(lang, _HYPER_AXIOMS + _edge_axioms(e)
                     + (f"forall x y z: {e}(x,y) & {e}(y,z) & {e}(z,x) -> {head}",), name=f"k{index}")


def fusion_class() -> ClassSpec:
    """Structures whose {R,E1}- and {R,E2}-reducts lie in k1 and k2."""
    axioms = list(hyper_edge_class(1).axioms)
    axioms += [a for a in hyper_edge_class(2).axioms if a not in axioms]
    return ClassSpec(LFUSION, axioms, name="fusion")


def bounded_equivalence(bound: int = 2) -> ClassSpec:
    """Equivalence relations whose classes have at most ``bound`` elements."""
    ys = [f"y{i}" for i in range(bound + 1)]
    related = " & ".join(f"E(x,{y})" for y in ys)
    distinct = " | ".join(f"{a}={b}" for a, b in itertools.combinations(ys, 2))
    return ClassSpec(GRAPH, ("forall x: E(x,x)", "forall x y: E(x,y) -> E(y,x)",
                             "forall x y z: E(x,y) & E(y,z) -> E(x,z)",
                             f"forall x {' '.join(ys)}: {related} -> {distinct}"),
                     name=f"bounded-equivalence{bound}")


def clique_graphs() -> ClassSpec:
    """Graphs with a unary predicate naming a clique."""
    return ClassSpec(CLIQUE, _GRAPH_AXIOMS + ("forall x y: P(x) & P(y) & x!=y -> E(x,y)",),
                     name="clique-graphs")


def sets() -> ClassSpec:
    return ClassSpec(SETS, (), name="sets")


BUILTIN = {
    "graphs": graphs,
    "triangle-free": triangle_free,
    "hypergraphs3": hypergraphs3,
    "tournaments": tournaments,
    "k1": lambda: hyper_edge_class(1),
    "k2": lambda: hyper_edge_class(2),
    "fusion": fusion_class,
    "bounded-equivalence": bounded_equivalence,
    "clique-graphs": clique_graphs,
    "sets": sets,
}


def builtin_class(name: str) -> ClassSpec:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise LanguageError(f"unknown builtin class {name!r}; known: {', '.join(sorted(BUILTIN))}") from None

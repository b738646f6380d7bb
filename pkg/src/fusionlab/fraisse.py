"""Amalgamation checks, free amalgams, generic builds, extension audits, expansions, joint types.

The engine handles single-sorted relational classes.  Structures built here
use the integers ``0..n-1`` as elements.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .classes import ClassSpec, enumerate_models, standard_carriers
from .errors import (
    ClassViolation, LanguageError, PreconditionError, StructureError, TypeClashError,
)
from .logic import (
    And, Atom, Eq, Formula, Iff, Implies, LanguageFamily, Not, Or, to_text, universal_parts,
)
from .normal_forms import FlatLiteral
from .search import Grounding
from .structures import Embedding, FiniteStructure, element_name, is_embedding, structure_code

PROPERTIES = ("JEP", "AP", "dAP")


def require_relational(spec: ClassSpec) -> None:
    if not spec.language.is_relational or not spec.language.single_sorted:
        raise LanguageError(f"{spec.name}: the amalgamation engine needs a single-sorted relational class")


def _sort(spec):
    return spec.language.sorts[0]


def _structure(spec, n, rels) -> FiniteStructure:
    return FiniteStructure(spec.language, {_sort(spec): tuple(range(n))}, rels, {}, {})


# ---------------------------------------------------------------------------
# Vectorised axiom checks


class BatchChecker:
    """Evaluates the universal axioms of a relational class on stacks of dense structures."""

    def __init__(self, spec: ClassSpec):
        require_relational(spec)
        self.spec = spec
        self.parts = []
        for ax in spec.all_axioms:
            variables, matrix = universal_parts(ax)
            self.parts.append((variables, matrix))
        self._grids: dict = {}

    def _grid(self, n, m, i):
        key = (n, m, i)
        g = self._grids.get(key)
        if g is None:
            shape = [1] * m
            shape[i] = n
            g = self._grids[key] = np.arange(n).reshape(shape)
        return g

    def _eval(self, f, arrays, index, n, m):
        if isinstance(f, Atom):
            arr = arrays[f.rel]
            if not f.args:
                return arr.reshape((arr.shape[0],) + (1,) * m)
            idx = tuple(self._grid(n, m, index[a]) for a in f.args)
            out = arr[(slice(None),) + idx]
            return out.reshape((arr.shape[0],) + np.broadcast_shapes(*(g.shape for g in idx)))
        if isinstance(f, Eq):
            g = self._grid(n, m, index[f.left]) == self._grid(n, m, index[f.right])
            return g[None]
        if isinstance(f, Not):
            return ~self._eval(f.arg, arrays, index, n, m)
        if isinstance(f, And):
            out = np.ones((1,) + (1,) * m, dtype=bool)
            for a in f.args:
                out = out & self._eval(a, arrays, index, n, m)
            return out
        if isinstance(f, Or):
            out = np.zeros((1,) + (1,) * m, dtype=bool)
            for a in f.args:
                out = out | self._eval(a, arrays, index, n, m)
            return out
        if isinstance(f, Implies):
            return ~self._eval(f.left, arrays, index, n, m) | self._eval(f.right, arrays, index, n, m)
        if isinstance(f, Iff):
            return self._eval(f.left, arrays, index, n, m) == self._eval(f.right, arrays, index, n, m)
        raise TypeError(f"unexpected node {f!r}")

    def __call__(self, arrays: Mapping, n: int) -> np.ndarray:
        batch = next(iter(arrays.values())).shape[0] if arrays else 1
        ok = np.ones(batch, dtype=bool)
        for variables, matrix in self.parts:
            m = len(variables)
            index = {v: i for i, v in enumerate(variables)}
            val = self._eval(matrix, arrays, index, n, m)
            val = np.broadcast_to(val, (batch,) + (n,) * m).reshape(batch, -1)
            ok &= val.all(axis=1)
        return ok


def dense(structure: FiniteStructure, order=None) -> dict:
    """Boolean arrays per relation over the element order (default: carrier order)."""
    order = list(order if order is not None else structure.universe)
    pos = {e: i for i, e in enumerate(order)}
    n = len(order)
    out = {}
    for r, profile in structure.language.relations.items():
        arr = np.zeros((n,) * len(profile), dtype=bool)
        for t in structure.relations[r]:
            arr[tuple(pos[x] for x in t)] = True
        out[r] = arr
    return out


# ---------------------------------------------------------------------------
# Labeled extensions


def extensions(spec: ClassSpec, base: FiniteStructure, k: int, canonical: bool = True) -> list:
    """Class members on ``0..a+k-1`` restricting to ``base`` on ``0..a-1``.

    With ``canonical`` the list holds one extension per orbit of the
    symmetric group on the new points, in code order.
    """
    require_relational(spec)
    a = base.size
    if tuple(base.universe) != tuple(range(a)):
        raise StructureError("base must live on 0..a-1")
    n = a + k
    rels = base.relations
    new = set(range(a, n))

    def known(r, t):
        return t in rels[r] if all(x < a for x in t) else None

    g = Grounding(spec.language, {_sort(spec): tuple(range(n))}, spec.compiled, known, new)
    found = {}
    perms = list(itertools.permutations(range(a, n))) if canonical else [tuple(range(a, n))]
    for sol in g.solutions():
        rel_sets = {r: set(ts) for r, ts in rels.items()}
        for (r, t), val in sol.items():
            if val:
                rel_sets[r].add(t)
        M = _structure(spec, n, rel_sets)
        best = None
        for p in perms:
            order = {i: i for i in range(a)}
            for rank, e in zip(range(a, n), p):
                order[e] = rank
            code = structure_code(M, order)
            if best is None or code < best[0]:
                best = (code, order)
        code, order = best
        if code not in found:
            found[code] = M.rename(order) if canonical else M
    return [found[c] for c in sorted(found)]


# ---------------------------------------------------------------------------
# Amalgamation


@dataclass(frozen=True, eq=False)
class AmalgamProblem:
    base: FiniteStructure
    left: FiniteStructure
    right: FiniteStructure
    f_left: Mapping
    f_right: Mapping

    def validate(self) -> None:
        if not is_embedding(self.base, self.left, self.f_left):
            raise StructureError("base -> left is not an embedding")
        if not is_embedding(self.base, self.right, self.f_right):
            raise StructureError("base -> right is not an embedding")

    def describe(self) -> str:
        return (f"base {self.base!r}; left {self.left!r}; right {self.right!r}")


def free_amalgam(problem: AmalgamProblem, spec: ClassSpec | None = None):
    """Disjoint union over the base with no mixed tuples.

    Returns ``(structure, g_left, g_right)``.  With ``spec`` the result is
    checked and a ClassViolation names the failing axiom.
    """
    problem.validate()
    lang = problem.left.language
    if not lang.is_relational:
        raise LanguageError("free amalgams are defined here for relational languages")
    inv_left = {v: k for k, v in problem.f_left.items()}
    inv_right = {v: k for k, v in problem.f_right.items()}
    g_left = {e: e for e in problem.left.elements}
    taken = set(g_left.values())
    g_right = {}
    for e in problem.right.elements:
        if e in inv_right:
            g_right[e] = g_left[problem.f_left[inv_right[e]]]
            continue
        name = e
        while name in taken:
            name = (name, "'") if not isinstance(name, str) else name + "'"
        taken.add(name)
        g_right[e] = name
    carriers = {}
    for s in lang.sorts:
        extra = [g_right[e] for e in problem.right.carriers[s] if e not in inv_right]
        carriers[s] = tuple(problem.left.carriers[s]) + tuple(extra)
    rels = {}
    for r in lang.relations:
        rels[r] = set(problem.left.relations[r]) | {tuple(g_right[x] for x in t) for t in problem.right.relations[r]}
    D = FiniteStructure(lang, carriers, rels, {}, {})
    if spec is not None:
        v = spec.violation(D)
        if v is not None:
            formula, env = v
            shown = ", ".join(f"{k.name}={element_name(x)}" for k, x in env.items())
            raise ClassViolation(f"free amalgam leaves {spec.name}: {to_text(formula)} fails at {shown}",
                                 formula, env)
    return D, Embedding(problem.left, D, g_left), Embedding(problem.right, D, g_right)


def _combine(spec, a, e1, e2, ident: Mapping, fixed_only=False):
    """Amalgam search: e1 on 0..a+k1-1, e2's new points placed after, ``ident`` glues e2 points to e1 points.

    Returns the amalgam structure or None.
    """
    k1 = e1.size - a
    k2 = e2.size - a
    place = {i: i for i in range(a)}
    nxt = a + k1
    for q in range(a, a + k2):
        if q in ident:
            place[q] = ident[q]
        else:
            place[q] = nxt
            nxt += 1
    n = nxt
    side1 = set(range(a + k1))
    side2 = set(place.values())
    r1 = e1.relations
    r2 = {r: {tuple(place[x] for x in t) for t in ts} for r, ts in e2.relations.items()}
    # consistency on the overlap of the two sides
    overlap = side1 & side2
    for r, profile in spec.language.relations.items():
        for t in r1[r]:
            if all(x in overlap for x in t) and t not in r2[r]:
                return None
        for t in r2[r]:
            if all(x in overlap for x in t) and t not in r1[r]:
                return None

    def known(r, t):
        if all(x in side1 for x in t):
            return t in r1[r]
        if all(x in side2 for x in t):
            return t in r2[r]
        return None

    focus = side2 - side1
    g = Grounding(spec.language, {_sort(spec): tuple(range(n))}, spec.compiled, known, focus)
    sol = g.solve()
    if sol is None:
        return None
    rels = {r: set(r1[r]) | r2[r] for r in spec.language.relations}
    for (r, t), val in sol.items():
        if val:
            rels[r].add(t)
    return _structure(spec, n, rels)


def amalgamate(spec: ClassSpec, a: int, e1: FiniteStructure, e2: FiniteStructure, disjoint: bool):
    """Any amalgam of two extensions of the base on ``0..a-1`` (disjoint if requested)."""
    D = _combine(spec, a, e1, e2, {})
    if D is not None or disjoint:
        return D
    new1 = list(range(a, e1.size))
    new2 = list(range(a, e2.size))
    for size in range(1, min(len(new1), len(new2)) + 1):
        for qs in itertools.combinations(new2, size):
            for ps in itertools.permutations(new1, size):
                D = _combine(spec, a, e1, e2, dict(zip(qs, ps)))
                if D is not None:
                    return D
    return None


@dataclass
class PropertyVerdict:
    property: str
    holds: bool
    size_limit: int
    checked: int = 0
    witness: AmalgamProblem | None = None

    @property
    def label(self) -> str:
        return f"holds-up-to-size {self.size_limit}" if self.holds else "fails-with-witness"


@dataclass
class ClassReport:
    class_name: str
    size_limit: int
    verdicts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v.holds for v in self.verdicts.values())


def _problem(base, e1, e2) -> AmalgamProblem:
    ident = {e: e for e in base.elements}
    return AmalgamProblem(base, e1, e2, ident, dict(ident))


def _pair_batches(spec, checker, a, exts1, exts2, same):
    """Yield (i, j, free_ok) over ordered pairs, free amalgams checked in numpy batches."""
    k1 = exts1[0].size - a
    k2 = exts2[0].size - a
    n = a + k1 + k2
    idx1 = np.arange(a + k1)
    idx2 = np.concatenate([np.arange(a), np.arange(a + k1, n)]).astype(int)
    d1 = {r: np.stack([dense(e)[r] for e in exts1]) for r in spec.language.relations}
    d2 = d1 if same else {r: np.stack([dense(e)[r] for e in exts2]) for r in spec.language.relations}
    pairs = [(i, j) for i in range(len(exts1)) for j in range(i if same else 0, len(exts2))]
    arities = {r: len(p) for r, p in spec.language.relations.items()}
    width = max([1] + list(arities.values()) + [len(v) for v, _ in checker.parts])
    chunk = max(1, 2_000_000 // n ** width)
    for start in range(0, len(pairs), chunk):
        block = pairs[start:start + chunk]
        I = np.array([p[0] for p in block])
        J = np.array([p[1] for p in block])
        arrays = {}
        for r, k in arities.items():
            arr = np.zeros((len(block),) + (n,) * k, dtype=bool)
            arr[(slice(None),) + np.ix_(*([idx1] * k))] = d1[r][I]
            arr[(slice(None),) + np.ix_(*([idx2] * k))] |= d2[r][J]
            arrays[r] = arr
        ok = checker(arrays, n)
        for (i, j), good in zip(block, ok):
            yield i, j, bool(good)


def check_class_properties(spec: ClassSpec, size_limit: int, properties=PROPERTIES,
                           budget: int | None = None) -> ClassReport:
    """Exhaustive JEP/AP/dAP check over class members of size <= size_limit.

    Amalgam problems range over every base representative A and every pair of
    extensions of A (up to renaming of new points) of total size <= size_limit.
    Witnesses are the first failures in that canonical order.
    """
    require_relational(spec)
    properties = tuple(properties)
    for p in properties:
        if p not in PROPERTIES:
            raise ValueError(f"unknown property {p!r}")
    checker = BatchChecker(spec)
    reps = {k: enumerate_models(spec, k, budget) for k in range(size_limit + 1)}
    report = ClassReport(spec.name, size_limit)
    state = {p: PropertyVerdict(p, True, size_limit) for p in properties}

    def record(prop, problem):
        v = state.get(prop)
        if v is not None and v.holds:
            v.holds = False
            v.witness = problem

    want_ap = "AP" in state or "dAP" in state
    for a in range(size_limit):
        if a > 0 and not want_ap:
            break
        for base in reps[a]:
            exts = {}
            for k in range(1, size_limit - a + 1):
                exts[k] = reps[k] if a == 0 else extensions(spec, base, k)
            for k1 in range(1, size_limit - a + 1):
                for k2 in range(k1, size_limit - a + 1):
                    if not exts[k1] or not exts[k2]:
                        continue
                    active = [p for p in state if state[p].holds and (a == 0 or p != "JEP")]
                    if not active:
                        continue
                    for i, j, free_ok in _pair_batches(spec, checker, a, exts[k1], exts[k2], k1 == k2):
                        for p in active:
                            state[p].checked += 1
                        if free_ok:
                            continue
                        e1, e2 = exts[k1][i], exts[k2][j]
                        disjoint = amalgamate(spec, a, e1, e2, disjoint=True)
                        if disjoint is not None:
                            continue
                        problem = _problem(base, e1, e2)
                        if "dAP" in state:
                            record("dAP", problem)
                        if ("AP" in state and state["AP"].holds) or ("JEP" in state and a == 0):
                            if amalgamate(spec, a, e1, e2, disjoint=False) is None:
                                record("AP", problem)
                                if a == 0:
                                    record("JEP", problem)
    for p in properties:
        report.verdicts[p] = state[p]
    return report


# ---------------------------------------------------------------------------
# One-point extension types


class TypeTable:
    """Codes for one-point extension types over ordered subsets, with caching."""

    def __init__(self, spec: ClassSpec):
        require_relational(spec)
        self.spec = spec
        self._templates: dict = {}
        self._types: dict = {}

    def template(self, k: int) -> tuple:
        """Atoms (rel, positions) over positions 0..k touching position k (the new point)."""
        t = self._templates.get(k)
        if t is None:
            out = []
            for r, profile in self.spec.language.relations.items():
                for pos in itertools.product(range(k + 1), repeat=len(profile)):
                    if k in pos:
                        out.append((r, pos))
            t = self._templates[k] = tuple(out)
        return t

    def base_template(self, k: int) -> tuple:
        out = []
        for r, profile in self.spec.language.relations.items():
            for pos in itertools.product(range(k), repeat=len(profile)):
                out.append((r, pos))
        return tuple(out)

    def code_of(self, model_rels, subset: tuple, d) -> tuple:
        """Type code of element d over the ordered subset."""
        pts = subset + (d,)
        return tuple((tuple(pts[i] for i in pos) in model_rels[r]) for r, pos in self.template(len(subset)))

    def base_code(self, model_rels, subset: tuple) -> tuple:
        return tuple((tuple(subset[i] for i in pos) in model_rels[r]) for r, pos in self.base_template(len(subset)))

    def types(self, model_rels, subset: tuple) -> tuple:
        """All class one-point extension type codes of the induced structure on ``subset``."""
        key = (len(subset), self.base_code(model_rels, subset))
        found = self._types.get(key)
        if found is None:
            k = len(subset)
            rels = {r: {tuple(subset.index(x) for x in t) for t in ts if all(x in subset for x in t)}
                    for r, ts in model_rels.items()}
            base = _structure(self.spec, k, rels)
            exts = extensions(self.spec, base, 1, canonical=False)
            found = tuple(sorted({self.code_of(e.relations, tuple(range(k)), k) for e in exts}))
            self._types[key] = found
        return found

    def atoms_for(self, subset: tuple, d, code) -> dict:
        pts = subset + (d,)
        return {(r, tuple(pts[i] for i in pos)): bit for (r, pos), bit in zip(self.template(len(subset)), code)}


# ---------------------------------------------------------------------------
# Extension-axiom audit


@dataclass
class ExtensionReport:
    satisfied: bool
    ext_size: int
    checked: int
    missing: list  # (subset tuple, type code, literal description)


def _describe_type(table: TypeTable, subset, code) -> str:
    lits = []
    for (r, pos), bit in zip(table.template(len(subset)), code):
        names = ["*" if i == len(subset) else element_name(subset[i]) for i in pos]
        lits.append(("" if bit else "!") + f"{r}({','.join(names)})")
    return " & ".join(lits) if lits else "new point"


def check_extension_axioms(model: FiniteStructure, spec: ClassSpec, ext_size: int,
                           table: TypeTable | None = None) -> ExtensionReport:
    """For every subset A with |A| <= ext_size and every one-point class extension type of A,
    is there a realization in the model?"""
    require_relational(spec)
    table = table or TypeTable(spec)
    rels = model.relations
    elems = model.universe
    missing = []
    checked = 0
    for k in range(ext_size + 1):
        for subset in itertools.combinations(elems, k):
            realized = {table.code_of(rels, subset, d) for d in elems if d not in subset}
            for code in table.types(rels, subset):
                checked += 1
                if code not in realized:
                    missing.append((subset, code, _describe_type(table, subset, code)))
    return ExtensionReport(not missing, ext_size, checked, missing)


# ---------------------------------------------------------------------------
# Generic build


@dataclass(frozen=True)
class BuildStep:
    index: int
    subset: tuple
    type_code: tuple
    element: int
    atoms: tuple  # true atoms touching the new element


@dataclass
class GenericModel:
    structure: FiniteStructure
    class_spec: ClassSpec
    log: list
    seed: int
    ext_size: int
    budget: int
    completion: str
    pending: int  # unrealized requirements left when the build stopped
    quiescent: bool


def build_generic(spec: ClassSpec, budget: int = 32, ext_size: int = 2, seed: int = 0,
                  completion: str = "greedy", precheck: bool = True, debug: bool = False,
                  lookahead: int = 4000) -> GenericModel:
    """Saturate one-point extension requirements in FIFO order.

    A requirement is an ordered subset A (|A| <= ext_size) of the current model
    with a one-point class extension type of A.  The head requirement that is
    not yet realized gets a new point.  Atoms between the new point and
    elements outside A are completed by ``completion``:

    * ``minimal``: false unless forced by the axioms;
    * ``random``: seeded coin flips, repaired by propagation;
    * ``greedy``: prefer values that also realize later queued requirements,
      remaining atoms by seeded coin flips.
    """
    require_relational(spec)
    if budget < 1:
        raise PreconditionError("budget must be at least 1")
    if completion not in ("minimal", "random", "greedy"):
        raise ValueError(f"unknown completion {completion!r}")
    if precheck:
        rep = check_class_properties(spec, ext_size + 1, ("AP",))
        if not rep.verdicts["AP"].holds:
            raise PreconditionError(f"{spec.name} fails AP up to size {ext_size + 1}")
    rng = random.Random(seed)
    table = TypeTable(spec)
    rels = {r: set() for r in spec.language.relations}
    n = 0
    queue: deque = deque()
    realized: set = set()
    log: list = []

    def enqueue_subsets_with(c):
        for k in range(0, ext_size):
            for rest in itertools.combinations(range(c), k):
                subset = rest + (c,)
                for code in table.types(rels, subset):
                    queue.append((subset, code))
                for d in range(n):
                    if d not in subset:
                        realized.add((subset, table.code_of(rels, subset, d)))

    def mark_realized_by(c):
        for k in range(0, ext_size + 1):
            for subset in itertools.combinations(range(c), k):
                realized.add((subset, table.code_of(rels, subset, c)))

    for code in table.types(rels, ()):
        queue.append(((), code))
    quiescent = False
    while True:
        while queue and queue[0] in realized:
            queue.popleft()
        if not queue:
            quiescent = True
            break
        if n >= budget:
            break
        subset, code = queue.popleft()
        c = n
        fixed = table.atoms_for(subset, c, code)
        carriers = {_sort(spec): tuple(range(c + 1))}

        def known(r, t, fixed=fixed):
            if c not in t:
                return t in rels[r]
            return fixed.get((r, t))

        g = Grounding(spec.language, carriers, spec.compiled, known, {c})
        if g.sat.unsat:
            raise ClassViolation(f"requirement over {subset} cannot be realized", None, None)
        preferred = {}
        if completion == "greedy":
            scanned = 0
            for sub2, code2 in queue:
                if scanned >= lookahead:
                    break
                scanned += 1
                if (sub2, code2) in realized:
                    continue
                want = table.atoms_for(sub2, c, code2)
                if any(preferred.get(key, val) != val or fixed.get(key, val) != val for key, val in want.items()):
                    continue
                preferred.update(want)
        pol = g.polarity_from(preferred, rng if completion != "minimal" else None)
        sol = g.solve(pol)
        if sol is None:
            raise ClassViolation(f"no class completion for requirement over {subset}", None, None)
        atoms = dict(fixed)
        atoms.update(sol)
        true_atoms = tuple(sorted(((r, t) for (r, t), v in atoms.items() if v), key=repr))
        for r, t in true_atoms:
            rels[r].add(t)
        n += 1
        log.append(BuildStep(len(log), subset, code, c, true_atoms))
        mark_realized_by(c)
        enqueue_subsets_with(c)
        if debug:
            M = _structure(spec, n, rels)
            v = spec.violation(M, {c})
            if v is not None:
                raise ClassViolation(f"step {len(log)} left the class: {to_text(v[0])}", v[0], v[1])
    M = _structure(spec, n, rels)
    pending = sum(1 for item in set(queue) if item not in realized)
    return GenericModel(M, spec, log, seed, ext_size, budget, completion, pending, quiescent)


def replay_build(spec: ClassSpec, log: list) -> FiniteStructure:
    """Rebuild a generic model from its log, checking class membership at every step."""
    rels = {r: set() for r in spec.language.relations}
    for step in log:
        if step.element != step.index:
            raise StructureError("log steps must add elements 0, 1, 2, ... in order")
        for r, t in step.atoms:
            rels[r].add(tuple(t))
        M = _structure(spec, step.element + 1, rels)
        v = spec.violation(M, {step.element})
        if v is not None:
            raise ClassViolation(f"replay step {step.index} violates {to_text(v[0])}", v[0], v[1])
    return _structure(spec, len(log), rels)


# ---------------------------------------------------------------------------
# Fraisse expansions


@dataclass
class ExpansionVerdict:
    verified: bool
    size_limit: int
    condition: str | None = None  # which condition failed
    witness: object = None
    checked: int = 0

    @property
    def label(self) -> str:
        return f"verified-up-to-size {self.size_limit}" if self.verified else f"fails ({self.condition})"


def lift_to_expansion(expansion: ClassSpec, base_structure: FiniteStructure, fixed_expansion=None,
                      focus=None):
    """Expansion of ``base_structure`` into the expansion class, agreeing with ``fixed_expansion``
    on its elements; None if impossible."""
    lang = expansion.language
    base_rels = base_structure.relations
    extra = {r for r in lang.relations if r not in base_rels}
    fixed_elems = set(fixed_expansion.elements) if fixed_expansion is not None else set()

    def known(r, t):
        if r not in extra:
            return t in base_rels[r]
        if fixed_expansion is not None and all(x in fixed_elems for x in t):
            return t in fixed_expansion.relations[r]
        return None

    carriers = dict(base_structure.carriers)
    g = Grounding(lang, carriers, expansion.compiled, known, focus)
    sol = g.solve()
    if sol is None:
        return None
    rels = {r: set(base_rels[r]) if r in base_rels else set() for r in lang.relations}
    if fixed_expansion is not None:
        for r in extra:
            rels[r] |= set(fixed_expansion.relations[r])
    for (r, t), v in sol.items():
        if v:
            rels[r].add(t)
    return FiniteStructure(lang, carriers, rels, {}, {})


def check_fraisse_expansion(base: ClassSpec, expansion: ClassSpec, size_limit: int,
                            budget: int | None = None) -> ExpansionVerdict:
    """Reducts of expansion members are exactly base members, and one-point base
    extensions of reducts lift, checked up to ``size_limit``."""
    require_relational(base)
    require_relational(expansion)
    if not base.language.issubset(expansion.language) or base.language.sorts != expansion.language.sorts:
        raise LanguageError("expansion language must extend the base language with the same sorts")
    checked = 0
    for k in range(size_limit + 1):
        for M in enumerate_models(expansion, k, budget):
            checked += 1
            red = M.reduct(base.language)
            v = base.violation(red)
            if v is not None:
                return ExpansionVerdict(False, size_limit, "reduct-in-base", (M, to_text(v[0])), checked)
        for B in enumerate_models(base, k, budget):
            checked += 1
            if lift_to_expansion(expansion, B) is None:
                return ExpansionVerdict(False, size_limit, "base-member-expands", B, checked)
    for k in range(size_limit):
        for M in enumerate_models(expansion, k, budget):
            red = M.reduct(base.language)
            for B in extensions(base, red, 1, canonical=False):
                checked += 1
                if lift_to_expansion(expansion, B, M, {k}) is None:
                    return ExpansionVerdict(False, size_limit, "one-point-lift", (M, B), checked)
    return ExpansionVerdict(True, size_limit, None, None, checked)


# ---------------------------------------------------------------------------
# Joint types over a shared reduct


@dataclass(frozen=True)
class FamilyConfig:
    """A language family with one class per member and the free-amalgamation declaration."""

    family: LanguageFamily
    classes: Mapping
    free_amalgamation: bool = True
    name: str = "family"

    def __post_init__(self):
        for i in self.family.indices:
            if i not in self.classes:
                raise LanguageError(f"no class for member {i}")
            if self.classes[i].language != self.family[i]:
                raise LanguageError(f"class for member {i} is over a different language")

    def union_class(self) -> ClassSpec:
        axioms = []
        for i in self.family.indices:
            for a in self.classes[i].all_axioms:
                if a not in axioms:
                    axioms.append(a)
        return ClassSpec(self.family.union, axioms, name=f"{self.name}-union")


@dataclass(frozen=True)
class QfType:
    """Complete quantifier-free type of a new point over ``base`` in one member language.

    Literals are FlatLiterals whose arguments are base elements or ``point``.
    """

    base: tuple
    point: object
    index: object
    literals: frozenset

    def restricted(self, symbols) -> frozenset:
        return frozenset(l for l in self.literals if l.symbol in symbols)

    def sorted_literals(self) -> list:
        return sorted(self.literals, key=lambda l: (l.symbol, tuple(map(repr, l.args)), l.positive))


def type_atoms(language, base: tuple, point) -> list:
    """All relational atoms over base+point touching the point."""
    pts = tuple(base) + (point,)
    out = []
    for r, profile in language.relations.items():
        for t in itertools.product(pts, repeat=len(profile)):
            if point in t:
                out.append((r, t))
    return out


def make_qftype(model: FiniteStructure, base, point, index, truth: Mapping, config: FamilyConfig) -> QfType:
    """Build a complete type from ``truth`` (atom -> bool) and check it is consistent with member class ``index``."""
    lang = config.family[index]
    base = tuple(base)
    if point in model:
        raise StructureError("the new point must not be an element of the model")
    lits = []
    for r, t in type_atoms(lang, base, point):
        if (r, t) not in truth:
            raise StructureError(f"type misses atom {r}{t}")
        lits.append(FlatLiteral(bool(truth[(r, t)]), r, t))
    qt = QfType(base, point, index, frozenset(lits))
    sub = model.induced(base).reduct(lang) if base else None
    spec = config.classes[index]
    rels = {r: set(sub.relations[r]) if sub is not None else set() for r in lang.relations}
    for l in lits:
        if l.positive:
            rels[l.symbol].add(l.args)
    carrier = {lang.sorts[0]: base + (point,)}
    M = FiniteStructure(lang, carrier, rels, {}, {})
    v = spec.violation(M)
    if v is not None:
        raise ClassViolation(f"type for member {index} is inconsistent with {spec.name}: {to_text(v[0])}",
                             v[0], v[1])
    return qt


def find_clash(types: Mapping, family: LanguageFamily):
    """First literal (in index and literal order) where two types disagree on the shared language."""
    shared = family.intersection.symbols
    idx = sorted(types)
    for a, b in itertools.combinations(idx, 2):
        ra, rb = types[a].restricted(shared), types[b].restricted(shared)
        for lit in sorted(ra, key=lambda l: (l.symbol, tuple(map(repr, l.args)), l.positive)):
            if lit not in rb:
                return lit, (a, b)
        for lit in sorted(rb, key=lambda l: (l.symbol, tuple(map(repr, l.args)), l.positive)):
            if lit not in ra:
                return lit.negate(), (a, b)
    return None


def realize_joint_type(model: FiniteStructure, types: Mapping, config: FamilyConfig) -> FiniteStructure:
    """Adjoin one point realizing every member type; no other new relations unless forced."""
    if not config.free_amalgamation:
        raise PreconditionError("joint realization requires the free-amalgamation declaration")
    family = config.family
    if model.language != family.union:
        raise LanguageError("model must be over the union language")
    if set(types) - set(family.indices):
        raise LanguageError("types indexed outside the family")
    bases = {tuple(t.base) for t in types.values()}
    points = {t.point for t in types.values()}
    if len(bases) > 1 or len(points) > 1:
        raise StructureError("all types must share one base and one new point")
    clash = find_clash(types, family)
    if clash is not None:
        lit, members = clash
        raise TypeClashError(f"members {members[0]} and {members[1]} disagree on {lit}", lit, members)
    base = bases.pop() if bases else ()
    point = points.pop() if points else None
    if point is None:
        raise StructureError("no types given")
    if point in model:
        raise StructureError("the new point must be fresh")
    fixed = {}
    for t in types.values():
        for l in t.literals:
            if l.kind != "rel":
                continue
            fixed[(l.symbol, tuple(l.args))] = l.positive
    carriers = {s: tuple(c) + ((point,) if s == model.language.sorts[0] else ()) for s, c in model.carriers.items()}
    spec = config.union_class()

    def known(r, t):
        if point not in t:
            return t in model.relations[r]
        return fixed.get((r, t))

    g = Grounding(spec.language, carriers, spec.compiled, known, {point})
    sol = g.solve() if not g.sat.unsat else None
    if sol is None:
        formula, env = g.conflict if g.conflict else (None, None)
        raise ClassViolation("joint type cannot be realized inside the member classes"
                             + (f": {to_text(formula)}" if formula is not None else ""), formula, env)
    rels = {r: set(ts) for r, ts in model.relations.items()}
    for key, v in list(fixed.items()) + list(sol.items()):
        if v:
            rels[key[0]].add(key[1])
    out = FiniteStructure(model.language, carriers, rels, {}, {})
    for i in family.indices:
        red = out.reduct(family[i])
        v = config.classes[i].violation(red)
        if v is not None:
            raise ClassViolation(f"member {i} reduct violates {to_text(v[0])}", v[0], v[1])
    return out


def henson_types(model: FiniteStructure, A, B, point, config: FamilyConfig) -> dict:
    """Types for the triangle-free extension step: adjacent to A via both graphs, nothing else;
    hyperedges exactly on E1-triangles with two points of A."""
    A, B = tuple(A), tuple(B)
    base = A + tuple(b for b in B if b not in A)
    types = {}
    for i, e in ((1, "E1"), (2, "E2")):
        lang = config.family[i]
        truth = {}
        for r, t in type_atoms(lang, base, point):
            if r == e:
                other = t[1] if t[0] == point else t[0]
                truth[(r, t)] = t.count(point) == 1 and other in A
            else:
                others = [x for x in t if x != point]
                val = (t.count(point) == 1 and len(set(others)) == 2 and all(x in A for x in others)
                       and (others[0], others[1]) in model.relations["E1"])
                truth[(r, t)] = val
        types[i] = make_qftype(model, base, point, i, truth, config)
    return types

"""Ground search: universal axioms become clauses over unknown relation atoms.

Every constructive question the workbench asks (enumerate class members,
extend a structure by new points, amalgamate, lift to an expansion) has the
same shape: some atoms are known, the rest are boolean unknowns, and the
class axioms restricted to instances touching the unknown region are
clauses.  A small DPLL solver with unit propagation answers it.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

from .errors import BudgetExceeded, FusionLabError
from .logic import And, App, Atom, Const, Eq, Formula, Iff, Implies, Not, Or, Var, universal_parts

# ---------------------------------------------------------------------------
# SAT core


class SatProblem:
    """Clauses over variables 0..n-1; literal ``v+1`` is true, ``-(v+1)`` false."""

    def __init__(self, nvars: int = 0):
        self.nvars = nvars
        self.clauses: list = []
        self.unsat = False

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars - 1

    def add_clause(self, lits: Iterable[int]) -> None:
        lits = tuple(dict.fromkeys(lits))
        if any(-l in lits for l in lits):
            return
        if not lits:
            self.unsat = True
        self.clauses.append(lits)


def solutions(problem: SatProblem, polarity: Callable[[int], bool] | None = None,
              limit: int | None = None) -> Iterator[list]:
    """Enumerate satisfying assignments (lists of bools) by DPLL.

    Variables are decided in index order with value ``polarity(v)`` first
    (default False).  Every variable, constrained or not, is assigned.
    """
    if problem.unsat:
        return
    n = problem.nvars
    clauses = problem.clauses
    occ_false: list = [[] for _ in range(n)]  # clauses containing literal -(v+1)
    occ_true: list = [[] for _ in range(n)]  # clauses containing literal v+1
    units = []
    for ci, c in enumerate(clauses):
        if len(c) == 1:
            units.append(c[0])
        for l in c:
            (occ_true if l > 0 else occ_false)[abs(l) - 1].append(ci)
    assign: list = [None] * n
    trail: list = []
    polarity = polarity or (lambda v: False)

    def set_lit(l):
        v = abs(l) - 1
        want = l > 0
        if assign[v] is None:
            assign[v] = want
            trail.append(v)
            return True
        return assign[v] == want

    def propagate(start):
        i = start
        while i < len(trail):
            v = trail[i]
            i += 1
            falsified = occ_false[v] if assign[v] else occ_true[v]
            for ci in falsified:
                unassigned = None
                count = 0
                sat = False
                for l in clauses[ci]:
                    a = assign[abs(l) - 1]
                    if a is None:
                        count += 1
                        unassigned = l
                        if count > 1:
                            break
                    elif a == (l > 0):
                        sat = True
                        break
                if sat or count > 1:
                    continue
                if count == 0:
                    return False
                set_lit(unassigned)
        return True

    for l in units:
        if not set_lit(l):
            return
    if not propagate(0):
        return
    decisions: list = []  # (trail mark, position, var, flipped)
    pos = 0
    found = 0
    while True:
        while pos < n and assign[pos] is not None:
            pos += 1
        conflict = False
        if pos == n:
            yield list(assign)
            found += 1
            if limit is not None and found >= limit:
                return
            conflict = True
        else:
            mark = len(trail)
            value = bool(polarity(pos))
            decisions.append((mark, pos, value, False))
            assign[pos] = value
            trail.append(pos)
            conflict = not propagate(mark)
        while conflict:
            if not decisions:
                return
            mark, p, value, flipped = decisions.pop()
            for v in trail[mark:]:
                assign[v] = None
            del trail[mark:]
            if flipped:
                continue
            decisions.append((mark, p, not value, True))
            assign[p] = not value
            trail.append(p)
            pos = p
            conflict = not propagate(mark)
        pos = decisions[-1][1] if decisions else 0


def solve(problem: SatProblem, polarity=None):
    return next(solutions(problem, polarity, limit=1), None)


# ---------------------------------------------------------------------------
# Clause compilation of universal axioms


def _nnf(f: Formula, positive: bool = True) -> Formula:
    if isinstance(f, (Eq, Atom)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return And(parts) if positive else Or(parts)
    if isinstance(f, Or):
        parts = tuple(_nnf(a, positive) for a in f.args)
        return Or(parts) if positive else And(parts)
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, Iff):
        return _nnf(And((Implies(f.left, f.right), Implies(f.right, f.left))), positive)
    raise FusionLabError(f"quantifier inside a universal matrix: {f!r}")


def cnf_clauses(matrix: Formula) -> list:
    """CNF of a quantifier-free formula as a list of clauses of (sign, atom)."""

    def go(f):
        if isinstance(f, Not):
            return [[(False, f.arg)]]
        if isinstance(f, (Eq, Atom)):
            return [[(True, f)]]
        if isinstance(f, And):
            out = []
            for a in f.args:
                out.extend(go(a))
            return out
        # Or: distribute
        result = [[]]
        for a in f.args:
            sub = go(a)
            result = [c + d for c in result for d in sub]
        return result

    clauses = []
    for c in go(_nnf(matrix)):
        lits = list(dict.fromkeys(c))
        if any((not s, a) in lits for s, a in lits):
            continue
        clauses.append(tuple(lits))
    return clauses


def _term_fn(t, index):
    if isinstance(t, Var):
        i = index[t]
        return lambda env, M: env[i]
    if isinstance(t, Const):
        return lambda env, M: M.constants[t.name]
    subs = [_term_fn(a, index) for a in t.args]
    return lambda env, M: M.functions[t.func][tuple(s(env, M) for s in subs)]


@dataclass(frozen=True)
class CompiledAxiom:
    """A universal sentence as variables plus clause templates."""

    formula: Formula
    variables: tuple
    clauses: tuple  # each clause: tuple of (sign, kind, payload)

    @classmethod
    def build(cls, formula: Formula) -> "CompiledAxiom":
        parts = universal_parts(formula)
        if parts is None:
            raise FusionLabError(f"axiom is not universal: {formula}")
        variables, matrix = parts
        index = {v: i for i, v in enumerate(variables)}
        templates = []
        for clause in cnf_clauses(matrix):
            lits = []
            for sign, atom in clause:
                if isinstance(atom, Eq):
                    if isinstance(atom.left, Var) and isinstance(atom.right, Var):
                        lits.append((sign, "eqv", (index[atom.left], index[atom.right])))
                    else:
                        lits.append((sign, "eqt", (_term_fn(atom.left, index), _term_fn(atom.right, index))))
                elif all(isinstance(a, Var) for a in atom.args):
                    lits.append((sign, "relv", (atom.rel, tuple(index[a] for a in atom.args))))
                else:
                    lits.append((sign, "relt", (atom.rel, tuple(_term_fn(a, index) for a in atom.args))))
            templates.append(tuple(lits))
        return cls(formula, tuple(variables), tuple(templates))


def focus_assignments(pools: list, focus: set | None) -> Iterator[tuple]:
    """All tuples from ``pools`` with at least one entry in ``focus`` (all tuples if focus is None)."""
    if focus is None:
        yield from itertools.product(*pools)
        return
    m = len(pools)
    for first in range(m):
        parts = []
        for j, pool in enumerate(pools):
            if j < first:
                parts.append([e for e in pool if e not in focus])
            elif j == first:
                parts.append([e for e in pool if e in focus])
            else:
                parts.append(pool)
        yield from itertools.product(*parts)


class _Shell:
    """Just enough of a structure for term evaluation during grounding."""

    def __init__(self, functions, constants):
        self.functions = functions
        self.constants = constants


class Grounding:
    """Ground clause problem over the unknown atoms of a partially known structure.

    ``known(rel, tuple)`` returns True/False for determined atoms and None for
    unknowns; unknown atoms must touch ``focus``.  Functions and constants are
    fixed.  Only axiom instances touching ``focus`` are generated: the caller
    vouches that the focus-free part already satisfies the axioms.
    """

    def __init__(self, language, carriers: Mapping, axioms: Iterable[CompiledAxiom], known: Callable,
                 focus: set | None, functions: Mapping | None = None, constants: Mapping | None = None,
                 extra_unknowns: Iterable = ()):
        self.language = language
        self.carriers = {s: tuple(c) for s, c in carriers.items()}
        self.focus = focus
        self.known = known
        self.shell = _Shell(functions or {}, constants or {})
        self.sat = SatProblem()
        self.atoms: list = []
        self.index: dict = {}
        self.conflict = None
        # enumerate every unknown atom so that unconstrained ones are also decided
        for rel, profile in language.relations.items():
            pools = [self.carriers[s] for s in profile]
            for t in focus_assignments(pools, focus):
                if known(rel, t) is None:
                    self._var((rel, t))
        for key in extra_unknowns:
            self._var(key)
        for ax in axioms:
            self._ground(ax)
            if self.sat.unsat:
                break

    def _var(self, key):
        v = self.index.get(key)
        if v is None:
            v = self.index[key] = self.sat.new_var()
            self.atoms.append(key)
        return v

    def value(self, rel, t):
        val = self.known(rel, t)
        if val is None:
            if (rel, t) not in self.index:
                raise FusionLabError(f"atom {rel}{t} is neither known nor unknown")
        return val

    def _ground(self, ax: CompiledAxiom):
        pools = [self.carriers[v.sort] for v in ax.variables]
        shell = self.shell
        known = self.known
        index = self.index
        for env in focus_assignments(pools, self.focus):
            for clause in ax.clauses:
                lits = []
                satisfied = False
                for sign, kind, payload in clause:
                    if kind == "eqv":
                        val = env[payload[0]] == env[payload[1]]
                    elif kind == "eqt":
                        val = payload[0](env, shell) == payload[1](env, shell)
                    else:
                        rel, args = payload
                        t = tuple(env[i] for i in args) if kind == "relv" else tuple(a(env, shell) for a in args)
                        val = known(rel, t)
                        if val is None:
                            v = index.get((rel, t))
                            if v is None:
                                raise FusionLabError(f"atom {rel}{t} is neither known nor unknown")
                            lits.append(v + 1 if sign else -(v + 1))
                            continue
                    if val == sign:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not lits:
                    self.conflict = (ax.formula, dict(zip(ax.variables, env)))
                    self.sat.unsat = True
                    return
                self.sat.add_clause(lits)

    # -- solving --------------------------------------------------------
    def solutions(self, polarity=None, limit=None) -> Iterator[dict]:
        for sol in solutions(self.sat, polarity, limit):
            yield {key: val for key, val in zip(self.atoms, sol)}

    def solve(self, polarity=None):
        return next(self.solutions(polarity, 1), None)

    def polarity_from(self, preferred: Mapping | None = None, rng: random.Random | None = None,
                      default: bool = False):
        """Value order: ``preferred`` atoms first, then random (if rng) or ``default``."""
        atoms = self.atoms
        preferred = preferred or {}
        if rng is not None:
            coin = [rng.random() < 0.5 for _ in atoms]
        else:
            coin = None

        def pol(v):
            key = atoms[v]
            if key in preferred:
                return preferred[key]
            return coin[v] if coin is not None else default

        return pol

    def add_unit(self, key, value: bool):
        v = self.index[key]
        self.sat.add_clause([v + 1 if value else -(v + 1)])


def budget_guard(limit: int):
    """Counter raising BudgetExceeded after ``limit`` ticks."""
    state = {"n": 0}

    def tick(k=1):
        state["n"] += k
        if state["n"] > limit:
            raise BudgetExceeded(f"enumeration budget of {limit} labeled structures exceeded")

    return tick

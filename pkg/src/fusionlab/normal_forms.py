"""Flat literals, E-flat disjunctions, language splitting, diagrams, Morleyization, boundedness."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .classes import ClassSpec, enumerate_models
from .errors import BudgetExceeded, FusionLabError, LanguageError
from .logic import (
    And, App, Atom, Const, Eq, Exists, Forall, Formula, FreshVars, Iff, Implies, Language,
    LanguageFamily, Not, Or, Var, classify_formula, conj, free_vars, is_quantifier_free, substitute,
    symbols_of, term_sort, to_text,
)
from .structures import FiniteStructure, compiled, element_name

DEFAULT_LITERAL_BUDGET = 512


# ---------------------------------------------------------------------------
# Flat literals


@dataclass(frozen=True)
class FlatLiteral:
    """``x=y``, ``R(x..)``, ``f(x..)=y`` or a negation; arguments are Var or Const.

    Equality uses symbol ``"="`` with ``args=(x, y)``.  A constant symbol ``c``
    occurs as the nullary function literal ``c=y`` (``args=()``).
    """

    positive: bool
    symbol: str
    args: tuple
    value: object = None

    @property
    def kind(self) -> str:
        if self.symbol == "=":
            return "eq"
        return "rel" if self.value is None else "fun"

    def negate(self) -> "FlatLiteral":
        return FlatLiteral(not self.positive, self.symbol, self.args, self.value)

    def symbols(self) -> frozenset:
        return frozenset() if self.symbol == "=" else frozenset({self.symbol})

    def to_formula(self, language: Language | None = None) -> Formula:
        if self.kind == "eq":
            atom = Eq(*self.args)
        elif self.kind == "rel":
            atom = Atom(self.symbol, self.args)
        else:
            is_const = self.symbol in language.constants if language is not None else not self.args
            head = Const(self.symbol) if is_const else App(self.symbol, self.args)
            atom = Eq(head, self.value)
        return atom if self.positive else Not(atom)

    def __str__(self):
        if self.kind == "eq":
            body = f"{self.args[0]}={self.args[1]}"
        elif self.kind == "rel":
            body = f"{self.symbol}({','.join(map(str, self.args))})" if self.args else self.symbol
        else:
            head = f"{self.symbol}({','.join(map(str, self.args))})" if self.args else self.symbol
            body = f"{head}={self.value}"
        return body if self.positive else "!" + body

    __repr__ = __str__


def literal_from_formula(f: Formula, language: Language) -> FlatLiteral:
    """Recognize a flat (negated) atom; raises if the atom is nested."""
    positive = True
    if isinstance(f, Not):
        positive, f = False, f.arg
    if isinstance(f, Atom) and all(isinstance(a, Var) for a in f.args):
        return FlatLiteral(positive, f.rel, f.args)
    if isinstance(f, Eq):
        l, r = f.left, f.right
        if isinstance(l, Var) and isinstance(r, Var):
            return FlatLiteral(positive, "=", (l, r))
        for head, val in ((l, r), (r, l)):
            if isinstance(val, Var):
                if isinstance(head, Const):
                    return FlatLiteral(positive, head.name, (), val)
                if isinstance(head, App) and all(isinstance(a, Var) for a in head.args):
                    return FlatLiteral(positive, head.func, head.args, val)
    raise FusionLabError(f"not a flat literal: {to_text(f)}")


@dataclass(frozen=True)
class EFlatFormula:
    """``exists witnesses: body`` with a flat conjunctive body and unique witnesses."""

    witnesses: tuple
    body: tuple
    language: Language | None = field(default=None, compare=False)

    def to_formula(self) -> Formula:
        matrix = conj(*(l.to_formula(self.language) for l in self.body))
        return Exists(self.witnesses, matrix) if self.witnesses else matrix

    @property
    def free(self) -> tuple:
        return tuple(v for v in free_vars(self.to_formula()))

    def __str__(self):
        return to_text(self.to_formula(), self.language)


def _nnf(f: Formula, positive=True):
    if isinstance(f, (Eq, Atom)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, (And, Or)):
        parts = tuple(_nnf(a, positive) for a in f.args)
        same = isinstance(f, And) == positive
        return And(parts) if same else Or(parts)
    if isinstance(f, Implies):
        return _nnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, Iff):
        both = And((f.left, f.right))
        neither = And((Not(f.left), Not(f.right)))
        return _nnf(Or((both, neither)), positive)
    raise FusionLabError("quantifier in a quantifier-free position")


def _dnf(f: Formula, budget: int) -> list:
    """List of conjunctions (tuples of literals) for an NNF formula."""

    def size(d):
        return sum(len(c) for c in d)

    if isinstance(f, Or):
        out = []
        for a in f.args:
            out.extend(_dnf(a, budget))
            if size(out) > budget:
                raise BudgetExceeded(f"DNF exceeds the literal budget of {budget}")
        return out
    if isinstance(f, And):
        out = [()]
        for a in f.args:
            sub = _dnf(a, budget)
            out = [c + d for c in out for d in sub]
            if size(out) > budget:
                raise BudgetExceeded(f"DNF exceeds the literal budget of {budget}")
        return out
    return [(f,)]


def flatten_to_eflat(formula: Formula, language: Language,
                     literal_budget: int = DEFAULT_LITERAL_BUDGET) -> list:
    """Finite list of E-flat formulas whose disjunction is equivalent to ``formula``.

    Terms are unnested bottom-up, one witness per distinct non-variable subterm
    within a disjunct; the witnesses of a disjunct share one existential prefix.
    """
    if not is_quantifier_free(formula):
        raise FusionLabError("flatten_to_eflat needs a quantifier-free formula")
    fresh = FreshVars()
    disjuncts = []
    for conjunction in _dnf(_nnf(formula), literal_budget):
        memo: dict = {}
        defs: list = []
        witnesses: list = []

        def name(t):
            if isinstance(t, Var):
                return t
            if t in memo:
                return memo[t]
            if isinstance(t, Const):
                args, head = (), t.name
            else:
                args, head = tuple(name(a) for a in t.args), t.func
            w = fresh(term_sort(t, language))
            memo[t] = w
            witnesses.append(w)
            defs.append(FlatLiteral(True, head, args, w))
            return w

        body = []
        for lit in conjunction:
            positive = not isinstance(lit, Not)
            atom = lit if positive else lit.arg
            if isinstance(atom, Atom):
                body.append(FlatLiteral(positive, atom.rel, tuple(name(a) for a in atom.args)))
                continue
            l, r = atom.left, atom.right
            if isinstance(r, Var) and not isinstance(l, Var):
                head_args = () if isinstance(l, Const) else tuple(name(a) for a in l.args)
                head = l.name if isinstance(l, Const) else l.func
                body.append(FlatLiteral(positive, head, head_args, r))
            elif isinstance(l, Var) and not isinstance(r, Var):
                head_args = () if isinstance(r, Const) else tuple(name(a) for a in r.args)
                head = r.name if isinstance(r, Const) else r.func
                body.append(FlatLiteral(positive, head, head_args, l))
            else:
                body.append(FlatLiteral(positive, "=", (name(l), name(r))))
        seen = []
        for lit in defs + body:
            if lit not in seen:
                seen.append(lit)
        disjuncts.append(EFlatFormula(tuple(witnesses), tuple(seen), language))
    return disjuncts


def eflat_disjunction(disjuncts: list) -> Formula:
    from .logic import disj
    return disj(*(d.to_formula() for d in disjuncts))


def unique_witness_violation(d: EFlatFormula, structure: FiniteStructure):
    """An assignment to the free variables with two witness tuples, or None."""
    if not d.witnesses:
        return None
    matrix = conj(*(l.to_formula(d.language) for l in d.body))
    xs = [v for v in free_vars(matrix) if v not in d.witnesses]
    ws = list(d.witnesses)
    # each literal is tested as soon as its last witness is placed
    stage = {i: [] for i in range(len(ws) + 1)}
    for lit in d.body:
        vs = [a for a in (*lit.args, lit.value) if isinstance(a, Var)]
        stage[max([ws.index(v) + 1 for v in vs if v in ws], default=0)].append(lit)

    def count(i, env, limit):
        if not all(_lit_holds(structure, l, env) for l in stage[i]):
            return 0
        if i == len(ws):
            return 1
        total = 0
        for val in structure.carriers[ws[i].sort]:
            env[ws[i]] = val
            total += count(i + 1, env, limit - total)
            if total >= limit:
                break
        env.pop(ws[i], None)
        return total

    for xvals in itertools.product(*(structure.carriers[v.sort] for v in xs)):
        if count(0, dict(zip(xs, xvals)), 2) > 1:
            return dict(zip(xs, xvals))
    return None


def _lit_holds(M: FiniteStructure, lit: FlatLiteral, env) -> bool:
    def val(t):
        return M.constants[t.name] if isinstance(t, Const) else env[t]

    if lit.kind == "eq":
        ok = val(lit.args[0]) == val(lit.args[1])
    elif lit.kind == "rel":
        ok = tuple(val(a) for a in lit.args) in M.relations[lit.symbol]
    elif lit.symbol in M.constants and not lit.args:
        ok = M.constants[lit.symbol] == val(lit.value)
    else:
        ok = M.functions[lit.symbol][tuple(val(a) for a in lit.args)] == val(lit.value)
    return ok == lit.positive


# ---------------------------------------------------------------------------
# Splitting


def split_flat_by_language(flat: Iterable[FlatLiteral], family: LanguageFamily) -> dict:
    """Assign each literal to the least member index whose language contains it."""
    parts: dict = {}
    for lit in flat:
        homes = [i for i in family.indices if lit.symbols() <= family[i].symbols]
        if not homes:
            raise LanguageError(f"literal {lit} lies in no member language")
        parts.setdefault(homes[0], []).append(lit)
    return {i: tuple(parts[i]) for i in sorted(parts)}


# ---------------------------------------------------------------------------
# Flat diagrams


def flat_diagram(structure: FiniteStructure, names: Mapping | None = None) -> tuple:
    """All flat literal sentences true in ``structure``, elements named by constants."""
    names = dict(names or {})
    nm = {e: Const(names.get(e, element_name(e))) for e in structure.elements}
    lang = structure.language
    out = []
    for s in lang.sorts:
        for a in structure.carriers[s]:
            for b in structure.carriers[s]:
                out.append(FlatLiteral(a == b, "=", (nm[a], nm[b])))
    for r, profile in lang.relations.items():
        for t in itertools.product(*(structure.carriers[s] for s in profile)):
            out.append(FlatLiteral(t in structure.relations[r], r, tuple(nm[x] for x in t)))
    for f, (args, result) in lang.functions.items():
        for k, v in structure.functions[f].items():
            for y in structure.carriers[result]:
                out.append(FlatLiteral(v == y, f, tuple(nm[x] for x in k), nm[y]))
    for c, s in lang.constants.items():
        for y in structure.carriers[s]:
            out.append(FlatLiteral(structure.constants[c] == y, c, (), nm[y]))
    return tuple(out)


def diagram_satisfied(diagram: Iterable[FlatLiteral], host: FiniteStructure, naming: Mapping) -> bool:
    """Does ``host`` satisfy every literal when constant ``n`` denotes ``naming[n]``?"""
    val = lambda c: naming[c.name]  # noqa: E731
    for lit in diagram:
        if lit.kind == "eq":
            truth = val(lit.args[0]) == val(lit.args[1])
        elif lit.kind == "rel":
            truth = tuple(val(a) for a in lit.args) in host.relations[lit.symbol]
        elif lit.symbol in host.constants:
            truth = host.constants[lit.symbol] == val(lit.value)
        else:
            truth = host.functions[lit.symbol][tuple(val(a) for a in lit.args)] == val(lit.value)
        if truth != lit.positive:
            return False
    return True


# ---------------------------------------------------------------------------
# Morleyization


@dataclass(frozen=True)
class MorleyizationResult:
    language: Language
    symbols: Mapping  # formula -> new relation name
    axioms: tuple
    parameters: Mapping  # formula -> tuple of free variables, in argument order

    def expand(self, structure: FiniteStructure) -> FiniteStructure:
        """Canonical expansion interpreting each new symbol by its defining formula."""
        rels = dict(structure.relations)
        for phi, name in self.symbols.items():
            xs = self.parameters[phi]
            fn = compiled(phi)
            rels[name] = {vals for vals in itertools.product(*(structure.carriers[v.sort] for v in xs))
                          if fn(structure, dict(zip(xs, vals)))}
        return FiniteStructure(self.language, structure.carriers, rels, structure.functions, structure.constants)


def morleyize(language: Language, formulas: list, avoid: Iterable[str] = (), prefix: str = "R") -> MorleyizationResult:
    """Add one relation symbol per formula with its defining biconditional."""
    if len(set(formulas)) != len(formulas):
        raise FusionLabError("duplicate formulas in the Morleyization list")
    taken = set(language.symbols) | set(avoid)
    counter = itertools.count()
    symbols, params, axioms, new_rels = {}, {}, [], {}
    for phi in formulas:
        if not symbols_of(phi) <= language.symbols:
            raise LanguageError(f"{to_text(phi)} uses symbols outside the language")
        name = f"{prefix}{next(counter)}"
        while name in taken:
            name = f"{prefix}{next(counter)}"
        taken.add(name)
        xs = free_vars(phi)
        symbols[phi], params[phi] = name, xs
        new_rels[name] = tuple(v.sort for v in xs)
        atom = Atom(name, xs)
        axioms.append(Forall(xs, Iff(atom, phi)) if xs else Iff(atom, phi))
    return MorleyizationResult(language.extend(relations=new_rels), symbols, tuple(axioms), params)


# ---------------------------------------------------------------------------
# Bounded formulas


@dataclass(frozen=True)
class VerificationRecord:
    kind: str  # "size-checked", "declared" or "product"
    size_limit: int | None
    source: str
    note: str = "bound certified only on class members up to the stated size"


@dataclass(frozen=True)
class BoundedFormula:
    """Quantifier-free ``formula(x, y)`` with at most ``k`` y-tuples per x-tuple."""

    formula: Formula
    x: tuple
    y: tuple
    k: int
    record: VerificationRecord | None = None

    def __post_init__(self):
        if not self.y:
            object.__setattr__(self, "k", 1)
        if self.k < 1:
            raise ValueError("bound must be positive")

    @property
    def verified(self) -> bool:
        return self.record is not None

    def existential(self) -> Formula:
        return Exists(self.y, self.formula) if self.y else self.formula


@dataclass(frozen=True)
class BoundedVerdict:
    verified: bool
    size_limit: int
    k: int
    structure: FiniteStructure | None = None
    x_assignment: Mapping | None = None
    witnesses: tuple = ()

    @property
    def label(self) -> str:
        return f"verified-up-to-size {self.size_limit}" if self.verified else "refuted-with-witness"


def _size_vectors(language: Language, total: int):
    sorts = language.sorts
    for combo in itertools.product(range(total + 1), repeat=len(sorts)):
        if sum(combo) <= total:
            yield dict(zip(sorts, combo))


def check_bounded(formula: Formula, x: tuple, y: tuple, class_spec: ClassSpec, k: int,
                  size_limit: int, budget: int | None = None) -> BoundedVerdict:
    """Size-qualified boundedness: at most k y-tuples per x-tuple on members up to size_limit."""
    if size_limit < 1 or k < 1:
        raise ValueError("size_limit and k must be positive")
    if not symbols_of(formula) <= class_spec.language.symbols:
        raise LanguageError("formula uses symbols outside the class language")
    fv = set(free_vars(formula))
    if not fv <= set(x) | set(y):
        raise FusionLabError("free variables must be split between x and y")
    fn = compiled(formula)
    vectors = sorted(_size_vectors(class_spec.language, size_limit), key=lambda v: (sum(v.values()),
                                                                                   tuple(v.values())))
    for sizes in vectors:
        for M in enumerate_models(class_spec, sizes, budget):
            for xvals in itertools.product(*(M.carriers[v.sort] for v in x)):
                env = dict(zip(x, xvals))
                hits = []
                for yvals in itertools.product(*(M.carriers[v.sort] for v in y)):
                    env.update(zip(y, yvals))
                    if fn(M, env):
                        hits.append(yvals)
                if len(hits) > k:
                    return BoundedVerdict(False, size_limit, k, M, dict(zip(x, xvals)), tuple(hits))
    return BoundedVerdict(True, size_limit, k)


def bounded_from_check(formula, x, y, class_spec, k, size_limit) -> BoundedFormula:
    """Run check_bounded and wrap a verified result; raises on refutation."""
    v = check_bounded(formula, x, y, class_spec, k, size_limit)
    if not v.verified:
        raise FusionLabError(f"bound {k} refuted for {to_text(formula)}")
    return BoundedFormula(formula, tuple(x), tuple(y), k,
                          VerificationRecord("size-checked", size_limit, class_spec.name))


def conjoin_bounded(f1: BoundedFormula, f2: BoundedFormula) -> BoundedFormula:
    """Conjunction with bound k1*k2; clashing witnesses of f2 are renamed."""
    used = set(f1.x) | set(f1.y) | set(f2.x)
    fresh = FreshVars(1000)
    ren = {}
    for v in f2.y:
        if v in used:
            w = fresh(v.sort)
            while w in used or w in f2.y:
                w = fresh(v.sort)
            ren[v] = w
    body2 = substitute(f2.formula, ren)
    y2 = tuple(ren.get(v, v) for v in f2.y)
    xs = tuple(dict.fromkeys(f1.x + f2.x))
    xs = tuple(v for v in xs if v not in f1.y and v not in y2)
    limits = [r.size_limit for r in (f1.record, f2.record) if r is not None and r.size_limit is not None]
    record = None
    if f1.record is not None and f2.record is not None:
        record = VerificationRecord("product", min(limits) if limits else None,
                                    f"{f1.record.source}*{f2.record.source}")
    return BoundedFormula(conj(f1.formula, body2), xs, f1.y + y2, f1.k * f2.k, record)

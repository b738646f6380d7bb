"""Multi-sorted first-order signatures, terms, formulas and their text syntax.

Formulas are immutable trees of frozen dataclasses.  The concrete syntax is::

    forall x y: E(x,y) -> E(y,x)
    exists y[S]: pi(x, z, y) & !P(y)
    f(x) = y | c != x

Binders are ``forall``/``exists`` followed by variables and ``:``; a variable may
carry a sort annotation ``x[S]`` at any occurrence.  Connectives by increasing
binding strength: ``<->``, ``->`` (right associative), ``|``, ``&``, ``!``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import count
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Union

from .errors import LanguageError, ParseError, SortError, UndeclaredSymbolError

DEFAULT_SORT = "V"
RESERVED_PREFIX = "_w"
VARIABLE_RE = re.compile(r"[a-z][a-zA-Z0-9]*\Z")


# ---------------------------------------------------------------------------
# Languages


def _freeze(mapping):
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True, eq=False)
class Language:
    """A multi-sorted signature.

    ``relations`` maps a name to its sort profile, ``functions`` maps a name to
    ``(argument sorts, result sort)`` and ``constants`` maps a name to a sort.
    Profiles may be given as plain arities when the language has one sort.
    """

    sorts: tuple = (DEFAULT_SORT,)
    relations: Mapping = field(default_factory=dict)
    functions: Mapping = field(default_factory=dict)
    constants: Mapping = field(default_factory=dict)

    def __post_init__(self):
        sorts = tuple(self.sorts)
        if not sorts:
            raise LanguageError("a language needs at least one sort")
        if len(set(sorts)) != len(sorts):
            raise LanguageError(f"duplicate sorts in {sorts}")
        object.__setattr__(self, "sorts", sorts)

        def profile(spec, what, name):
            if isinstance(spec, int):
                if len(sorts) != 1:
                    raise LanguageError(f"{what} {name}: arity shorthand needs a single-sorted language")
                return (sorts[0],) * spec
            spec = tuple(spec)
            for s in spec:
                if s not in sorts:
                    raise LanguageError(f"{what} {name}: undeclared sort {s!r}")
            return spec

        rels = {name: profile(spec, "relation", name) for name, spec in dict(self.relations).items()}
        funs = {}
        for name, spec in dict(self.functions).items():
            if isinstance(spec, int):
                args, result = profile(spec, "function", name), sorts[0] if len(sorts) == 1 else None
                if result is None:
                    raise LanguageError(f"function {name}: arity shorthand needs a single-sorted language")
            else:
                args, result = spec
                args = profile(args, "function", name)
                if result not in sorts:
                    raise LanguageError(f"function {name}: undeclared result sort {result!r}")
            funs[name] = (args, result)
        consts = {}
        for name, s in dict(self.constants).items():
            if s is None:
                s = sorts[0]
            if s not in sorts:
                raise LanguageError(f"constant {name}: undeclared sort {s!r}")
            consts[name] = s
        seen = {}
        for kind, table in (("relation", rels), ("function", funs), ("constant", consts)):
            for name in table:
                if name in seen:
                    raise LanguageError(f"symbol {name!r} declared as both {seen[name]} and {kind}")
                if name.startswith("_"):
                    raise LanguageError(f"symbol {name!r}: leading underscore is reserved")
                seen[name] = kind
        object.__setattr__(self, "relations", _freeze(sorted(rels.items())))
        object.__setattr__(self, "functions", _freeze(sorted(funs.items())))
        object.__setattr__(self, "constants", _freeze(sorted(consts.items())))

    # identity -----------------------------------------------------------
    def key(self):
        return (self.sorts, tuple(self.relations.items()), tuple(self.functions.items()),
                tuple(self.constants.items()))

    def __eq__(self, other):
        return isinstance(other, Language) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        parts = [f"{r}/{len(p)}" for r, p in self.relations.items()]
        parts += [f"{f}:{len(a)}->{s}" for f, (a, s) in self.functions.items()]
        parts += [f"{c}:{s}" for c, s in self.constants.items()]
        return f"Language({','.join(self.sorts)}; {' '.join(parts)})"

    # queries ------------------------------------------------------------
    @property
    def symbols(self) -> frozenset:
        return frozenset(self.relations) | frozenset(self.functions) | frozenset(self.constants)

    @property
    def single_sorted(self) -> bool:
        return len(self.sorts) == 1

    @property
    def is_relational(self) -> bool:
        return not self.functions and not self.constants

    def kind(self, name):
        if name in self.relations:
            return "relation"
        if name in self.functions:
            return "function"
        if name in self.constants:
            return "constant"
        return None

    def profile(self, name):
        kind = self.kind(name)
        if kind == "relation":
            return self.relations[name]
        if kind == "function":
            return self.functions[name]
        if kind == "constant":
            return self.constants[name]
        raise LanguageError(f"undeclared symbol {name!r}")

    def issubset(self, other: "Language") -> bool:
        return (set(self.sorts) <= set(other.sorts)
                and all(other.relations.get(k) == v for k, v in self.relations.items())
                and all(other.functions.get(k) == v for k, v in self.functions.items())
                and all(other.constants.get(k) == v for k, v in self.constants.items()))

    # algebra ------------------------------------------------------------
    def restrict(self, names: Iterable[str]) -> "Language":
        names = set(names)
        return Language(self.sorts,
                        {k: v for k, v in self.relations.items() if k in names},
                        {k: v for k, v in self.functions.items() if k in names},
                        {k: v for k, v in self.constants.items() if k in names})

    def extend(self, relations=None, functions=None, constants=None) -> "Language":
        rels = dict(self.relations)
        funs = dict(self.functions)
        consts = dict(self.constants)
        rels.update(relations or {})
        funs.update(functions or {})
        consts.update(constants or {})
        return Language(self.sorts, rels, funs, consts)

    def union(self, *others: "Language") -> "Language":
        result = self
        for other in others:
            if result.sorts != other.sorts:
                raise LanguageError(f"sort lists differ: {result.sorts} vs {other.sorts}")
            for name in result.symbols & other.symbols:
                if result.profile(name) != other.profile(name) or result.kind(name) != other.kind(name):
                    raise LanguageError(f"symbol {name!r} has conflicting declarations")
            result = result.extend(other.relations, other.functions, other.constants)
        return result

    def intersection(self, other: "Language") -> "Language":
        if self.sorts != other.sorts:
            raise LanguageError(f"sort lists differ: {self.sorts} vs {other.sorts}")
        common = {n for n in self.symbols & other.symbols
                  if self.kind(n) == other.kind(n) and self.profile(n) == other.profile(n)}
        return self.restrict(common)


def relational_language(arities: Mapping[str, int], sort: str = DEFAULT_SORT) -> Language:
    """Single-sorted relational language from ``{name: arity}``."""
    return Language((sort,), {name: (sort,) * k for name, k in arities.items()})


@dataclass(frozen=True)
class LanguageFamily:
    """Indexed languages pairwise meeting in one common language."""

    members: Mapping
    intersection: Language
    union: Language

    @property
    def indices(self) -> tuple:
        return tuple(self.members)

    def __getitem__(self, index) -> Language:
        return self.members[index]

    def __hash__(self):
        return hash((tuple(self.members.items()), self.intersection, self.union))


def make_language_family(members) -> LanguageFamily:
    """Build a family; a list is indexed from 1.

    Fails on sort-list mismatch and when two pairs of distinct members have
    different intersections (the offending pair is named).
    """
    if not isinstance(members, Mapping):
        members = {i + 1: lang for i, lang in enumerate(members)}
    if not members:
        raise LanguageError("a language family needs at least one member")
    indices = sorted(members)
    members = {i: members[i] for i in indices}
    first = members[indices[0]]
    for i in indices[1:]:
        if members[i].sorts != first.sorts:
            raise LanguageError(f"members {indices[0]} and {i} have different sorts: "
                                f"{first.sorts} vs {members[i].sorts}")
    union = first.union(*(members[i] for i in indices[1:]))
    if len(indices) == 1:
        inter = first
    else:
        inter = None
        reference = None
        for a in range(len(indices)):
            for b in range(a + 1, len(indices)):
                i, j = indices[a], indices[b]
                meet = members[i].intersection(members[j])
                if inter is None:
                    inter, reference = meet, (i, j)
                elif meet != inter:
                    raise LanguageError(
                        f"pairwise intersections differ: L{reference[0]}∩L{reference[1]} = "
                        f"{sorted(inter.symbols)} but L{i}∩L{j} = {sorted(meet.symbols)}",
                    )
    return LanguageFamily(MappingProxyType(members), inter, union)


# ---------------------------------------------------------------------------
# Terms and formulas


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = DEFAULT_SORT

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class App:
    func: str
    args: tuple

    def __repr__(self):
        return f"{self.func}({','.join(map(repr, self.args))})"


Term = Union[Var, Const, App]


class Formula:
    """Marker base class; concrete nodes are the frozen dataclasses below."""

    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    rel: str
    args: tuple = ()


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, repr=False)
class And(Formula):
    args: tuple = ()

    def __post_init__(self):
        if len(self.args) == 1:
            raise ValueError("And needs zero or at least two conjuncts; use conj()")


@dataclass(frozen=True, repr=False)
class Or(Formula):
    args: tuple = ()

    def __post_init__(self):
        if len(self.args) == 1:
            raise ValueError("Or needs zero or at least two disjuncts; use disj()")


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class Exists(Formula):
    vars: tuple
    body: Formula


@dataclass(frozen=True, repr=False)
class Forall(Formula):
    vars: tuple
    body: Formula


for _cls in (Eq, Atom, Not, And, Or, Implies, Iff, Exists, Forall):
    _cls.__repr__ = lambda self: f"<{to_text(self)}>"

TRUE = And(())
FALSE = Or(())


def conj(*args: Formula) -> Formula:
    """Conjunction that flattens nested ``And`` and drops a lone wrapper."""
    flat = []
    for a in args:
        flat.extend(a.args if isinstance(a, And) else (a,))
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        flat.extend(a.args if isinstance(a, Or) else (a,))
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(formula: Formula) -> Formula:
    return formula.arg if isinstance(formula, Not) else Not(formula)


# -- traversal --------------------------------------------------------------


def term_vars(term: Term) -> Iterator[Var]:
    if isinstance(term, Var):
        yield term
    elif isinstance(term, App):
        for a in term.args:
            yield from term_vars(a)


def term_symbols(term: Term) -> Iterator[str]:
    if isinstance(term, Const):
        yield term.name
    elif isinstance(term, App):
        yield term.func
        for a in term.args:
            yield from term_symbols(a)


def children(formula: Formula) -> tuple:
    if isinstance(formula, Not):
        return (formula.arg,)
    if isinstance(formula, (And, Or)):
        return formula.args
    if isinstance(formula, (Implies, Iff)):
        return (formula.left, formula.right)
    if isinstance(formula, (Exists, Forall)):
        return (formula.body,)
    return ()


def atoms_of(formula: Formula) -> Iterator[Formula]:
    if isinstance(formula, (Eq, Atom)):
        yield formula
    for c in children(formula):
        yield from atoms_of(c)


def atom_terms(atom) -> tuple:
    return (atom.left, atom.right) if isinstance(atom, Eq) else atom.args


def symbols_of(formula: Formula) -> frozenset:
    out = set()
    for atom in atoms_of(formula):
        if isinstance(atom, Atom):
            out.add(atom.rel)
        for t in atom_terms(atom):
            out.update(term_symbols(t))
    return frozenset(out)


def free_vars(formula: Formula) -> tuple:
    """Free variables in order of first occurrence."""
    seen: dict = {}

    def walk(f, bound):
        if isinstance(f, (Eq, Atom)):
            for t in atom_terms(f):
                for v in term_vars(t):
                    if v not in bound:
                        seen.setdefault(v, None)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | set(f.vars))
        else:
            for c in children(f):
                walk(c, bound)

    walk(formula, frozenset())
    return tuple(seen)


def all_vars(formula: Formula) -> set:
    out = set()
    for atom in atoms_of(formula):
        for t in atom_terms(atom):
            out.update(term_vars(t))

    def binders(f):
        if isinstance(f, (Exists, Forall)):
            out.update(f.vars)
        for c in children(f):
            binders(c)

    binders(formula)
    return out


def is_quantifier_free(formula: Formula) -> bool:
    if isinstance(formula, (Exists, Forall)):
        return False
    return all(is_quantifier_free(c) for c in children(formula))


def universal_parts(formula: Formula):
    """Split ``forall x..: forall y..: matrix`` into (variables, matrix) or None."""
    variables = []
    while isinstance(formula, Forall):
        variables.extend(formula.vars)
        formula = formula.body
    if not is_quantifier_free(formula):
        return None
    return tuple(variables), formula


def substitute_term(term: Term, mapping: Mapping) -> Term:
    if isinstance(term, Var):
        return mapping.get(term, term)
    if isinstance(term, App):
        return App(term.func, tuple(substitute_term(a, mapping) for a in term.args))
    return term


def substitute(formula: Formula, mapping: Mapping) -> Formula:
    """Replace free variables by terms; bound occurrences are left alone.

    Capture is not checked: callers substitute fresh or free-only variables.
    """
    if isinstance(formula, Eq):
        return Eq(substitute_term(formula.left, mapping), substitute_term(formula.right, mapping))
    if isinstance(formula, Atom):
        return Atom(formula.rel, tuple(substitute_term(a, mapping) for a in formula.args))
    if isinstance(formula, Not):
        return Not(substitute(formula.arg, mapping))
    if isinstance(formula, And):
        return And(tuple(substitute(a, mapping) for a in formula.args))
    if isinstance(formula, Or):
        return Or(tuple(substitute(a, mapping) for a in formula.args))
    if isinstance(formula, Implies):
        return Implies(substitute(formula.left, mapping), substitute(formula.right, mapping))
    if isinstance(formula, Iff):
        return Iff(substitute(formula.left, mapping), substitute(formula.right, mapping))
    if isinstance(formula, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k not in formula.vars}
        return type(formula)(formula.vars, substitute(formula.body, inner))
    raise TypeError(f"not a formula: {formula!r}")


class FreshVars:
    """Generator of reserved-prefix variables; the parser rejects the prefix."""

    def __init__(self, start: int = 0):
        self._counter = count(start)

    def __call__(self, sort: str = DEFAULT_SORT) -> Var:
        return Var(f"{RESERVED_PREFIX}{next(self._counter)}", sort)


def term_sort(term: Term, language: Language) -> str:
    if isinstance(term, Var):
        return term.sort
    if isinstance(term, Const):
        return language.constants[term.name]
    return language.functions[term.func][1]


def check_sorts(formula: Formula, language: Language) -> None:
    """Raise SortError unless the formula is well-sorted over ``language``."""

    def check_term(t):
        if isinstance(t, Var):
            if t.sort not in language.sorts:
                raise SortError(f"variable {t.name} has undeclared sort {t.sort!r}")
            return t.sort
        if isinstance(t, Const):
            if t.name not in language.constants:
                raise SortError(f"undeclared constant {t.name!r}")
            return language.constants[t.name]
        if t.func not in language.functions:
            raise SortError(f"undeclared function {t.func!r}")
        args, result = language.functions[t.func]
        if len(args) != len(t.args):
            raise SortError(f"{t.func} expects {len(args)} arguments, got {len(t.args)}")
        for want, a in zip(args, t.args):
            if check_term(a) != want:
                raise SortError(f"argument of {t.func} has wrong sort")
        return result

    for atom in atoms_of(formula):
        if isinstance(atom, Eq):
            if check_term(atom.left) != check_term(atom.right):
                raise SortError(f"equality between different sorts in {to_text(atom)}")
        else:
            if atom.rel not in language.relations:
                raise SortError(f"undeclared relation {atom.rel!r}")
            prof = language.relations[atom.rel]
            if len(prof) != len(atom.args):
                raise SortError(f"{atom.rel} expects {len(prof)} arguments, got {len(atom.args)}")
            for want, a in zip(prof, atom.args):
                if check_term(a) != want:
                    raise SortError(f"argument of {atom.rel} has wrong sort")


def classify_formula(formula: Formula, family: LanguageFamily) -> frozenset:
    """Indices of the members whose language contains every symbol used."""
    used = symbols_of(formula)
    return frozenset(i for i in family.indices if used <= family[i].symbols)


# ---------------------------------------------------------------------------
# Printing

_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def _term_text(t: Term, annotate, seen) -> str:
    if isinstance(t, Var):
        if annotate and t not in seen:
            seen.add(t)
            return f"{t.name}[{t.sort}]"
        return t.name
    if isinstance(t, Const):
        return t.name
    return f"{t.func}({','.join(_term_text(a, annotate, seen) for a in t.args)})"


def to_text(formula: Formula, language: Language | None = None) -> str:
    """Render in the workbench syntax; the parser reads the result back.

    Sort annotations are written for multi-sorted languages (or when no
    language is given and some variable has a non-default sort).
    """
    if language is not None:
        annotate = not language.single_sorted
    else:
        annotate = any(v.sort != DEFAULT_SORT for v in all_vars(formula))
    seen: set = set()

    def render(f, ctx):
        if isinstance(f, Eq):
            return f"{_term_text(f.left, annotate, seen)}={_term_text(f.right, annotate, seen)}"
        if isinstance(f, Atom):
            if not f.args:
                return f.rel
            return f"{f.rel}({','.join(_term_text(a, annotate, seen) for a in f.args)})"
        if isinstance(f, And) and not f.args:
            return "true"
        if isinstance(f, Or) and not f.args:
            return "false"
        if isinstance(f, (Exists, Forall)):
            word = "exists" if isinstance(f, Exists) else "forall"
            names = []
            for v in f.vars:
                names.append(f"{v.name}[{v.sort}]" if annotate else v.name)
            inner = seen.copy()
            seen.update(f.vars)
            body = render(f.body, 0)
            seen.clear()
            seen.update(inner)
            text = f"{word} {' '.join(names)}: {body}"
            return text if ctx == 0 else f"({text})"
        level = _LEVEL[type(f)]
        if isinstance(f, Not):
            text = "!" + render(f.arg, 5)
        elif isinstance(f, And):
            text = " & ".join(render(a, 5) for a in f.args)
        elif isinstance(f, Or):
            text = " | ".join(render(a, 4) for a in f.args)
        elif isinstance(f, Implies):
            text = f"{render(f.left, 3)} -> {render(f.right, 2)}"
        else:
            text = f"{render(f.left, 2)} <-> {render(f.right, 2)}"
        return text if level >= ctx else f"({text})"

    return render(formula, 0)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(r"\s*(?:(<->|->|!=|[&|!(),=:\[\]])|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"forall", "exists", "true", "false"}


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((m.group(1) or m.group(2), start))
        pos = m.end()
    tokens.append(("<eof>", len(text)))
    return tokens


class _Binding:
    __slots__ = ("name", "sort", "parent", "pos")

    def __init__(self, name, pos):
        self.name, self.sort, self.parent, self.pos = name, None, None, pos

    def root(self):
        node = self
        while node.parent is not None:
            node = node.parent
        return node


@dataclass(frozen=True)
class _PVar:
    binding: _Binding


class _Parser:
    def __init__(self, text, language, free_sorts, allow_reserved):
        self.text = text
        self.lang = language
        self.tokens = _tokenize(text)
        self.i = 0
        self.scopes = [{}]
        self.free = {}
        self.bindings = []
        self.allow_reserved = allow_reserved
        for name, sort in (free_sorts or {}).items():
            b = self._binding(name, 0)
            self._constrain(b, sort, 0)
            self.free[name] = b
        self.scopes[0] = dict(self.free)

    # token helpers
    def peek(self):
        return self.tokens[self.i][0]

    def pos(self):
        return self.tokens[self.i][1]

    def take(self, expected=None):
        tok, pos = self.tokens[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", pos, self.text)
        self.i += 1
        return tok

    # sort bookkeeping
    def _binding(self, name, pos):
        b = _Binding(name, pos)
        self.bindings.append(b)
        return b

    def _constrain(self, b, sort, pos):
        r = b.root()
        if sort not in self.lang.sorts:
            raise SortError(f"undeclared sort {sort!r} (at position {pos})")
        if r.sort is None:
            r.sort = sort
        elif r.sort != sort:
            raise SortError(f"variable {b.name!r} used with sorts {r.sort!r} and {sort!r} (at position {pos})")

    def _unify(self, a, b, pos):
        ra, rb = a.root(), b.root()
        if ra is rb:
            return
        if ra.sort is not None and rb.sort is not None and ra.sort != rb.sort:
            raise SortError(f"equality between sorts {ra.sort!r} and {rb.sort!r} (at position {pos})")
        rb.parent = ra
        if ra.sort is None:
            ra.sort = rb.sort

    def _lookup(self, name, pos):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        b = self._binding(name, pos)
        self.free[name] = b
        self.scopes[0][name] = b
        return b

    # grammar
    def formula(self):
        left = self.implies()
        if self.peek() == "<->":
            self.take()
            return Iff(left, self.implies())
        return left

    def implies(self):
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.peek() == "|":
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self):
        parts = [self.unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok in ("forall", "exists"):
            return self.quantified()
        if tok == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        return self.atomic()

    def quantified(self):
        word = self.take()
        scope = {}
        variables = []
        while self.peek() != ":":
            pos = self.pos()
            name = self.take()
            self._check_var_name(name, pos)
            if name in scope:
                raise ParseError(f"variable {name!r} bound twice", pos, self.text)
            b = self._binding(name, pos)
            if self.peek() == "[":
                self.take()
                sort = self.take()
                self.take("]")
                self._constrain(b, sort, pos)
            scope[name] = b
            variables.append(b)
        if not variables:
            raise ParseError(f"{word} without variables", self.pos(), self.text)
        self.take(":")
        self.scopes.append(scope)
        body = self.formula()
        self.scopes.pop()
        cls = Forall if word == "forall" else Exists
        return cls(tuple(_PVar(b) for b in variables), body)

    def _check_var_name(self, name, pos):
        if name in _KEYWORDS or not (name[:1].isalpha() or name.startswith("_")):
            raise ParseError(f"expected a variable, found {name!r}", pos, self.text)
        if self.lang.kind(name) is not None:
            raise ParseError(f"{name!r} is a declared symbol, not a variable", pos, self.text)
        if name.startswith("_"):
            if not (self.allow_reserved and name.startswith(RESERVED_PREFIX)):
                raise ParseError(f"identifier {name!r} uses the reserved prefix", pos, self.text)
        elif not VARIABLE_RE.match(name):
            raise UndeclaredSymbolError(f"undeclared symbol {name!r}", pos, self.text)

    def atomic(self):
        pos = self.pos()
        tok = self.peek()
        if self.lang.kind(tok) == "relation":
            self.take()
            prof = self.lang.relations[tok]
            args = self.arguments(tok, prof, pos) if self.peek() == "(" else ()
            if len(args) != len(prof):
                raise SortError(f"{tok} expects {len(prof)} arguments, got {len(args)} (at position {pos})")
            return Atom(tok, args)
        left, lsort = self.term()
        op_pos = self.pos()
        op = self.peek()
        if op not in ("=", "!="):
            raise ParseError(f"expected '=' after term, found {op!r}", op_pos, self.text)
        self.take()
        right, rsort = self.term()
        self._equate(lsort, rsort, op_pos)
        eq = Eq(left, right)
        return Not(eq) if op == "!=" else eq

    def _equate(self, a, b, pos):
        if isinstance(a, _Binding) and isinstance(b, _Binding):
            self._unify(a, b, pos)
        elif isinstance(a, _Binding):
            self._constrain(a, b, pos)
        elif isinstance(b, _Binding):
            self._constrain(b, a, pos)
        elif a != b:
            raise SortError(f"equality between sorts {a!r} and {b!r} (at position {pos})")

    def arguments(self, name, profile, pos):
        self.take("(")
        args = []
        if self.peek() != ")":
            while True:
                apos = self.pos()
                term, sort = self.term()
                if len(args) < len(profile):
                    self._equate(sort, profile[len(args)], apos)
                args.append(term)
                if self.peek() == ",":
                    self.take()
                    continue
                break
        self.take(")")
        if len(args) != len(profile):
            raise SortError(f"{name} expects {len(profile)} arguments, got {len(args)} (at position {pos})")
        return tuple(args)

    def term(self):
        """Return (term, sort) where sort may be a pending binding."""
        pos = self.pos()
        tok = self.peek()
        kind = self.lang.kind(tok)
        if kind == "function":
            self.take()
            args, result = self.lang.functions[tok]
            return App(tok, self.arguments(tok, args, pos)), result
        if kind == "constant":
            self.take()
            return Const(tok), self.lang.constants[tok]
        if kind == "relation":
            raise SortError(f"relation {tok!r} used as a term (at position {pos})")
        if tok.startswith("<") or not (tok[:1].isalpha() or tok.startswith("_")):
            raise ParseError(f"expected a term, found {tok!r}", pos, self.text)
        if self.i + 1 < len(self.tokens) and self.tokens[self.i + 1][0] == "(":
            raise UndeclaredSymbolError(f"undeclared symbol {tok!r}", pos, self.text)
        self._check_var_name(tok, pos)
        self.take()
        b = self._lookup(tok, pos)
        if self.peek() == "[":
            self.take()
            sort = self.take()
            self.take("]")
            self._constrain(b, sort, pos)
        return _PVar(b), b

    # resolution
    def resolve(self, formula):
        default = self.lang.sorts[0] if self.lang.single_sorted else None
        cache = {}

        def var(pv):
            b = pv.binding
            if b not in cache:
                r = b.root()
                if r.sort is None:
                    if default is None:
                        raise SortError(f"cannot infer the sort of variable {b.name!r} "
                                        f"(at position {b.pos}); annotate it as {b.name}[Sort]")
                    r.sort = default
                cache[b] = Var(b.name, r.sort)
            return cache[b]

        def term(t):
            if isinstance(t, _PVar):
                return var(t)
            if isinstance(t, App):
                return App(t.func, tuple(term(a) for a in t.args))
            return t

        def walk(f):
            if isinstance(f, Eq):
                return Eq(term(f.left), term(f.right))
            if isinstance(f, Atom):
                return Atom(f.rel, tuple(term(a) for a in f.args))
            if isinstance(f, Not):
                return Not(walk(f.arg))
            if isinstance(f, And):
                return And(tuple(walk(a) for a in f.args))
            if isinstance(f, Or):
                return Or(tuple(walk(a) for a in f.args))
            if isinstance(f, Implies):
                return Implies(walk(f.left), walk(f.right))
            if isinstance(f, Iff):
                return Iff(walk(f.left), walk(f.right))
            return type(f)(tuple(var(v) for v in f.vars), walk(f.body))

        return walk(formula)


def parse_formula(text: str, language: Language, free_sorts: Mapping | None = None,
                  allow_reserved: bool = False) -> Formula:
    """Parse workbench syntax over ``language``.

    Variable sorts are inferred from argument positions and equalities; in a
    single-sorted language unconstrained variables get the only sort.
    ``free_sorts`` pins sorts of free variables that cannot be inferred.

    >>> g = relational_language({"E": 2})
    >>> to_text(parse_formula("forall x: !E(x,x)", g))
    'forall x: !E(x,x)'
    """
    p = _Parser(text, language, free_sorts, allow_reserved)
    formula = p.formula()
    if p.peek() != "<eof>":
        raise ParseError(f"unexpected {p.peek()!r}", p.pos(), text)
    return p.resolve(formula)

"""Structure codecs between a class and a fusion presentation of it, with round-trip checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .classes import ClassSpec, Theory, enumerate_models, fusion_class, graphs, hyper_edge_class, hypergraphs3
from .errors import ClassViolation, FusionLabError, PreconditionError
from .logic import (
    And, App, Atom, Eq, Exists, Forall, Formula, Iff, Implies, Language, LanguageFamily, Not, Or, Var,
    conj, disj, make_language_family, relational_language,
)
from .structures import FiniteStructure, element_name, find_isomorphism


@dataclass(frozen=True)
class Codec:
    name: str
    source: ClassSpec
    target: Theory
    encode_fn: Callable
    decode_fn: Callable
    default_size: int = 4
    note: str = ""

    def encode(self, structure: FiniteStructure) -> FiniteStructure:
        _require(self.source, structure, "source")
        return self.encode_fn(structure)

    def decode(self, structure: FiniteStructure) -> FiniteStructure:
        _require(self.target, structure, "target")
        return self.decode_fn(structure)


def _require(cls, structure, role):
    v = cls.violation(structure)
    if v is not None:
        ax, env = v
        raise ClassViolation(f"input is not in the {role} class {cls.name}", ax, env)


CODECS: dict = {}


def register_codec(codec: Codec) -> Codec:
    CODECS[codec.name] = codec
    return codec


def get_codec(name) -> Codec:
    if isinstance(name, Codec):
        return name
    try:
        return CODECS[name]
    except KeyError:
        raise FusionLabError(f"unknown codec {name!r}; known: {', '.join(CODECS)}") from None


def encode(codec, structure):
    return get_codec(codec).encode(structure)


def decode(codec, structure):
    return get_codec(codec).decode(structure)


# ---------------------------------------------------------------------------
# formula helpers

def _vars(prefix, n, sort):
    return tuple(Var(f"{prefix}{i + 1}", sort) for i in range(n))


def _distinct(xs) -> Formula:
    return conj(*(Not(Eq(a, b)) for a, b in itertools.combinations(xs, 2)))


def _same_set(xs, ys) -> Formula:
    """ys is a permutation of xs (for injective tuples)."""
    return disj(*(conj(*(Eq(ys[i], xs[p]) for i, p in enumerate(perm)))
                  for perm in itertools.permutations(range(len(xs)))))


def _canon(t):
    return tuple(sorted(t))


def _injective_tuples(elems, n):
    return [t for t in itertools.permutations(elems, n)]


# ---------------------------------------------------------------------------
# Hypergraphs via a quotient map


def _hypergraph_source(n):
    if n == 2:
        return graphs()
    if n == 3:
        return hypergraphs3()
    rel = "E"
    lang = relational_language({rel: n})
    xs = [f"x{i + 1}" for i in range(n)]
    head = f"{rel}({','.join(xs)})"
    axioms = []
    for i in range(n - 1):
        swapped = xs.copy()
        swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
        axioms.append(f"forall {' '.join(xs)}: {head} -> {rel}({','.join(swapped)})")
    axioms.append(f"forall {' '.join(xs)}: {head} -> " + " & ".join(f"{a}!={b}" for a, b in itertools.combinations(xs, 2)))
    return ClassSpec(lang, axioms, name=f"hypergraphs{n}")


def _edge_rel(source):
    return next(iter(source.language.relations))


def hypergraph_pi_codec(n: int = 2) -> Codec:
    source = _hypergraph_source(n)
    E = _edge_rel(source)
    lang = Language(("V", "S"), {"pi": ("V",) * n + ("S",), "P": ("S",)})
    a, b = _vars("a", n, "V"), _vars("b", n, "V")
    s, t = Var("s", "S"), Var("t", "S")
    pi_a, pi_b = Atom("pi", a + (s,)), Atom("pi", b + (t,))
    axioms = [
        Forall(a + (s,), Implies(pi_a, _distinct(a))),
        Forall(a, Implies(_distinct(a), Exists((s,), pi_a))),
        Forall(a + (s, t), Implies(conj(pi_a, Atom("pi", a + (t,))), Eq(s, t))),
        # pi(a) = pi(b) iff a ~ b
        Forall(a + b + (s, t), Implies(conj(pi_a, pi_b), Iff(Eq(s, t), _same_set(a, b)))),
        Forall((s,), Exists(a, Atom("pi", a + (s,)))),
    ]
    target = Theory(lang, axioms, name=f"hypergraph-pi{n}-fusion")

    def enc(G):
        V = G.universe
        delta = _injective_tuples(V, n)
        S = sorted({_canon(x) for x in delta})
        pi = {x + (_canon(x),) for x in delta}
        P = {(_canon(x),) for x in G.relations[E]}
        return FiniteStructure(lang, {"V": V, "S": S}, {"pi": pi, "P": P}, {}, {})

    def dec(D):
        P = D.relations["P"]
        edges = {t[:-1] for t in D.relations["pi"] if t[-1:] in P}
        return FiniteStructure.relational(source.language, D.carriers["V"], {E: edges})

    return Codec("hypergraph-pi", source, target, enc, dec,
                 note="S is the set of injective n-tuples modulo permutation; P marks hyperedges")


def hypergraph_dis_codec(n: int = 2) -> Codec:
    """Two-witness presentation; decoding reads E(a) as g1(a) = g2(a)."""
    source = _hypergraph_source(n)
    E = _edge_rel(source)
    lang = Language(("V", "S"), {"D": ("V",) * n + ("S",), "g1": ("V",) * n + ("S",),
                                 "g2": ("V",) * n + ("S",)})
    a, b = _vars("a", n, "V"), _vars("b", n, "V")
    s, t, u = Var("s", "S"), Var("t", "S"), Var("u", "S")
    D = lambda xs, y: Atom("D", xs + (y,))
    axioms = [
        Forall(a + (s,), Implies(D(a, s), _distinct(a))),
        Forall(a + b + (s,), Implies(conj(D(a, s), _same_set(a, b)), D(b, s))),
        Forall(a, Implies(_distinct(a), Exists((s, t), conj(
            Not(Eq(s, t)), D(a, s), D(a, t), Forall((u,), Implies(D(a, u), disj(Eq(u, s), Eq(u, t)))))))),
    ]
    for g in ("g1", "g2"):
        G = lambda xs, y, g=g: Atom(g, xs + (y,))
        axioms += [
            Forall(a + (s,), Implies(G(a, s), D(a, s))),
            Forall(a, Implies(_distinct(a), Exists((s,), G(a, s)))),
            Forall(a + (s, t), Implies(conj(G(a, s), G(a, t)), Eq(s, t))),
            Forall(a + b + (s, t), Implies(conj(G(a, s), G(b, t), _same_set(a, b)), Eq(s, t))),
        ]
    target = Theory(lang, axioms, name=f"hypergraph-dis{n}-fusion")

    def enc(Gr):
        V = Gr.universe
        if len(V) < 2:
            raise PreconditionError("hypergraph-dis needs two distinct elements to fix")
        c1, c2 = V[0], V[1]
        delta = _injective_tuples(V, n)
        Q = sorted({_canon(x) for x in delta})
        S = [(c, q) for c in (c1, c2) for q in Q]
        Drel = {x + ((c, _canon(x)),) for x in delta for c in (c1, c2)}
        edges = Gr.relations[E]
        g1 = {x + ((c1, _canon(x)),) for x in delta}
        g2 = {x + ((c1 if x in edges else c2, _canon(x)),) for x in delta}
        return FiniteStructure(lang, {"V": V, "S": S}, {"D": Drel, "g1": g1, "g2": g2}, {}, {})

    def dec(M):
        g1 = {t[:-1]: t[-1] for t in M.relations["g1"]}
        g2 = {t[:-1]: t[-1] for t in M.relations["g2"]}
        edges = {x for x in g1 if g1[x] == g2.get(x)}
        return FiniteStructure.relational(source.language, M.carriers["V"], {E: edges})

    return Codec("hypergraph-dis", source, target, enc, dec,
                 note="c1, c2 are the first two elements in carrier order; needs at least two elements")


# ---------------------------------------------------------------------------
# Selections: tournaments and functions


SEL_LANG = Language(("M", "N", "Q"), {"E": ("N", "N"), "rho": ("N", "Q"), "pi": ("M", "M", "N"),
                                      "P": ("N",)})


def _selection_theory(name, phi, psi):
    """Fusion axioms for a selection of the equivalence psi on pairs satisfying phi."""
    a, b, c, d = (Var(v, "M") for v in "abcd")
    x, y, z = (Var(v, "N") for v in "xyz")
    q, r = Var("q", "Q"), Var("r", "Q")
    pi = lambda u, v, w: Atom("pi", (u, v, w))
    E = lambda u, v: Atom("E", (u, v))
    rho = lambda u, v: Atom("rho", (u, v))
    axioms = [
        Forall((x,), E(x, x)),
        Forall((x, y), Implies(E(x, y), E(y, x))),
        Forall((x, y, z), Implies(conj(E(x, y), E(y, z)), E(x, z))),
        Forall((x,), Exists((q,), rho(x, q))),
        Forall((x, y, q, r), Implies(conj(rho(x, q), rho(y, r)), Iff(Eq(q, r), E(x, y)))),
        Forall((a, b), Implies(phi(a, b), Exists((x,), pi(a, b, x)))),
        Forall((a, b, x), Implies(pi(a, b, x), phi(a, b))),
        Forall((a, b, x, y), Implies(conj(pi(a, b, x), pi(a, b, y)), Eq(x, y))),
        Forall((x,), Exists((a, b), pi(a, b, x))),
        Forall((a, b, c, d, x, y), Implies(conj(pi(a, b, x), pi(c, d, y)),
                                           conj(Iff(Eq(x, y), conj(Eq(a, c), Eq(b, d))),
                                                Iff(E(x, y), psi(a, b, c, d))))),
        # P picks exactly one element per class
        Forall((x,), Exists((y,), conj(E(x, y), Atom("P", (y,))))),
        Forall((x, y), Implies(conj(Atom("P", (x,)), Atom("P", (y,)), E(x, y)), Eq(x, y))),
    ]
    return Theory(SEL_LANG, axioms, name=name)


def _selection_encode(M_elems, pairs, cls_key, selected):
    """Fusion structure: N copies the pairs, Q holds least class members, P marks ``selected``."""
    N = [("n",) + p for p in pairs]
    rep = {}
    for p in pairs:
        k = cls_key(p)
        rep[k] = min(rep.get(k, p), p)
    Q = sorted(set(rep.values()))
    E = {(("n",) + p, ("n",) + p2) for p in pairs for p2 in pairs if cls_key(p) == cls_key(p2)}
    rho = {(("n",) + p, rep[cls_key(p)]) for p in pairs}
    pi = {p + (("n",) + p,) for p in pairs}
    P = {(("n",) + p,) for p in selected}
    return FiniteStructure(SEL_LANG, {"M": M_elems, "N": N, "Q": Q},
                           {"E": E, "rho": rho, "pi": pi, "P": P}, {}, {})


def selection_of(fusion: FiniteStructure) -> set:
    """Preimage of P under pi."""
    P = fusion.relations["P"]
    return {t[:2] for t in fusion.relations["pi"] if t[2:] in P}


def tournament_codec() -> Codec:
    from .classes import tournaments
    source = tournaments()
    target = _selection_theory(
        "tournament-fusion", lambda a, b: Not(Eq(a, b)),
        lambda a, b, c, d: disj(conj(Eq(a, c), Eq(b, d)), conj(Eq(a, d), Eq(b, c))))

    def enc(T):
        V = T.universe
        pairs = [(u, v) for u in V for v in V if u != v]
        return _selection_encode(V, pairs, lambda p: frozenset(p), T.relations["E"])

    def dec(F):
        return FiniteStructure.relational(source.language, F.carriers["M"], {"E": selection_of(F)})

    return Codec("tournament", source, target, enc, dec,
                 note="a tournament selects one ordering of each unordered pair")


FUNC_LANG = Language(("V",), functions={"f": 1})


def function_codec() -> Codec:
    """Unary function as a selection of pairs (a, b) modulo equal first coordinate."""
    source = ClassSpec(FUNC_LANG, (), name="unary-functions")
    target = _selection_theory("function-fusion", lambda a, b: And(()), lambda a, b, c, d: Eq(a, c))

    def enc(F):
        V = F.universe
        pairs = [(u, v) for u in V for v in V]
        graph = {(u, F.apply("f", u)) for u in V}
        return _selection_encode(V, pairs, lambda p: p[0], graph)

    def dec(S):
        table = {(u,): v for u, v in selection_of(S)}
        return FiniteStructure(FUNC_LANG, {"V": S.carriers["M"]}, {}, {"f": table}, {})

    return Codec("function", source, target, enc, dec, note="the selection is the graph of f")


# ---------------------------------------------------------------------------
# Automorphisms


def automorphism_codec(base: ClassSpec | None = None, count: int = 1) -> Codec:
    """(M; sigma_1..sigma_J) <-> (M, N; tau_0, ..., tau_J), tau_i isomorphisms M -> N."""
    base = base or graphs()
    lang = base.language
    if len(lang.sorts) != 1 or not lang.is_relational:
        raise PreconditionError("automorphism codec needs a single-sorted relational base class")
    sort = lang.sorts[0]
    names = ["sigma"] if count == 1 else [f"sigma{j + 1}" for j in range(count)]
    src_lang = Language(lang.sorts, dict(lang.relations), {g: ((sort,), sort) for g in names})
    x, y = Var("x", sort), Var("y", sort)
    src_axioms = list(base.axioms)
    for g in names:
        gx, gy = _app(g, x), _app(g, y)
        src_axioms.append(Forall((x, y), Implies(Eq(gx, gy), Eq(x, y))))
        for r, profile in lang.relations.items():
            xs = _vars("x", len(profile), sort)
            src_axioms.append(Forall(xs, Iff(Atom(r, xs), Atom(r, tuple(_app(g, v) for v in xs)))))
    source = ClassSpec(src_lang, src_axioms, name=f"{base.name}-with-automorphisms")

    taus = [f"tau{i}" for i in range(count + 1)]
    rels = {}
    for r, profile in lang.relations.items():
        rels[f"{r}M"] = ("M",) * len(profile)
        rels[f"{r}N"] = ("N",) * len(profile)
    tlang = Language(("M", "N"), rels, {t: (("M",), "N") for t in taus})
    u, v = Var("u", "M"), Var("v", "M")
    w = Var("w", "N")
    axioms = []
    for side in "MN":
        for ax in base.axioms:
            axioms.append(_rename(ax, {r: f"{r}{side}" for r in lang.relations}, {sort: side}))
    for t in taus:
        axioms.append(Forall((u, v), Implies(Eq(_app(t, u), _app(t, v)), Eq(u, v))))
        axioms.append(Forall((w,), Exists((u,), Eq(_app(t, u), w))))
        for r, profile in lang.relations.items():
            us = _vars("u", len(profile), "M")
            axioms.append(Forall(us, Iff(Atom(f"{r}M", us), Atom(f"{r}N", tuple(_app(t, z) for z in us)))))
    target = Theory(tlang, axioms, name=f"{base.name}-isomorphism-fusion")

    def enc(S):
        V = S.universe
        N = [("n", e) for e in V]
        trel = {}
        for r in lang.relations:
            trel[f"{r}M"] = S.relations[r]
            trel[f"{r}N"] = {tuple(("n", e) for e in t) for t in S.relations[r]}
        funs = {"tau0": {(e,): ("n", e) for e in V}}
        for j, g in enumerate(names):
            funs[taus[j + 1]] = {(e,): ("n", S.apply(g, e)) for e in V}
        return FiniteStructure(tlang, {"M": V, "N": N}, trel, funs, {})

    def dec(F):
        M = F.carriers["M"]
        inv0 = {F.apply("tau0", e): e for e in M}
        funs = {g: {(e,): inv0[F.apply(taus[j + 1], e)] for e in M} for j, g in enumerate(names)}
        rels = {r: F.relations[f"{r}M"] for r in lang.relations}
        return FiniteStructure(src_lang, {sort: M}, rels, funs, {})

    return Codec("automorphism", source, target, enc, dec,
                 note="decoding composes the inverse of tau_0 after tau_j")


def _app(f, *args):
    return App(f, tuple(args))


def _rename(formula, rels: Mapping, sorts: Mapping, extra=None):
    """Rename relation symbols and variable sorts; ``extra`` prepends arguments to atoms."""
    def term(t):
        if isinstance(t, Var):
            return Var(t.name, sorts.get(t.sort, t.sort))
        raise PreconditionError("renaming supports relational formulas only")

    def go(f):
        if isinstance(f, Atom):
            args = tuple(term(t) for t in f.args)
            return Atom(rels.get(f.rel, f.rel), (extra + args) if extra else args)
        if isinstance(f, Eq):
            return Eq(term(f.left), term(f.right))
        if isinstance(f, Not):
            return Not(go(f.arg))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(go(g) for g in f.args))
        if isinstance(f, (Implies, Iff)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, (Exists, Forall)):
            return type(f)(tuple(term(v) for v in f.vars), go(f.body))
        raise PreconditionError(f"cannot rename {type(f).__name__}")

    return go(formula)


# ---------------------------------------------------------------------------
# Variation


def variation_codec(base: ClassSpec | None = None) -> Codec:
    """Slices R_var(a, .) as L-structures  <->  (M, N; p1, p2, R2) with N = M^2."""
    base = base or graphs()
    lang = base.language
    if len(lang.sorts) != 1 or not lang.is_relational:
        raise PreconditionError("variation codec needs a single-sorted relational base class")
    sort = lang.sorts[0]
    var_name = {r: f"{r}v" for r in lang.relations}
    src_lang = Language(lang.sorts, {var_name[r]: (sort,) * (len(p) + 1) for r, p in lang.relations.items()})
    a = Var("_a", sort)
    src_axioms = [Forall((a,), _rename(ax, var_name, {}, extra=(a,))) for ax in base.axioms]
    source = ClassSpec(src_lang, src_axioms, name=f"{base.name}-variations")

    r2 = {r: f"{r}2" for r in lang.relations}
    tlang = Language(("M", "N"), {r2[r]: ("M",) + ("N",) * len(p) for r, p in lang.relations.items()},
                     {"p1": (("N",), "M"), "p2": (("N",), "M")})
    x, y = Var("x", "N"), Var("y", "N")
    m, k = Var("m", "M"), Var("k", "M")
    p1 = lambda t: _app("p1", t)
    p2 = lambda t: _app("p2", t)
    axioms = [
        Forall((x, y), Implies(conj(Eq(p1(x), p1(y)), Eq(p2(x), p2(y))), Eq(x, y))),
        Forall((m, k), Exists((x,), conj(Eq(p1(x), m), Eq(p2(x), k)))),
    ]
    for r, profile in lang.relations.items():
        ys = _vars("y", len(profile), "N")
        axioms.append(Forall((m,) + ys, Implies(Atom(r2[r], (m,) + ys), conj(*(Eq(p1(z), m) for z in ys)))))
    # each fiber of p1, read through p2, is a base-class structure
    am = Var("_a", "M")
    for ax in base.axioms:
        axioms.append(Forall((am,), _slice_formula(ax, am, r2)))
    target = Theory(tlang, axioms, name=f"{base.name}-variation-fusion")

    def enc(S):
        V = S.universe
        N = [(u, v) for u in V for v in V]
        rels = {}
        for r, rv in var_name.items():
            rels[r2[r]] = {(t[0],) + tuple((t[0], z) for z in t[1:]) for t in S.relations[rv]}
        funs = {"p1": {(c,): c[0] for c in N}, "p2": {(c,): c[1] for c in N}}
        return FiniteStructure(tlang, {"M": V, "N": N}, rels, funs, {})

    def dec(F):
        M = F.carriers["M"]
        cell = {(F.apply("p1", c), F.apply("p2", c)): c for c in F.carriers["N"]}
        rels = {}
        for r, profile in lang.relations.items():
            R = F.relations[r2[r]]
            rels[var_name[r]] = {(u,) + bs for u in M for bs in itertools.product(M, repeat=len(profile))
                                 if (u,) + tuple(cell[(u, b)] for b in bs) in R}
        return FiniteStructure(src_lang, {sort: M}, rels, {}, {})

    return Codec("variation", source, target, enc, dec, default_size=3,
                 note="output has |M| + |M|^2 elements")


def _slice_formula(formula, a, r2):
    """Relativize a base axiom to the p1-fiber over ``a``: quantifiers range over N with p1 = a."""
    def term(t):
        return Var(t.name, "N")

    def in_fiber(vs):
        return conj(*(Eq(_app("p1", term(v)), a) for v in vs))

    def go(f):
        if isinstance(f, Atom):
            return Atom(r2[f.rel], (a,) + tuple(term(t) for t in f.args))
        if isinstance(f, Eq):
            return Eq(term(f.left), term(f.right))
        if isinstance(f, Not):
            return Not(go(f.arg))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(go(g) for g in f.args))
        if isinstance(f, (Implies, Iff)):
            return type(f)(go(f.left), go(f.right))
        vs = tuple(term(v) for v in f.vars)
        if isinstance(f, Forall):
            return Forall(vs, Implies(in_fiber(f.vars), go(f.body)))
        if isinstance(f, Exists):
            return Exists(vs, conj(in_fiber(f.vars), go(f.body)))
        raise PreconditionError(f"cannot relativize {type(f).__name__}")

    return go(formula)


# ---------------------------------------------------------------------------
# Round trips


@dataclass
class RoundtripEntry:
    source: FiniteStructure
    status: str  # "pass", "fail" or "skipped"
    isomorphism: dict | None = None
    encoded_sizes: dict | None = None
    detail: str = ""


@dataclass
class RoundtripReport:
    codec: str
    size_limit: int
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "skipped": 0}
        for e in self.entries:
            out[e.status] += 1
        return out


def roundtrip_check(codec, size_limit: int | None = None, budget: int | None = None) -> RoundtripReport:
    """Encode every source representative up to ``size_limit``, check the target axioms,
    decode, and exhibit an isomorphism back to the input."""
    codec = get_codec(codec)
    size_limit = codec.default_size if size_limit is None else size_limit
    report = RoundtripReport(codec.name, size_limit)
    for n in range(size_limit + 1):
        for X in enumerate_models(codec.source, n, budget):
            try:
                Y = codec.encode(X)
            except PreconditionError as exc:
                report.entries.append(RoundtripEntry(X, "skipped", detail=str(exc)))
                continue
            v = codec.target.violation(Y)
            if v is not None:
                report.entries.append(RoundtripEntry(X, "fail", encoded_sizes=Y.sizes,
                                                     detail=f"target axiom fails: {v[0]}"))
                continue
            Z = codec.decode_fn(Y)
            iso = find_isomorphism(Z, X)
            if iso is None:
                report.entries.append(RoundtripEntry(X, "fail", encoded_sizes=Y.sizes,
                                                     detail="decoded structure is not isomorphic to the input"))
                continue
            report.entries.append(RoundtripEntry(X, "pass", dict(iso.mapping), Y.sizes))
    return report


# ---------------------------------------------------------------------------
# Fusion models and the triangle-free reduct


HENSON_FAMILY: LanguageFamily = make_language_family([hyper_edge_class(1).language, hyper_edge_class(2).language])


@dataclass(frozen=True)
class FusionModel:
    structure: FiniteStructure
    family: LanguageFamily
    classes: Mapping  # index -> ClassSpec over the member language

    def reduct(self, index) -> FiniteStructure:
        return self.structure.reduct(self.family[index])

    @property
    def reducts(self) -> dict:
        return {i: self.reduct(i) for i in self.family.indices}

    def violation(self):
        """(index, axiom, assignment) for the first member class a reduct leaves, else None."""
        for i, spec in self.classes.items():
            v = spec.violation(self.reduct(i))
            if v is not None:
                return (i,) + tuple(v)
        return None


def henson_fusion(structure: FiniteStructure) -> FusionModel:
    return FusionModel(structure, HENSON_FAMILY, {1: hyper_edge_class(1), 2: hyper_edge_class(2)})


def henson_reduct(fusion) -> FiniteStructure:
    """Graph of pairs joined in both E1 and E2; triangle-free whenever the reducts are in k1, k2."""
    if isinstance(fusion, FiniteStructure):
        fusion = henson_fusion(fusion)
    v = fusion.violation()
    if v is not None:
        i, ax, env = v
        raise ClassViolation(f"reduct {i} leaves {fusion.classes[i].name}", ax, env)
    M = fusion.structure
    E1, E2 = M.relations["E1"], M.relations["E2"]
    G = FiniteStructure.relational(graphs().language, M.universe, {"E": E1 & E2})
    E = G.relations["E"]
    for x, y in E:
        for z in M.universe:
            if (y, z) in E and (z, x) in E:
                # an E1-triangle is a hyperedge, an E2-triangle is not
                raise AssertionError(f"triangle {element_name(x)}, {element_name(y)}, {element_name(z)}")
    return G


for _factory in (hypergraph_pi_codec, hypergraph_dis_codec, tournament_codec, function_codec,
                 automorphism_codec, variation_codec):
    register_codec(_factory())

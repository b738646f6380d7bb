"""Reference implementations written without the library's evaluator or enumerator.

Structures here are plain dicts: {"n": size, "rel": {name: set of tuples},
"fun": {name: dict args->value}, "const": {name: value}} over elements 0..n-1.
"""

import itertools
import random

from fusionlab.logic import (
    And, App, Atom, Const, Eq, Exists, Forall, Iff, Implies, Language, Not, Or, Var,
)


def term_value(t, S, env):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        return S["const"][t.name]
    return S["fun"][t.func][tuple(term_value(a, S, env) for a in t.args)]


def holds(f, S, env):
    if isinstance(f, Eq):
        return term_value(f.left, S, env) == term_value(f.right, S, env)
    if isinstance(f, Atom):
        return tuple(term_value(a, S, env) for a in f.args) in S["rel"][f.rel]
    if isinstance(f, Not):
        return not holds(f.arg, S, env)
    if isinstance(f, And):
        return all(holds(a, S, env) for a in f.args)
    if isinstance(f, Or):
        return any(holds(a, S, env) for a in f.args)
    if isinstance(f, Implies):
        return (not holds(f.left, S, env)) or holds(f.right, S, env)
    if isinstance(f, Iff):
        return holds(f.left, S, env) == holds(f.right, S, env)
    if isinstance(f, (Exists, Forall)):
        names = [v.name for v in f.vars]
        vals = (holds(f.body, S, {**env, **dict(zip(names, c))})
                for c in itertools.product(range(S["n"]), repeat=len(names)))
        return any(vals) if isinstance(f, Exists) else all(vals)
    raise TypeError(f)


def all_structures(language: Language, n: int):
    """Every labeled single-sorted structure on 0..n-1."""
    elems = range(n)
    rel_choices = []
    for r, prof in language.relations.items():
        tuples = list(itertools.product(elems, repeat=len(prof)))
        rel_choices.append([(r, frozenset(t for t, b in zip(tuples, bits) if b))
                            for bits in itertools.product((0, 1), repeat=len(tuples))])
    fun_choices = []
    for f, (args, _) in language.functions.items():
        keys = list(itertools.product(elems, repeat=len(args)))
        fun_choices.append([(f, dict(zip(keys, vals))) for vals in itertools.product(elems, repeat=len(keys))])
    const_choices = [[(c, v) for v in elems] for c in language.constants]
    for rs in itertools.product(*rel_choices):
        for fs in itertools.product(*fun_choices):
            for cs in itertools.product(*const_choices):
                yield {"n": n, "rel": dict(rs), "fun": dict(fs), "const": dict(cs)}


def canonical(S):
    """Least relabeling code; equal codes iff isomorphic."""
    n = S["n"]
    best = None
    for p in itertools.permutations(range(n)):
        code = (tuple(sorted((r, tuple(sorted(tuple(p[x] for x in t) for t in ts))) for r, ts in S["rel"].items())),
                tuple(sorted((f, tuple(sorted((tuple(p[x] for x in k), p[v]) for k, v in tbl.items())))
                             for f, tbl in S["fun"].items())),
                tuple(sorted((c, p[v]) for c, v in S["const"].items())))
        if best is None or code < best:
            best = code
    return best


def iso_count(language, n, member=lambda S: True):
    return len({canonical(S) for S in all_structures(language, n) if member(S)})


def from_library(M):
    """Convert a library FiniteStructure over one sort to the dict form (elements renumbered)."""
    idx = {e: i for i, e in enumerate(M.universe)}
    return {"n": len(idx),
            "rel": {r: {tuple(idx[x] for x in t) for t in ts} for r, ts in M.relations.items()},
            "fun": {f: {tuple(idx[x] for x in k): idx[v] for k, v in tbl.items()} for f, tbl in M.functions.items()},
            "const": {c: idx[v] for c, v in M.constants.items()}}


# ---------------------------------------------------------------------------
# random quantifier-free formulas


def random_term(rng, language, xs, depth):
    funs = list(language.functions)
    consts = list(language.constants)
    roll = rng.random()
    if depth > 0 and funs and roll < 0.45:
        f = rng.choice(funs)
        arity = len(language.functions[f][0])
        return App(f, tuple(random_term(rng, language, xs, depth - 1) for _ in range(arity)))
    if consts and roll < 0.65:
        return Const(rng.choice(consts))
    return Var(rng.choice(xs), "V")


def random_atom(rng, language, xs, depth=2):
    rels = list(language.relations)
    if rels and rng.random() < 0.6:
        r = rng.choice(rels)
        return Atom(r, tuple(random_term(rng, language, xs, depth) for _ in language.relations[r]))
    return Eq(random_term(rng, language, xs, depth), random_term(rng, language, xs, depth))


def random_qf(rng, language, xs=("x", "y"), size=4):
    if size <= 1:
        return random_atom(rng, language, xs)
    k = rng.random()
    if k < 0.15:
        return Not(random_qf(rng, language, xs, size - 1))
    left = rng.randint(1, size - 1)
    a, b = random_qf(rng, language, xs, left), random_qf(rng, language, xs, size - left)
    if k < 0.45:
        return And((a, b))
    if k < 0.75:
        return Or((a, b))
    if k < 0.9:
        return Implies(a, b)
    return Iff(a, b)


TWO_SYMBOL_LANGUAGES = {
    "fP": Language(("V",), {"P": 1}, {"f": 1}),
    "fc": Language(("V",), {}, {"f": 1}, {"c": "V"}),
    "Pc": Language(("V",), {"P": 1}, {}, {"c": "V"}),
    "cd": Language(("V",), {}, {}, {"c": "V", "d": "V"}),
    "EP": Language(("V",), {"E": 2, "P": 1}),
}


def formula_corpus(seed=0, count=200):
    rng = random.Random(seed)
    names = sorted(TWO_SYMBOL_LANGUAGES)
    out = []
    for i in range(count):
        name = names[i % len(names)]
        out.append((name, random_qf(rng, TWO_SYMBOL_LANGUAGES[name], size=rng.randint(1, 5))))
    return out


# ---------------------------------------------------------------------------
# closures


def least_closed_superset(universe, seed, closed):
    """Brute force over all supersets: the intersection of those ``closed`` accepts."""
    seed = frozenset(seed)
    rest = [e for e in universe if e not in seed]
    best = frozenset(universe)
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            s = seed | frozenset(extra)
            if closed(s):
                best &= s
    return best


# ---------------------------------------------------------------------------
# graphs


def clebsch_graph():
    """16 vertices (4-bit words), adjacent when they differ in one bit or in all four."""
    V = range(16)
    E = {(a, b) for a in V for b in V if bin(a ^ b).count("1") in (1, 4)}
    return list(V), E


def triangle_count(n_or_elems, E):
    elems = range(n_or_elems) if isinstance(n_or_elems, int) else n_or_elems
    return sum(1 for a, b, c in itertools.combinations(elems, 3) if (a, b) in E and (b, c) in E and (a, c) in E)


def extension_ok(elems, E, k):
    """Every triangle-free one-point extension type over every set of at most k points is realized."""
    elems = list(elems)
    for size in range(k + 1):
        for A in itertools.combinations(elems, size):
            for bits in itertools.product((0, 1), repeat=size):
                nbrs = [a for a, b in zip(A, bits) if b]
                if any((p, q) in E for p, q in itertools.combinations(nbrs, 2)):
                    continue  # would close a triangle
                if not any(all(((d, a) in E) == bool(b) for a, b in zip(A, bits)) for d in elems if d not in A):
                    return False
    return True


def set_structures(n, arities):
    """Labeled structures whose relations are irreflexive and fully symmetric (unary: any subset)."""
    elems = range(n)
    choices = []
    for r, k in arities.items():
        sets = list(itertools.combinations(elems, k))
        opts = []
        for bits in itertools.product((0, 1), repeat=len(sets)):
            chosen = [s for s, b in zip(sets, bits) if b]
            opts.append((r, frozenset(p for s in chosen for p in itertools.permutations(s))))
        choices.append(opts)
    for rs in itertools.product(*choices):
        yield {"n": n, "rel": dict(rs), "fun": {}, "const": {}}


def set_iso_count(n, arities, member=lambda S: True):
    return len({canonical(S) for S in set_structures(n, arities) if member(S)})

"""``fusionlab`` command-line workbench.

Every command builds a Report. Text goes to stdout unless ``--format machine``;
``--report FILE`` also writes the machine rendering. Exit status: 2 for usage,
parse and spec errors, 1 when a check failed, 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import closures, fraisse, interpretations, normal_forms, suites
from .classes import enumerate_models
from .errors import FusionLabError, TypeClashError
from .logic import free_vars, make_language_family, parse_formula, to_text
from .report import Report, emit_report
from .specfile import load_class, load_spec, load_structure, parse_elements, structure_to_json
from .structures import automorphisms, evaluate


class UsageError(FusionLabError):
    pass


# ---------------------------------------------------------------------------
# helpers


def _language(args):
    return load_spec(args.lang)[0]


def _structure(args, attr="structure", language=None):
    return load_structure(getattr(args, attr), language)


def _var_tuple(phi, names):
    by_name = {v.name: v for v in free_vars(phi)}
    out = []
    for n in parse_elements(names):
        if n not in by_name:
            raise UsageError(f"variable {n} is not free in the formula")
        out.append(by_name[n])
    return tuple(out)


def _write_structure(path, M):
    Path(path).write_text(json.dumps(structure_to_json(M), indent=2) + "\n")


def _parse_assignment(phi, text):
    by_name = {v.name: v for v in free_vars(phi)}
    env = {}
    for part in parse_elements(text):
        if "=" not in part:
            raise UsageError(f"assignment {part!r} must read var=element")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in by_name:
            raise UsageError(f"variable {k} is not free in the formula")
        env[by_name[k]] = v
    return env


def _bounded_entry(text, spec, size_limit):
    """``formula ; x vars ; y vars ; k``, certified on the class up to size_limit."""
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 4:
        raise UsageError(f"bounded entry {text!r} must read 'formula; x; y; k'")
    phi = parse_formula(parts[0], spec.language)
    return normal_forms.bounded_from_check(phi, _var_tuple(phi, parts[1]), _var_tuple(phi, parts[2]), spec,
                                           int(parts[3]), size_limit)


def _operator(name):
    if name in closures.OPERATORS:
        return closures.OPERATORS[name]
    if name == "identity":
        return closures.identity_operator()
    if name == "generated":
        return closures.generated_operator()
    if name.startswith("partners:"):
        return closures.partner_operator(name.split(":", 1)[1])
    raise UsageError(f"unknown operator {name!r}; use identity, generated or partners:<rel>")


def _family_config(members):
    if not members:
        return suites.henson_config()
    specs = [load_class(m) for m in members]
    family = make_language_family([s.language for s in specs])
    return fraisse.FamilyConfig(family, {i + 1: s for i, s in enumerate(specs)}, True, "family")


# ---------------------------------------------------------------------------
# commands; each fills ``report``


def cmd_flatten(args, report):
    lang = _language(args)
    phi = parse_formula(args.formula, lang)
    ds = normal_forms.flatten_to_eflat(phi, lang, args.literal_budget)
    report.add("flatten", True, detail=f"{len(ds)} E-flat disjunct(s)", info=True)
    report.data["disjuncts"] = [str(d) for d in ds]


def cmd_split(args, report):
    config = _family_config(args.member)
    phi = parse_formula(args.formula, config.family.union)
    pieces = []
    for d in normal_forms.flatten_to_eflat(phi, config.family.union):
        parts = normal_forms.split_flat_by_language(d.body, config.family)
        pieces.append({f"L{i}": [str(l) for l in lits] for i, lits in parts.items()})
    report.add("split", True, detail=f"{len(pieces)} disjunct(s)", info=True)
    report.data["parts"] = pieces


def cmd_fdiag(args, report):
    M = _structure(args, language=_language(args) if args.lang else None)
    diagram = normal_forms.flat_diagram(M)
    shown = diagram if args.all else [l for l in diagram if l.positive]
    report.add("flat diagram", True, detail=f"{len(diagram)} literals, {len(shown)} shown", info=True)
    report.data["literals"] = [str(l) for l in shown]


def cmd_morleyize(args, report):
    lang = _language(args)
    formulas = [parse_formula(f, lang) for f in args.formula]
    res = normal_forms.morleyize(lang, formulas, prefix=args.prefix)
    report.add("morleyize", True, detail=f"{len(formulas)} new symbol(s)", info=True)
    report.data["axioms"] = [to_text(a, res.language) for a in res.axioms]
    if args.structure:
        M = res.expand(load_structure(args.structure, lang))
        report.data["expansion"] = structure_to_json(M)


def cmd_bounded(args, report):
    spec = load_class(args.spec)
    phi = parse_formula(args.formula, spec.language)
    x, y = _var_tuple(phi, args.x), _var_tuple(phi, args.y)
    v = normal_forms.check_bounded(phi, x, y, spec, args.k, args.max_size, args.budget)
    report.add(f"at most {args.k} witness tuple(s)", v.verified, v.label)
    if not v.verified:
        report.witness("too many witnesses", v.structure, x={k.name: val for k, val in v.x_assignment.items()},
                       witnesses=[list(w) for w in v.witnesses])


def cmd_eval(args, report):
    lang = _language(args) if args.lang else None
    M = _structure(args, language=lang)
    phi = parse_formula(args.formula, M.language)
    value = evaluate(M, phi, _parse_assignment(phi, args.assign))
    report.add("eval", True, detail="true" if value else "false", info=True)
    report.data["value"] = value


def cmd_enum(args, report):
    spec = load_class(args.spec)
    models = enumerate_models(spec, args.size, args.budget)
    report.add(f"{spec.name} members of size {args.size}", True, detail=f"{len(models)} up to isomorphism",
               info=True)
    report.data["count"] = len(models)
    if not args.count_only:
        report.data["structures"] = [structure_to_json(M) for M in models]


def cmd_aut(args, report):
    M = _structure(args, language=_language(args) if args.lang else None)
    auts = automorphisms(M, parse_elements(args.fixed), args.budget)
    report.add("automorphisms form a group", auts.is_group(), detail=f"{len(auts)} automorphism(s)")
    report.data["count"] = len(auts)
    report.data["orbits"] = [[list(t) for t in o] for o in auts.orbits(args.arity)]


def cmd_class_check(args, report):
    spec = load_class(args.spec)
    props = [p.strip() for p in args.properties.split(",") if p.strip()]
    canon = {p.lower(): p for p in fraisse.PROPERTIES}
    try:
        props = [canon[p.lower()] for p in props]
    except KeyError as exc:
        raise UsageError(f"unknown property {exc.args[0]!r}; use jep, ap, dap") from None
    res = fraisse.check_class_properties(spec, args.max_size, props, args.budget)
    for p in props:
        v = res.verdicts[p]
        report.add(f"{spec.name} {p}", v.holds, v.label, f"{v.checked} problems")
        if v.witness is not None:
            w = v.witness
            report.witness(f"{p} failure: base", w.base)
            report.witness(f"{p} failure: left extension", w.left)
            report.witness(f"{p} failure: right extension", w.right)


def cmd_amalgam(args, report):
    spec = load_class(args.spec)
    base, left, right = (load_structure(p, spec.language) for p in (args.base, args.left, args.right))
    ident = {e: e for e in base.elements}
    problem = fraisse.AmalgamProblem(base, left, right, ident, dict(ident))
    D, _, _ = fraisse.free_amalgam(problem)
    v = spec.violation(D)
    report.add("free amalgam stays in the class", v is None,
               detail="" if v is None else f"violates {to_text(v[0])}")
    report.witness("free amalgam", D)


def cmd_generic_build(args, report):
    spec = load_class(args.spec)
    g = fraisse.build_generic(spec, args.budget, args.ext_size, args.seed, args.completion)
    report.seed = args.seed
    report.add("build", True, f"budget {args.budget}",
               f"{len(g.structure.universe)} points, {g.pending} pending, quiescent={g.quiescent}", info=True)
    if args.verify:
        ext = fraisse.check_extension_axioms(g.structure, spec, args.ext_size)
        report.add("extension axioms", ext.satisfied, f"subsets up to size {args.ext_size}",
                   f"{ext.checked - len(ext.missing)}/{ext.checked} realized")
    if args.out:
        _write_structure(args.out, g.structure)
    if args.log:
        Path(args.log).write_text(json.dumps([{"index": s.index, "subset": list(s.subset),
                                               "type": list(s.type_code), "element": s.element,
                                               "atoms": [[r, list(t)] for r, t in s.atoms]}
                                              for s in g.log], indent=1) + "\n")
    if not args.out:
        report.witness("generic model", g.structure)


def cmd_generic_verify(args, report):
    spec = load_class(args.spec)
    M = load_structure(args.structure, spec.language)
    v = spec.violation(M)
    report.add("model lies in the class", v is None, detail="" if v is None else to_text(v[0]))
    ext = fraisse.check_extension_axioms(M, spec, args.ext_size)
    report.add("extension axioms", ext.satisfied, f"subsets up to size {args.ext_size}",
               f"{ext.checked - len(ext.missing)}/{ext.checked} realized")
    report.data["missing"] = [f"{list(s)}: {t}" for s, _, t in ext.missing[:args.show]]


def cmd_expansion_check(args, report):
    base, exp = load_class(args.base), load_class(args.expansion)
    v = fraisse.check_fraisse_expansion(base, exp, args.max_size, args.budget)
    report.add(f"{exp.name} expands {base.name}", v.verified, v.label, f"{v.checked} checks")
    if not v.verified:
        w = v.witness
        for i, part in enumerate(w if isinstance(w, tuple) else (w,)):
            if hasattr(part, "language"):
                report.witness(f"{v.condition} witness {i}", part)


def cmd_realize(args, report):
    config = _family_config(args.member)
    model = load_structure(args.structure, config.family.union)
    doc = json.loads(Path(args.types).read_text())
    base, point = tuple(doc.get("base", [])), doc.get("point", "c")
    types = {}
    for key, table in doc["types"].items():
        i = int(key)
        truth = {}
        given = {k.replace(" ", ""): bool(v) for k, v in table.items()}
        for r, t in fraisse.type_atoms(config.family[i], base, point):
            truth[(r, t)] = given.pop(f"{r}({','.join(t)})", False)
        if given:
            raise UsageError(f"type {i} mentions atoms outside its language: {', '.join(sorted(given))}")
        types[i] = fraisse.make_qftype(model, base, point, i, truth, config)
    try:
        out = fraisse.realize_joint_type(model, types, config)
    except TypeClashError as exc:
        report.add("joint type realized", False, detail=str(exc))
        report.data["clash"] = str(exc.literal)
        return
    report.add("joint type realized", True, detail=f"point {point} added")
    report.witness("realization", out)


def cmd_closure_ccl(args, report):
    M = _structure(args, language=_language(args) if args.lang else None)
    ops = [_operator(n) for n in args.operator]
    c = closures.ccl_fixpoint(M, parse_elements(args.seed_set), ops, args.strategy)
    report.add("ccl", True, detail=f"{len(c)} element(s)", info=True)
    report.data["closure"] = sorted(c)


def cmd_closure_bcl(args, report):
    spec = load_class(args.spec)
    M = load_structure(args.structure, spec.language)
    library = [_bounded_entry(e, spec, args.max_size) for e in args.entry]
    c = closures.bcl_closure(M, parse_elements(args.seed_set), library)
    report.add("bcl", True, f"library certified up to size {args.max_size}", f"{len(c)} element(s)", info=True)
    report.data["closure"] = sorted(c)


def cmd_closure_acl(args, report):
    spec = load_class(args.spec)
    M = load_structure(args.structure, spec.language)
    v = closures.acl_test_duplication(spec, M, parse_elements(args.base), args.point, args.budget or 1)
    report.add(f"{args.point} outside acl of the base", v.non_algebraic, v.label)
    if v.witness is not None:
        report.witness("extension with a duplicate", v.witness)


def cmd_indep_eval(args, report):
    lang = _language(args) if args.lang else None
    M = _structure(args, language=lang)
    cfg = closures.TripleConfig.of(M, parse_elements(args.A), parse_elements(args.B), parse_elements(args.C))
    value = closures.indep_eval(args.relation, cfg)
    report.add(f"A independent from B over C ({args.relation})", True, detail=str(value).lower(), info=True)
    report.data["value"] = value


def cmd_indep_check(args, report):
    spec = load_class(args.spec)
    expansion = load_class(args.expansion) if args.expansion else None
    r = closures.check_indep_axioms(args.relation, spec, args.axiom, expansion, args.max_size, args.budget)
    report.add(f"{args.relation} {args.axiom}", r.holds, r.label, f"{r.checked} configurations")
    if r.witness:
        w = dict(r.witness)
        host = w.pop("host", None)
        if "forced" in w:
            w["forced"] = [("" if val else "!") + f"{rel}({','.join(map(str, t))})" for rel, t, val in w["forced"]]
        w.pop("automorphism", None)
        report.witness(f"{args.axiom} failure", host, **w)


def cmd_encode(args, report, direction="encode"):
    codec = interpretations.get_codec(args.codec)
    cls = codec.source if direction == "encode" else codec.target
    M = load_structure(args.structure, cls.language)
    out = getattr(codec, direction)(M)
    report.add(direction, True, detail="sizes " + ", ".join(f"{s}={n}" for s, n in out.sizes.items()), info=True)
    if args.out:
        _write_structure(args.out, out)
    else:
        report.witness(f"{direction}d structure", out)


def cmd_decode(args, report):
    cmd_encode(args, report, "decode")


def cmd_roundtrip(args, report):
    r = interpretations.roundtrip_check(args.codec, args.max_size, args.budget)
    c = r.counts()
    report.add(f"{args.codec} round trip", r.passed, f"size <= {r.size_limit}",
               f"{c['pass']} passed, {c['fail']} failed, {c['skipped']} skipped")
    bad = next((e for e in r.entries if e.status == "fail"), None)
    if bad is not None:
        report.witness(bad.detail, bad.source)


def cmd_henson(args, report):
    sub = suites.suite_henson([args.seed], args.budget, args.ext_size, args.coverage)
    report.seed = args.seed
    report.verdicts += sub.verdicts
    report.witnesses += sub.witnesses
    if args.out:
        g = fraisse.build_generic(suites.fusion_class(), args.budget, args.ext_size, args.seed)
        _write_structure(args.out, interpretations.henson_reduct(g.structure))


def cmd_suite(args, report):
    fn = suites.SUITES[args.name]
    sub = fn(seed=args.seed) if args.name == "closure-laws" else fn()
    report.seed = sub.seed
    report.verdicts += sub.verdicts
    report.witnesses += sub.witnesses
    report.data.update(sub.data)


# ---------------------------------------------------------------------------
# parser


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("text", "machine"), default=argparse.SUPPRESS)
    p.add_argument("--report", metavar="FILE", default=argparse.SUPPRESS, help="also write the machine report here")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker cap (commands run sequentially)")
    p.add_argument("--budget", type=int, default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fusionlab", description="Workbench for fusions of finite structures.")
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    parser.add_argument("--report", metavar="FILE")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--budget", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, fn, parent=sub, **kw):
        p = parent.add_parser(name, parents=[common], **kw)
        p.set_defaults(fn=fn)
        return p

    p = cmd("flatten", cmd_flatten, help="E-flat disjunction of a quantifier-free formula")
    p.add_argument("--lang", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--literal-budget", type=int, default=normal_forms.DEFAULT_LITERAL_BUDGET)

    p = cmd("split", cmd_split, help="split flat literals by member language")
    p.add_argument("--member", action="append", default=[], help="member class spec (default: the henson family)")
    p.add_argument("--formula", required=True)

    p = cmd("fdiag", cmd_fdiag, help="flat diagram of a structure")
    p.add_argument("--structure", required=True)
    p.add_argument("--lang")
    p.add_argument("--all", action="store_true", help="include negative literals")

    p = cmd("morleyize", cmd_morleyize, help="add defined relation symbols")
    p.add_argument("--lang", required=True)
    p.add_argument("--formula", action="append", required=True)
    p.add_argument("--prefix", default="R")
    p.add_argument("--structure", help="also print the canonical expansion of this structure")

    p = cmd("bounded", cmd_bounded, help="check a witness bound on small class members")
    p.add_argument("--spec", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--x", default="")
    p.add_argument("--y", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--max-size", type=int, default=3)

    p = cmd("eval", cmd_eval, help="evaluate a formula in a structure")
    p.add_argument("--structure", required=True)
    p.add_argument("--lang")
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", default="", help="x=a,y=b")

    p = cmd("enum", cmd_enum, help="class members of one size up to isomorphism")
    p.add_argument("--spec", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--count-only", action="store_true")

    p = cmd("aut", cmd_aut, help="automorphism group and orbits")
    p.add_argument("--structure", required=True)
    p.add_argument("--lang")
    p.add_argument("--fixed", default="")
    p.add_argument("--arity", type=int, default=1)

    cls = sub.add_parser("class", help="class-level checks").add_subparsers(dest="sub", required=True)
    p = cmd("check", cmd_class_check, cls, help="JEP/AP/dAP up to a size")
    p.add_argument("--spec", required=True)
    p.add_argument("--max-size", type=int, default=4)
    p.add_argument("--properties", default="jep,ap,dap")

    p = cmd("amalgam", cmd_amalgam, help="free amalgam of two extensions over a shared base")
    p.add_argument("--spec", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)

    gen = sub.add_parser("generic", help="generic model builder").add_subparsers(dest="sub", required=True)
    p = cmd("build", cmd_generic_build, gen)
    p.add_argument("--spec", required=True)
    p.add_argument("--ext-size", type=int, default=2)
    p.add_argument("--completion", choices=("greedy", "random", "minimal"), default="greedy")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.add_argument("--log")
    p = cmd("verify", cmd_generic_verify, gen)
    p.add_argument("--spec", required=True)
    p.add_argument("--structure", required=True)
    p.add_argument("--ext-size", type=int, default=2)
    p.add_argument("--show", type=int, default=10, help="missing extensions to list")

    exp = sub.add_parser("expansion", help="expansion checks").add_subparsers(dest="sub", required=True)
    p = cmd("check", cmd_expansion_check, exp)
    p.add_argument("--base", required=True)
    p.add_argument("--expansion", required=True)
    p.add_argument("--max-size", type=int, default=4)

    p = cmd("realize", cmd_realize, help="realize compatible member types by one new point")
    p.add_argument("--structure", required=True)
    p.add_argument("--types", required=True)
    p.add_argument("--member", action="append", default=[])

    clo = sub.add_parser("closure", help="closure operators").add_subparsers(dest="sub", required=True)
    p = cmd("ccl", cmd_closure_ccl, clo)
    p.add_argument("--structure", required=True)
    p.add_argument("--lang")
    p.add_argument("--set", dest="seed_set", default="")
    p.add_argument("--operator", action="append", default=[])
    p.add_argument("--strategy", choices=("round-robin", "worklist"), default="round-robin")
    p = cmd("bcl", cmd_closure_bcl, clo)
    p.add_argument("--spec", required=True)
    p.add_argument("--structure", required=True)
    p.add_argument("--set", dest="seed_set", default="")
    p.add_argument("--entry", action="append", default=[], help="'formula; x; y; k'")
    p.add_argument("--max-size", type=int, default=3)
    p = cmd("acl-test", cmd_closure_acl, clo)
    p.add_argument("--spec", required=True)
    p.add_argument("--structure", required=True)
    p.add_argument("--base", default="")
    p.add_argument("--point", required=True)

    ind = sub.add_parser("indep", help="independence relations").add_subparsers(dest="sub", required=True)
    p = cmd("eval", cmd_indep_eval, ind)
    p.add_argument("--relation", required=True, choices=sorted(closures.RELATIONS))
    p.add_argument("--structure", required=True)
    p.add_argument("--lang")
    p.add_argument("--A", default="")
    p.add_argument("--B", default="")
    p.add_argument("--C", default="")
    p = cmd("check", cmd_indep_check, ind)
    p.add_argument("--relation", required=True, choices=sorted(closures.RELATIONS))
    p.add_argument("--axiom", required=True, choices=closures.AXIOMS)
    p.add_argument("--spec", default="builtin:graphs")
    p.add_argument("--expansion")
    p.add_argument("--max-size", type=int, default=4)

    for name, fn in (("encode", cmd_encode), ("decode", cmd_decode)):
        p = cmd(name, fn, help=f"{name} through a codec")
        p.add_argument("--codec", required=True, choices=list(interpretations.CODECS))
        p.add_argument("--structure", required=True)
        p.add_argument("--out")
    p = cmd("roundtrip", cmd_roundtrip, help="decode(encode(M)) = M on all small members")
    p.add_argument("--codec", required=True, choices=list(interpretations.CODECS))
    p.add_argument("--max-size", type=int)

    p = cmd("henson", cmd_henson, help="fusion build and its triangle-free reduct")
    p.add_argument("--ext-size", type=int, default=2)
    p.add_argument("--coverage", type=int, default=3)
    p.add_argument("--out")

    p = cmd("suite", cmd_suite, help="packaged reproduction suites")
    p.add_argument("name", choices=list(suites.SUITES))
    return parser


_DEFAULT_BUDGETS = {"henson": 40, "build": 32}


def run_command(argv) -> tuple:
    """(exit status, report or None). Never raises for user errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    leaf = args.sub if getattr(args, "sub", None) else args.command
    if args.budget is None:
        args.budget = _DEFAULT_BUDGETS.get(leaf)
    report = Report([a for a in argv if a], seed=None)
    start = time.perf_counter()
    random.seed(args.seed)
    try:
        args.fn(args, report)
    except FusionLabError as exc:
        print(f"fusionlab: error: {exc}", file=sys.stderr)
        return 2, None
    except (OSError, ValueError, KeyError) as exc:
        print(f"fusionlab: error: {exc}", file=sys.stderr)
        return 2, None
    report.elapsed_ms = int((time.perf_counter() - start) * 1000)
    sys.stdout.write(emit_report(report, args.format))
    if args.report:
        Path(args.report).write_text(emit_report(report, "machine"))
    return report.exit_code, report


def main(argv=None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else list(argv))
    return code


if __name__ == "__main__":
    sys.exit(main())

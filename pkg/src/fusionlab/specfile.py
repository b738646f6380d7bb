"""Spec files (language and class blocks) and the structure JSON format.

A spec file looks like::

    # graphs with a clique predicate
    language {
      sorts V;
      relations E: V V; P: V;
      functions f: V -> V;
      constants c: V;
    }
    class clique-graphs {
      axiom "forall x: !E(x,x)";
      forbid "k3.json";
    }

Relation arities may be written ``E/2`` in single-sorted languages.
``builtin:<name>`` in place of a path selects a library class.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .classes import BUILTIN, ClassSpec, builtin_class
from .errors import FusionLabError, ParseError
from .logic import DEFAULT_SORT, Language
from .structures import FiniteStructure, element_name

_TOKEN = re.compile(r'\s*(?:(#[^\n]*)|("(?:[^"\\]|\\.)*")|(->)|([A-Za-z_](?:[A-Za-z0-9_]|-(?!>))*)|(\d+)|([{};:,/]))')


class SpecFileError(ParseError):
    pass


def _tokens(text):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SpecFileError(f"unexpected character {text[pos:pos + 1]!r}", pos, text)
        pos = m.end()
        if m.group(1):
            continue
        if m.group(2):
            out.append(("str", json.loads(m.group(2)), m.start(2)))
        else:
            tok = next(g for g in m.groups()[2:] if g)
            out.append(("tok", tok, m.start()))
    return out


class _Reader:
    def __init__(self, text):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def take(self, expected=None):
        if self.i >= len(self.toks):
            raise SpecFileError(f"unexpected end of spec (wanted {expected or 'more input'})", len(self.text), self.text)
        kind, val, pos = self.toks[self.i]
        if expected is not None and val != expected:
            raise SpecFileError(f"expected {expected!r}, found {val!r}", pos, self.text)
        self.i += 1
        return val

    def string(self):
        kind, val, pos = self.toks[self.i]
        if kind != "str":
            raise SpecFileError(f"expected a quoted string, found {val!r}", pos, self.text)
        self.i += 1
        return val

    def names_until(self, *stops):
        out = []
        while self.peek() not in stops:
            out.append(self.take())
        return out


def _parse_language_block(r: _Reader) -> Language:
    r.take("{")
    sorts, rels, funs, consts = [], {}, {}, {}
    while r.peek() != "}":
        key = r.take()
        if key == "sorts":
            sorts += [n for n in r.names_until(";") if n != ","]
            r.take(";")
            continue
        table = {"relations": rels, "functions": funs, "constants": consts}.get(key)
        if table is None:
            raise SpecFileError(f"unknown language field {key!r}", r.toks[r.i - 1][2], r.text)
        while r.peek() not in ("sorts", "relations", "functions", "constants", "}"):
            name = r.take()
            if r.peek() == "/":
                r.take("/")
                table[name] = int(r.take())
            else:
                r.take(":")
                words = r.names_until(";", ",")
                if key == "functions":
                    if "->" not in words:
                        raise SpecFileError(f"function {name} needs 'args -> result'", r.toks[r.i - 1][2], r.text)
                    k = words.index("->")
                    table[name] = (tuple(words[:k]), words[k + 1])
                elif key == "constants":
                    table[name] = words[0] if words else None
                else:
                    table[name] = tuple(words)
            if r.peek() in (";", ","):
                r.take()
    r.take("}")
    return Language(tuple(sorts) or (DEFAULT_SORT,), rels, funs, consts)


def _parse_class_block(r: _Reader, language: Language, base: Path) -> ClassSpec:
    name = ""
    if r.peek() != "{":
        name = r.take()
    r.take("{")
    axioms, forbidden = [], []
    while r.peek() != "}":
        key = r.take()
        if key == "axiom":
            axioms.append(r.string())
        elif key == "forbid":
            ref = r.string()
            forbidden.append(load_structure(base / ref, language))
        else:
            raise SpecFileError(f"unknown class field {key!r}", r.toks[r.i - 1][2], r.text)
        r.take(";")
    r.take("}")
    return ClassSpec(language, axioms, forbidden, name=name or "class")


def parse_spec(text: str, base: Path | str = ".") -> tuple:
    """(language, class spec or None) from spec-file text."""
    r = _Reader(text)
    language = None
    spec = None
    while r.peek() is not None:
        head = r.take()
        if head == "language":
            language = _parse_language_block(r)
        elif head == "class":
            if language is None:
                raise SpecFileError("class block before any language block", r.toks[r.i - 1][2], text)
            spec = _parse_class_block(r, language, Path(base))
        else:
            raise SpecFileError(f"expected 'language' or 'class', found {head!r}", r.toks[r.i - 1][2], text)
    if language is None:
        raise SpecFileError("spec file declares no language", 0, text)
    return language, spec


def load_spec(ref: str) -> tuple:
    """``builtin:<name>`` or a path; returns (language, class spec or None)."""
    if ref.startswith("builtin:"):
        spec = builtin_class(ref[len("builtin:"):])
        return spec.language, spec
    path = Path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FusionLabError(f"cannot read spec file {ref}: {exc.strerror}") from None
    return parse_spec(text, path.parent)


def load_class(ref: str) -> ClassSpec:
    language, spec = load_spec(ref)
    return spec if spec is not None else ClassSpec(language, (), name=Path(ref).stem)


def builtin_names() -> list:
    return sorted(BUILTIN)


# ---------------------------------------------------------------------------
# Structure JSON

def structure_to_json(M: FiniteStructure) -> dict:
    name = element_name
    doc = {"sorts": {s: [name(e) for e in M.carriers[s]] for s in M.language.sorts},
           "relations": {r: sorted([name(x) for x in t] for t in M.relations[r]) for r in M.language.relations}}
    if M.language.functions:
        doc["functions"] = {f: {",".join(name(x) for x in k): name(v) for k, v in sorted(
            M.functions[f].items(), key=lambda kv: [name(x) for x in kv[0]])} for f in M.language.functions}
    if M.language.constants:
        doc["constants"] = {c: name(M.constants[c]) for c in M.language.constants}
    return doc


def structure_from_json(doc: dict, language: Language | None = None) -> FiniteStructure:
    """Elements are strings. Without ``language``, relation profiles are read off the tuples."""
    sorts = doc.get("sorts") or {}
    carriers = {s: [str(e) for e in elems] for s, elems in sorts.items()}
    sort_of = {e: s for s, elems in carriers.items() for e in elems}
    rels = {r: [tuple(str(x) for x in t) for t in ts] for r, ts in (doc.get("relations") or {}).items()}
    funs_doc = doc.get("functions") or {}
    consts = {c: str(v) for c, v in (doc.get("constants") or {}).items()}
    funs = {}
    for f, table in funs_doc.items():
        funs[f] = {_split_key(k): str(v) for k, v in table.items()}
    if language is None:
        profile = {}
        for r, ts in rels.items():
            if not ts:
                raise FusionLabError(f"cannot infer the profile of empty relation {r}; pass a language")
            try:
                profile[r] = tuple(sort_of[x] for x in ts[0])
            except KeyError as exc:
                raise FusionLabError(f"relation {r} mentions unknown element {exc.args[0]}") from None
        fprofile = {}
        for f, table in funs.items():
            k, v = next(iter(table.items()))
            fprofile[f] = (tuple(sort_of[x] for x in k), sort_of[v])
        language = Language(tuple(carriers) or (DEFAULT_SORT,), profile, fprofile,
                            {c: sort_of[v] for c, v in consts.items()})
    return FiniteStructure(language, carriers, rels, funs, consts)


def _split_key(key: str) -> tuple:
    """Split an argument key on commas outside ``<...>`` element names."""
    parts, depth, cur = [], 0, ""
    for ch in key:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += (ch == "<") - (ch == ">")
        cur += ch
    if key:
        parts.append(cur)
    return tuple(parts)


def load_structure(path, language: Language | None = None) -> FiniteStructure:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise FusionLabError(f"cannot read structure file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise FusionLabError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return structure_from_json(doc, language)


def parse_elements(text: str) -> list:
    """Comma-separated element names; empty text gives the empty list."""
    return [t.strip() for t in text.split(",") if t.strip()] if text else []

"""Check reports with a deterministic JSON rendering and a plain-text rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .structures import FiniteStructure, element_name

STATUSES = ("pass", "fail", "info")


@dataclass
class Verdict:
    check: str
    status: str
    bound: str = ""
    detail: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")


@dataclass
class Report:
    command: list
    seed: int | None = None
    verdicts: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    elapsed_ms: int | None = None  # text rendering only; machine output must be reproducible

    def add(self, check, ok, bound="", detail="", info=False) -> Verdict:
        status = "info" if info else ("pass" if ok else "fail")
        v = Verdict(check, status, bound, detail)
        self.verdicts.append(v)
        return v

    def witness(self, label: str, structure: FiniteStructure | None = None, **extra):
        from .specfile import structure_to_json
        entry = {"label": label}
        if structure is not None:
            entry["structure"] = structure_to_json(structure)
        for k, v in extra.items():
            entry[k] = plain(v)
        self.witnesses.append(entry)

    @property
    def failed(self) -> bool:
        return any(v.status == "fail" for v in self.verdicts)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def to_machine(self) -> dict:
        return {
            "command": list(self.command),
            "seed": self.seed,
            "verdicts": [{"check": v.check, "status": v.status, "bound": v.bound, "detail": v.detail}
                         for v in self.verdicts],
            "witnesses": self.witnesses,
            "data": plain(self.data),
        }


def plain(value):
    """JSON-ready copy: element names for structure elements, lists for tuples and sets."""
    if isinstance(value, FiniteStructure):
        from .specfile import structure_to_json
        return structure_to_json(value)
    if isinstance(value, dict):
        return {element_name(k) if not isinstance(k, str) else k: plain(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted((plain(v) for v in value), key=_sort_key)
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        raise TypeError("reports carry no floating-point content")
    return element_name(value) if isinstance(value, tuple) else str(value)


def _sort_key(v):
    return json.dumps(v, sort_keys=True)


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt in ("machine", "json"):
        return json.dumps(report.to_machine(), indent=2, ensure_ascii=False) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = ["$ fusionlab " + " ".join(report.command)]
    if report.seed is not None:
        lines.append(f"seed: {report.seed}")
    for v in report.verdicts:
        bound = f" [{v.bound}]" if v.bound else ""
        lines.append(f"{v.status.upper():4}  {v.check}{bound}" + (f": {v.detail}" if v.detail else ""))
    for key, value in report.data.items():
        lines.append(_text_block(key, plain(value)))
    for w in report.witnesses:
        lines.append("witness: " + w["label"])
        for key, value in w.items():
            if key != "label":
                lines.append(_text_block("  " + key, value))
    if report.elapsed_ms is not None:
        lines.append(f"time: {report.elapsed_ms} ms")
    return "\n".join(lines) + "\n"


def _text_block(key, value) -> str:
    if isinstance(value, list) and value and all(isinstance(x, str) for x in value):
        return f"{key}:\n" + "\n".join(f"    {x}" for x in value)
    return f"{key}: {json.dumps(value, ensure_ascii=False)}"

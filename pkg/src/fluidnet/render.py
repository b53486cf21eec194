"""Deterministic output rendering for the CLI.

JSON is written by a small serializer so floats always come out as %.17g
(round-trippable, byte-stable across runs); rationals are already "p/q"
strings by the time they reach this layer.
"""

from __future__ import annotations

import io
from typing import Any


def format_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    return text


def dumps(doc: Any, indent: int = 2) -> str:
    out = io.StringIO()
    _write(doc, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _write(doc: Any, out: io.StringIO, indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if doc is None:
        out.write("null")
    elif isinstance(doc, bool):
        out.write("true" if doc else "false")
    elif isinstance(doc, int):
        out.write(str(doc))
    elif isinstance(doc, float):
        out.write(format_float(doc))
    elif isinstance(doc, str):
        out.write(_escape(doc))
    elif isinstance(doc, dict):
        if not doc:
            out.write("{}")
            return
        out.write("{\n")
        for i, (key, value) in enumerate(doc.items()):
            out.write(f"{pad}{_escape(str(key))}: ")
            _write(value, out, indent, level + 1)
            out.write(",\n" if i < len(doc) - 1 else "\n")
        out.write(closing + "}")
    elif isinstance(doc, (list, tuple)):
        items = list(doc)
        if not items:
            out.write("[]")
            return
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in items):
            out.write("[" + ", ".join(_scalar(v) for v in items) + "]")
            return
        out.write("[\n")
        for i, value in enumerate(items):
            out.write(pad)
            _write(value, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(closing + "]")
    else:
        raise TypeError(f"cannot render {type(doc).__name__}")


def _scalar(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, str):
        return _escape(v)
    return str(v)


def _escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return format_float(v)
    text = str(v)
    if any(c in text for c in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_rows(rows: list[list[Any]]) -> str:
    return "".join(",".join(_cell(v) for v in row) + "\n" for row in rows)


def to_csv(subcommand: str, doc: dict) -> str:
    """Tabular views of the analysis documents for plotting/spreadsheets."""
    n = len(doc.get("states", []))
    if subcommand == "sfm":
        header = ["x"] + [f"F_{i + 1}" for i in range(n)] + [f"f_{i + 1}" for i in range(n)]
        rows = [header] + [[pt["x"], *pt["F"], *pt["f"]] for pt in doc["grid"]]
        return csv_rows(rows)
    if subcommand == "ctmc":
        rows: list[list[Any]] = []
        for name in ("Q", "P"):
            for i, row in enumerate(doc[name]):
                rows.append([f"{name}[{i}]", *row])
        for name in ("RE", "SJ", "VAR", "phi"):
            rows.append([name, *doc[name]])
        return csv_rows(rows)
    if subcommand == "reach":
        rows = [["source", "transition", "rate", "target"]] + doc["edges"]
        return csv_rows(rows)
    if subcommand == "measures":
        rows = [["kind", "value"]] + [[r["kind"], r["value"]] for r in doc["reports"]]
        return csv_rows(rows)
    if subcommand == "simulate":
        rows = [["quantity", "state", *map(str, range(len(doc.get("grid", []))))]]
        rows = [["quantity", "index", "value", "halfwidth"]]
        for i, (v, h) in enumerate(zip(doc["phi_hat"], doc["phi_halfwidth"])):
            rows.append(["phi", i, v, h])
        for i, (v, h) in enumerate(zip(doc["ell_hat"], doc["ell_halfwidth"])):
            rows.append(["ell", i, v, h])
        for i, (vals, hws) in enumerate(zip(doc["F_hat"], doc["F_halfwidth"])):
            for g, (v, h) in enumerate(zip(vals, hws)):
                rows.append([f"F(x={doc['grid'][g]})", i, v, h])
        return csv_rows(rows)
    raise ValueError(f"no CSV view for the {subcommand!r} analysis")


def trajectory_csv(trajectories: list[list[list[float]]]) -> str:
    rows: list[list[Any]] = [["replication", "time", "state", "fluid_level"]]
    for rep, rows_ in enumerate(trajectories):
        for t, s, x in rows_:
            rows.append([rep, float(t), int(s), float(x)])
    return csv_rows(rows)


def pretty(subcommand: str, doc: dict) -> str:
    """Compact human-readable summary; falls back to JSON for the details."""
    lines = [f"# {subcommand}"]
    if subcommand in ("bisim", "trace-eq"):
        lines.append(f"equivalent: {doc['equivalent']}")
        if doc.get("note"):
            lines.append(doc["note"])
        if doc.get("classes"):
            for i, cls in enumerate(doc["classes"]):
                members = ", ".join(f"{tag}:{idx}" for tag, idx in cls)
                lines.append(f"class {i}: {{{members}}}")
        if doc.get("witness"):
            lines.append(f"witness: {doc['witness']}")
        return "\n".join(lines) + "\n"
    if subcommand == "measures":
        for r in doc["reports"]:
            lines.append(f"{r['kind']}: {r['value']}")
        return "\n".join(lines) + "\n"
    return dumps(doc)

"""CSV and JSON report writing with a fixed column set per command."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable

SCHEMA_PATH = Path(__file__).resolve().parent / "data" / "report_schema.json"
FORMATS = ("csv", "json")

_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$")


@lru_cache(maxsize=None)
def schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())


def columns(command: str) -> list[str]:
    try:
        return list(schema()["commands"][command]["columns"])
    except KeyError:
        raise ValueError(f"no report schema for command {command!r}") from None


def format_number(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else format_number(float(v))
    if isinstance(v, float):
        return format_number(v)
    if hasattr(v, "dtype"):  # numpy scalar
        return format_cell(v.item())
    if isinstance(v, (dict, list, tuple)):
        return canonical_json(v)
    return str(v)


def canonical_json(obj) -> str:
    """Deterministic JSON; floats at 17 significant digits."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return format_number(obj)
    if isinstance(obj, Fraction):
        return format_cell(obj)
    if hasattr(obj, "dtype"):
        return canonical_json(obj.item())
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    return json.dumps(str(obj))


def _row_dict(row) -> dict:
    return row.as_row() if hasattr(row, "as_row") else dict(row)


def normalize(rows: Iterable, command: str) -> list[dict]:
    """Project rows onto the command's columns (missing keys become None)."""
    cols = columns(command)
    out = []
    for row in rows:
        d = _row_dict(row)
        extra = set(d) - set(cols)
        if extra:
            raise ValueError(f"{command} rows carry undocumented columns {sorted(extra)}")
        out.append({c: d.get(c) for c in cols})
    return out


def dumps(rows: Iterable, fmt: str, command: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    cols = columns(command)
    rows = normalize(rows, command)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([format_cell(r[c]) for c in cols])
        return buf.getvalue()
    lines = []
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            if isinstance(v, (dict, list, tuple)):
                v = canonical_json(v)
            cells.append(f"{json.dumps(c)}: {canonical_json(v)}")
        lines.append("  {" + ", ".join(cells) + "}")
    return "[\n" + ",\n".join(lines) + "\n]\n" if lines else "[]\n"


def emit_report(rows: Iterable, fmt: str, path: str | os.PathLike | None, command: str) -> str:
    """Serialize ``rows`` and write them to ``path`` (stdout text is returned if ``path`` is None)."""
    text = dumps(rows, fmt, command)
    if path is not None:
        p = Path(path)
        if p.parent and not p.parent.exists():
            raise OSError(f"directory {p.parent} does not exist")
        with open(p, "w", newline="") as fh:
            fh.write(text)
    return text


def parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if _INT.match(s):
        return int(s)
    if _FLOAT.match(s):
        return float(s)
    return s


def parse_report(text: str, fmt: str) -> list[dict]:
    """Inverse of :func:`dumps` (CSV cells are typed back by their shape)."""
    if fmt == "json":
        return json.loads(text)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return []
    return [dict(zip(header, (parse_cell(c) for c in rec))) for rec in reader]

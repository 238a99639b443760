"""Reports and their deterministic serialization.

Floats are written with 17 significant digits, mapping keys are sorted, and
the unbounded marker is written as the string ``"inf"``, so equal reports
give equal bytes and ``parse(dumps(r)) == r``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from relweyl.errors import OutputError
from relweyl.unbounded import UNBOUNDED, is_unbounded


@dataclass
class Report:
    kind: str
    config: dict
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "config": self.config, "columns": list(self.columns),
                "rows": [dict(r) for r in self.rows], "summary": self.summary}

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if is_unbounded(obj):
        return '"inf"'
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                          for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        body = ",\n".join(pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise OutputError(f"cannot serialize value of type {type(obj).__name__}")


def _decode(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if obj == "inf":
        return UNBOUNDED
    if obj == "-inf":
        return -math.inf
    if obj == "nan":
        return math.nan
    return obj


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if is_unbounded(x):
        return "inf"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def dumps(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return _encode(report.as_dict(), 2, 0) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_cell(row.get(c)) for c in report.columns])
        return buf.getvalue()
    raise OutputError(f"unknown output format {fmt!r}")


def parse(text: str, fmt: str = "json"):
    """Inverse of :func:`dumps`; CSV yields ``(columns, rows)`` with numeric cells decoded."""
    if fmt == "json":
        d = _decode(json.loads(text))
        return Report(d["kind"], d["config"], d["columns"], d["rows"], d["summary"])
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        columns = next(reader)
        rows = [{c: _parse_cell(v) for c, v in zip(columns, line)} for line in reader]
        return columns, rows
    raise OutputError(f"unknown output format {fmt!r}")


def _parse_cell(text: str):
    if text == "":
        return None
    if text == "inf":
        return UNBOUNDED
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def emit(report: Report, fmt: str, out_dir, stem: str | None = None) -> Path:
    """Write the report to ``out_dir/<stem>.<fmt>`` and return the path."""
    out = Path(out_dir)
    path = out / f"{stem or report.kind}.{fmt}"
    try:
        out.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(report, fmt))
    except OSError as exc:
        raise OutputError(f"cannot write report to {path}: {exc}") from None
    return path

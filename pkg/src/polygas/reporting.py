"""Deterministic CSV and JSON report emission.

Rows are dicts; values go through the numeric contract (rationals "p/q",
floats shortest round-trip).  Row order is the caller's responsibility and
must be deterministic; given that, exact-mode CSV output is byte-identical
across runs.  The run header (seed, mode, ...) is recorded as a leading
'# key=value' comment in the CSV and under "meta" in the JSON mirror.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Mapping, Optional, Sequence

from .values import format_num, is_exact


def render_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (frozenset, set, tuple, list)):
        return "+".join(str(e) for e in sorted(value, key=str))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or is_exact(value):
        return format_num(value)
    return str(value)


def json_cell(value):
    if value is None or isinstance(value, (bool, str, int)):
        return value
    if isinstance(value, (frozenset, set, tuple, list)):
        return [str(e) for e in sorted(value, key=str)]
    if isinstance(value, float):
        return value
    if is_exact(value):
        return format_num(value)
    return str(value)


def write_csv(path: str, fieldnames: Sequence[str], rows: Iterable[Mapping], meta: Optional[Mapping] = None):
    lines = []
    if meta:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in meta.items()))
    lines.append(",".join(fieldnames))
    for row in rows:
        lines.append(",".join(_escape(render_cell(row.get(f))) for f in fieldnames))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _escape(cell: str) -> str:
    if any(c in cell for c in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def write_json(path: str, rows: Iterable[Mapping], meta: Optional[Mapping] = None):
    doc = {
        "meta": {k: json_cell(v) for k, v in (meta or {}).items()},
        "rows": [{k: json_cell(v) for k, v in row.items()} for row in rows],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_report(outdir: str, fieldnames, rows, meta, basename: str = "report"):
    os.makedirs(outdir, exist_ok=True)
    rows = list(rows)
    write_csv(os.path.join(outdir, f"{basename}.csv"), fieldnames, rows, meta)
    write_json(os.path.join(outdir, f"{basename}.json"), rows, meta)

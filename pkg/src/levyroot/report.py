"""Deterministic CSV/JSON artifacts.

CSV floats carry 17 significant digits, JSON floats their shortest
round-trip repr; keys keep insertion order, so equal inputs give equal bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .errors import PreconditionError


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def format_cell(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v if math.isfinite(v) else str(v)
    return str(v)


def rows_to_csv(rows) -> str:
    if not rows:
        raise PreconditionError("no rows to write")
    header = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if list(r) != header:
            raise ValueError("rows must share their columns")
        w.writerow([format_cell(r[k]) for k in header])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=True) + "\n"


def experiment_payload(ex) -> dict:
    return {"experiment": ex.name, "passed": ex.passed, "summary": ex.summary,
            "checks": [{"name": c.name, "passed": c.passed, "value": c.value, "limit": c.limit,
                        "detail": c.detail} for c in ex.checks]}


def emit_report(ex, out_dir: str, stem: str | None = None) -> list:
    """Write <stem>.csv (rows) and <stem>.json (summary and checks); returns the paths."""
    if not ex.rows and not ex.checks:
        raise PreconditionError("empty results")
    stem = stem or ex.name
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if ex.rows:
        p = os.path.join(out_dir, stem + ".csv")
        with open(p, "w", newline="") as fh:
            fh.write(rows_to_csv(ex.rows))
        written.append(p)
    p = os.path.join(out_dir, stem + ".json")
    with open(p, "w") as fh:
        fh.write(to_json(experiment_payload(ex)))
    written.append(p)
    return written


def summary_table(ex) -> str:
    lines = [f"{ex.name}: {'PASS' if ex.passed else 'FAIL'}"]
    lines += ["  " + c.line() for c in ex.checks]
    return "\n".join(lines)

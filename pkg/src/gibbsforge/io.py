"""CSV/JSON writers with a metadata header and a float sentinel for non-finite values."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def json_safe(value):
    """Recursively convert numpy scalars/arrays and non-finite floats ("inf", "-inf", "nan")."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def parse_float(text):
    """Inverse of the sentinel convention; float() already accepts "inf", "-inf", "nan"."""
    return float(text)


def write_json(path, payload: dict, metadata: dict):
    doc = {"metadata": json_safe(metadata)}
    doc.update(json_safe(payload))
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, header, rows, metadata: dict):
    """Comma-separated, LF line endings, '# key: value' metadata lines before the header row."""
    buf = io.StringIO()
    for k, v in metadata.items():
        buf.write(f"# {k}: {_fmt(v) if not isinstance(v, str) else v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path):
    """Return (metadata dict, header list, rows as lists of floats)."""
    meta, lines = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[parse_float(x) for x in r] for r in reader]
    return meta, header, rows


def csv_body(path):
    """The CSV text without metadata lines (for determinism checks)."""
    return "\n".join(l for l in Path(path).read_text(encoding="utf-8").splitlines() if not l.startswith("# "))

"""CSV/JSON writers with bit-stable number formatting."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    return "%.17g" % x


def write_csv(path, header, columns) -> Path:
    """Columns of equal length under a header row, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    path.write_text("\n".join(lines) + "\n")
    return path


def to_jsonable(obj):
    """Plain JSON types; complex numbers become ``[re, im]``, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    return obj


def write_json(path, obj) -> Path:
    # json emits floats via repr: shortest round-trip form, hence bit-stable
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2) + "\n")
    return path


def read_csv(path):
    """Header and float columns of a file written by :func:`write_csv`."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in text[1:]]).reshape(-1, len(header))
    return header, [rows[:, j] for j in range(len(header))]

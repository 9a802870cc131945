"""Dataset CSV and JSON-lines helpers."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import DataError
from .simgen import Dataset


def write_dataset_csv(path, data: Dataset) -> None:
    """Header ``x1..xd,y,eps``; floats use ``repr`` so they round-trip exactly."""
    d = data.X.shape[1]
    header = [f"x{i}" for i in range(1, d + 1)] + ["y", "eps"]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for x, y, e in zip(data.X.tolist(), data.y.tolist(), data.eps.tolist()):
                w.writerow([repr(v) for v in x] + [repr(y), repr(e)])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_dataset_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Parse ``x1..xd,y[,eps]``.  Returns ``(X, y, eps or None)``."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        d = 0
        while d < len(header) and header[d] == f"x{d + 1}":
            d += 1
        rest = header[d:]
        if d == 0 or rest not in (["y"], ["y", "eps"]):
            raise DataError(f"{path}:1: header must be x1..xd,y[,eps], got {','.join(header)}")
        values = []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{lineno}:{col}: not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}:{col}: non-finite value {cell!r}")
                parsed.append(v)
            values.append(parsed)
    if not values:
        raise DataError(f"{path}: no data rows")
    arr = np.array(values, dtype=np.float64)
    eps = arr[:, d + 1].copy() if len(rest) == 2 else None
    return arr[:, :d].copy(), arr[:, d].copy(), eps


def read_points(text: str) -> np.ndarray:
    """Comma-separated coordinates of one input point."""
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise DataError(f"cannot parse point {text!r}") from None


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _clean(v.item())
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def dump_jsonl(records, fh) -> None:
    for r in records:
        fh.write(json.dumps(_clean(r)) + "\n")


def format_table(rows: list[dict], columns: list[str]) -> str:
    """Aligned text table, floats to 4 decimals."""

    def cell(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return "" if v is None else str(v)

    body = [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c)
              for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)

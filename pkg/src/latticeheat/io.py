"""Plain-text artifacts: CSV tables with ``# key: value`` headers and JSON.

Floats are written with 17 significant digits, which round-trips IEEE
doubles, and no timestamps are recorded, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "format_float",
    "to_jsonable",
    "dumps_json",
    "write_table",
    "read_table",
    "write_field",
    "write_histogram",
    "read_histogram",
    "provenance",
]


def format_float(v) -> str:
    return format(float(v), ".17g")


def to_jsonable(obj):
    """Convert numpy scalars, arrays, complex numbers and fractions for ``json``."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def provenance(config: Mapping, **extra) -> dict:
    """Header block: config echo, library version and any extra entries."""
    from . import __version__

    out = {"library": f"latticeheat {__version__}"}
    out.update({f"config.{k}": v for k, v in sorted(config.items()) if v is not None})
    out.update(extra)
    return out


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format_float(v)


def write_table(columns: Sequence[str], rows: Iterable[Sequence], header: Mapping | None = None,
                fh=None) -> str:
    """Write a CSV table preceded by ``# key: value`` lines; return the text."""
    buf = _io.StringIO()
    for k, v in (header or {}).items():
        val = v if isinstance(v, str) else json.dumps(to_jsonable(v), sort_keys=True)
        buf.write(f"# {k}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_table(fh) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a table written by :func:`write_table` into (header, columns, rows)."""
    header, body = {}, []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            header[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValueError("empty table")
    return header, rows[0], rows[1:]


def write_field(fld, header: Mapping | None = None, fh=None) -> str:
    """KernelField as columns ``x1..xd, re, im``."""
    d = fld.dim
    cols = [f"x{i + 1}" for i in range(d)] + ["re", "im"]
    coords = fld.coordinates()
    vals = fld.values.ravel()
    integer = float(fld.eps) == 1.0
    rows = ([*(int(c) if integer else c for c in x), v.real, v.imag] for x, v in zip(coords, vals))
    meta = {"kind": fld.kind, "stencil": fld.stencil_name, "eps": fld.eps, "t": fld.t,
            "J": fld.J, "window": fld.window, "n_fft": fld.n_fft}
    meta.update(header or {})
    return write_table(cols, rows, meta, fh)


def write_histogram(hist, header: Mapping | None = None, fh=None) -> str:
    """Histogram as columns ``x1..xd, count``."""
    cols = [f"x{i + 1}" for i in range(hist.dim)] + ["count"]
    rows = ([*map(int, p), int(c)] for p, c in zip(hist.points, hist.counts))
    meta = {"t": hist.t, "n_paths": hist.n_paths, "seed": hist.seed}
    meta.update(header or {})
    return write_table(cols, rows, meta, fh)


def read_histogram(fh):
    """Inverse of :func:`write_histogram`; returns ``(Histogram, header)``."""
    from .walk import Histogram

    header, cols, rows = read_table(fh)
    if cols[-1] != "count":
        raise ValueError("last column must be 'count'")
    d = len(cols) - 1
    data = np.array(rows, dtype=np.int64).reshape(-1, d + 1)
    n = int(header.get("n_paths", data[:, -1].sum()))
    seed = header.get("seed")
    seed = None if seed in (None, "null") else int(seed)
    hist = Histogram(data[:, :d], data[:, -1], n, float(header["t"]), seed)
    return hist, header

"""Report files: CSV tables, deterministic JSON, two-column plot data."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .approx import CertifiedPolynomial
from .convolve import ApproximationReport

SWEEP_COLUMNS = ("t", "sup_error", "tail_bound", "grid_points")


def fmt(x: float) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(x), ".17g")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _emit(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        # strict JSON has no inf/nan
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(obj, ensure_ascii=False)


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and insertion key order."""
    return _emit(_plain(obj), indent, 0) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path: str | Path, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_plot(path: str | Path, x, y) -> Path:
    """Two space-separated columns, one (x, value) pair per line."""
    path = Path(path)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y lengths differ")
    path.write_text("".join(f"{fmt(a)} {fmt(b)}\n" for a, b in zip(x, y)), encoding="utf-8")
    return path


def sweep_rows(rep: ApproximationReport):
    return [(float(t), float(e), float(b), int(n)) for t, e, b, n in rep.rows()]


def sweep_dict(rep: ApproximationReport) -> dict:
    return {
        "rows": [dict(zip(SWEEP_COLUMNS, r)) for r in sweep_rows(rep)],
        "grid": rep.grid,
        "quad_points": rep.quad_points,
        "monotone_tail": rep.monotone_tail if len(rep.ts) >= 3 else None,
        "notes": rep.notes,
    }


def polynomial_dict(cp: CertifiedPolynomial) -> dict:
    """Coefficients ascending in x, plus the scaled-variable form used internally.

    The x-form comes from a Taylor shift and inherits its conditioning: for a
    high degree on an interval away from 0 it can be far less accurate than
    the sigma form, which is the one the bound refers to.
    """
    return {
        "coefficients": cp.to_monomial().coeffs.real,
        "interval": list(cp.interval),
        "bound": cp.bound,
        "measured_error": cp.measured_error,
        "degree": cp.degree,
        "sigma": {"center": cp.center, "half_width": cp.half_width, "coefficients": cp.coeffs},
        "meta": cp.meta,
    }

"""Report documents: a nested dict rendered as aligned text or as JSON.

Floats are rounded to six significant digits before rendering, and
nothing time- or host-dependent enters a report, so identical
configurations give byte-identical output.
"""

from __future__ import annotations

import json
import math
import platform

import numpy as np
import scipy

from . import __version__, _accel

SIG_DIGITS = 6


def sig(x: float, digits: int = SIG_DIGITS):
    """Round to ``digits`` significant digits; non-finite values become strings."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if x == 0:
        return 0.0
    return float(f"{x:.{digits}g}")


def clean(obj):
    """Convert numpy containers and scalars to rounded plain Python values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return sig(obj)
    return obj


def versions() -> dict:
    out = {"jointwg": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}
    out["accelerated"] = _accel.ENABLED
    if _accel.ENABLED:
        import numba

        out["numba"] = numba.__version__
    return out


def to_json(doc: dict) -> str:
    return json.dumps(clean(doc), indent=2, ensure_ascii=True) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and all(isinstance(x, (int, float)) for x in v):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _table(rows: list[dict]) -> list[str]:
    cols = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    cells = [[_fmt(row.get(c, "")) for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells)
    return lines


def _render(obj, indent=0) -> list[str]:
    pad = "  " * indent
    out = []
    for key, value in obj.items():
        if isinstance(value, dict):
            out.append(f"{pad}{key}:")
            out.extend(_render(value, indent + 1))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            out.append(f"{pad}{key}:")
            out.extend(pad + "  " + line for line in _table(value))
        else:
            out.append(f"{pad}{key}: {_fmt(value)}")
    return out


def to_text(doc: dict) -> str:
    return "\n".join(_render(clean(doc))) + "\n"


def render(doc: dict, fmt: str) -> str:
    if fmt == "structured":
        return to_json(doc)
    if fmt == "text":
        return to_text(doc)
    raise ValueError(f"unknown format {fmt!r}")

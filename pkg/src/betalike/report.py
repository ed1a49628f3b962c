"""Deterministic text output: JSON with fixed float formatting, TSV density
tables, atomic file writes."""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

__all__ = ["fmt_float", "to_json", "density_tsv", "write_atomic"]


def fmt_float(x: float) -> str:
    """17 significant digits, so every double round-trips and output is stable."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"        # keep floats recognizable as floats
    return text


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-ready Python objects."""
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
    return obj


def _encode(o, indent, level):
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    if isinstance(o, dict):
        if not o:
            yield "{}"
            return
        yield "{"
        for i, (k, v) in enumerate(o.items()):
            if i:
                yield ","
            yield pad + json.dumps(k) + ": "
            yield from _encode(v, indent, level + 1)
        yield end + "}"
    elif isinstance(o, list):
        if not o:
            yield "[]"
            return
        yield "["
        for i, v in enumerate(o):
            if i:
                yield ","
            yield pad
            yield from _encode(v, indent, level + 1)
        yield end + "]"
    elif isinstance(o, bool) or o is None:
        yield json.dumps(o)
    elif isinstance(o, int):
        yield str(o)
    elif isinstance(o, float):
        yield fmt_float(o)
    else:
        yield json.dumps(str(o) if not isinstance(o, str) else o)


def to_json(obj, indent: int | None = 2) -> str:
    return "".join(_encode(_plain(obj), indent, 0)) + "\n"


def density_tsv(density) -> str:
    """``theta<TAB>density`` rows under ``#`` metadata lines."""
    lines = [f"# normalizer={fmt_float(density.normalizer)}",
             f"# model={density.model_tag}"]
    for key in sorted(density.metadata):
        lines.append(f"# {key}={_meta_text(density.metadata[key])}")
    lines.append("theta\tdensity")
    for t, v in zip(density.theta, density.density):
        lines.append(f"{fmt_float(t)}\t{fmt_float(v)}")
    return "\n".join(lines) + "\n"


def _meta_text(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, list):
        return "[" + ",".join(_meta_text(x) for x in v) + "]"
    return str(v)


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".betalike-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise

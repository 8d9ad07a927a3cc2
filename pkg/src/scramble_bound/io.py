"""Plain-text spectra, CSV traces and JSON reports.

Floats are written with 17 significant digits so every file round-trips
exactly.  Non-finite floats become the strings ``"inf"``, ``"-inf"`` and
``"nan"`` in JSON.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from pathlib import Path

import numpy as np

from .errors import SpectrumFormatError
from .operators import RegularizedDOS

FLOAT_FMT = ".17g"
NORMALIZATION_WARN = 1e-6
NEGATIVE_WEIGHT_ATOL = 1e-12


def fmt(x):
    return format(float(x), FLOAT_FMT)


def parse_spectrum(text, beta=None, f_beta=1.0):
    """Parse ``E_n[,w_n]`` records into a :class:`RegularizedDOS`.

    Weights are all present or all absent (then uniform).  They are
    renormalized, with a warning if their sum is off by more than 1e-6.
    """
    energies, weights = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) > 2:
            raise SpectrumFormatError(f"expected 'E' or 'E,w', got {len(parts)} fields", lineno)
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise SpectrumFormatError(f"not a number: {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise SpectrumFormatError("non-finite value", lineno)
        if weights and len(values) == 1 or energies and not weights and len(values) == 2:
            raise SpectrumFormatError("weights must be given on every line or on none", lineno)
        if len(values) == 2 and values[1] < -NEGATIVE_WEIGHT_ATOL:
            raise SpectrumFormatError(f"negative weight {values[1]}", lineno)
        energies.append(values[0])
        if len(values) == 2:
            weights.append(max(values[1], 0.0))
    if not energies:
        raise SpectrumFormatError("no spectrum records", None)
    energies = np.asarray(energies)
    if weights:
        weights = np.asarray(weights)
        total = weights.sum()
        if total <= 0:
            raise SpectrumFormatError("weights sum to zero", None)
        if abs(total - 1.0) > NORMALIZATION_WARN:
            warnings.warn(f"spectrum weights sum to {total:.17g}; renormalizing")
        weights = weights / total
    else:
        weights = np.full(energies.size, 1.0 / energies.size)
    return RegularizedDOS(energies, weights, beta=beta, f_beta=f_beta)


def import_spectrum(path, beta=None, f_beta=1.0):
    return parse_spectrum(Path(path).read_text(encoding="utf-8"), beta, f_beta)


def format_spectrum(dos):
    lines = ["# E_n,w_n"]
    lines += [f"{fmt(e)},{fmt(w)}" for e, w in zip(dos.energies, dos.weights)]
    return "\n".join(lines) + "\n"


def export_spectrum(dos, path):
    Path(path).write_text(format_spectrum(dos), encoding="utf-8")


def write_trace(path, times, values):
    """CSV with header ``t,value``, or ``t,re,im`` for complex values."""
    values = np.asarray(values)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if np.iscomplexobj(values):
            w.writerow(["t", "re", "im"])
            w.writerows((fmt(t), fmt(v.real), fmt(v.imag)) for t, v in zip(times, values))
        else:
            w.writerow(["t", "value"])
            w.writerows((fmt(t), fmt(v)) for t, v in zip(times, values))


def write_columns(path, header, columns):
    """CSV of equal-length numeric columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([fmt(x) for x in row] for row in zip(*columns))


def read_trace(path):
    """Inverse of :func:`write_trace`; returns ``(times, values)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    if header == ["t", "re", "im"]:
        return body[:, 0], body[:, 1] + 1j * body[:, 2]
    return body[:, 0], body[:, 1]


def _prepare(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, float):
        return fmt(obj)
    return json.dumps(obj)


def dumps(obj, indent=2):
    """JSON text with 17-significant-digit floats and string sentinels."""
    return _encode(_prepare(obj), indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")

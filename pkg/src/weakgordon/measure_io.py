"""Measure specification files.

Format (JSON document):

    {"window": [lo, hi],
     "atoms": [{"x": ..., "re": ..., "im": ...}, ...],
     "segments": [{"a": ..., "b": ..., "coeffs": [[re, im], ...]}, ...],
     "periodic": {"period": p}}          # optional

All reals are IEEE double decimal literals; NaN/Infinity and overlapping
segments are rejected with line-anchored messages.  With "periodic" present
the atoms/segments describe the base on [0, p).
"""

from __future__ import annotations

import json
import math
import re

from . import measure as me
from .errors import ValidationError


class SpecFileError(ValidationError):
    """Measure file failed to parse or validate."""


def _line_of_offset(text, offset):
    return text.count("\n", 0, offset) + 1


def _line_of_token(text, pattern):
    m = re.search(pattern, text)
    if m:
        return _line_of_offset(text, m.start())
    return None


def _line_of_element(text, key, index):
    """Line of the index-th object inside the array under `key`."""
    m = re.search(r'"%s"\s*:\s*\[' % re.escape(key), text)
    if not m:
        return None
    pos = m.end()
    depth = 0
    count = -1
    for i in range(pos, len(text)):
        ch = text[i]
        if ch == "{":
            if depth == 0:
                count += 1
                if count == index:
                    return _line_of_offset(text, i)
            depth += 1
        elif ch == "}":
            depth -= 1
        elif ch == "]" and depth == 0:
            break
    return None


def _err(text, msg, line=None):
    if line is not None:
        raise SpecFileError(f"line {line}: {msg}")
    raise SpecFileError(msg)


def _real(text, obj, key, where, line):
    if key not in obj:
        _err(text, f"{where}: missing field '{key}'", line)
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        _err(text, f"{where}: field '{key}' must be a number", line)
    if not math.isfinite(v):
        _err(text, f"{where}: field '{key}' is not finite", line)
    return float(v)


def parse_measure(text: str):
    """Parse a measure spec; returns LocalMeasure or PeriodicMeasure."""

    def reject_constant(name):
        line = _line_of_token(text, r"NaN|Infinity|-Infinity")
        _err(text, f"non-finite literal {name} is not allowed", line)

    try:
        doc = json.loads(text, parse_constant=reject_constant)
    except SpecFileError:
        raise
    except json.JSONDecodeError as e:
        raise SpecFileError(f"line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        _err(text, "top level must be an object")

    win = doc.get("window")
    if (
        not isinstance(win, list)
        or len(win) != 2
        or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in win)
    ):
        _err(text, "field 'window' must be [lo, hi] with finite numbers",
             _line_of_token(text, r'"window"'))
    lo, hi = float(win[0]), float(win[1])

    atoms = []
    for i, a in enumerate(doc.get("atoms", [])):
        line = _line_of_element(text, "atoms", i)
        if not isinstance(a, dict):
            _err(text, f"atoms[{i}] must be an object", line)
        x = _real(text, a, "x", f"atoms[{i}]", line)
        re_w = _real(text, a, "re", f"atoms[{i}]", line) if "re" in a else 0.0
        im_w = _real(text, a, "im", f"atoms[{i}]", line) if "im" in a else 0.0
        if "re" not in a and "im" not in a:
            _err(text, f"atoms[{i}]: needs 're' and/or 'im'", line)
        atoms.append((x, complex(re_w, im_w)))

    segments = []
    for i, s in enumerate(doc.get("segments", [])):
        line = _line_of_element(text, "segments", i)
        if not isinstance(s, dict):
            _err(text, f"segments[{i}] must be an object", line)
        a = _real(text, s, "a", f"segments[{i}]", line)
        b = _real(text, s, "b", f"segments[{i}]", line)
        coeffs = s.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            _err(text, f"segments[{i}]: 'coeffs' must be a nonempty list", line)
        if len(coeffs) > me.MAX_DEGREE + 1:
            _err(
                text,
                f"segments[{i}]: degree {len(coeffs) - 1} exceeds cap {me.MAX_DEGREE}",
                line,
            )
        parsed = []
        for c in coeffs:
            if (
                not isinstance(c, list)
                or len(c) != 2
                or not all(
                    isinstance(v, (int, float)) and math.isfinite(v) for v in c
                )
            ):
                _err(text, f"segments[{i}]: coeffs entries must be [re, im]", line)
            parsed.append(complex(c[0], c[1]))
        if not a < b:
            _err(text, f"segments[{i}]: need a < b, got [{a}, {b}]", line)
        segments.append((a, b, tuple(parsed)))

    # overlap check with line anchors before handing to make_measure
    order = sorted(range(len(segments)), key=lambda i: segments[i][0])
    for i, j in zip(order[:-1], order[1:]):
        if segments[j][0] < segments[i][1] - 1e-15:
            _err(
                text,
                f"segments[{i}] and segments[{j}] overlap",
                _line_of_element(text, "segments", j),
            )
    for i, (x, _w) in enumerate(atoms):
        if not lo <= x <= hi:
            _err(
                text,
                f"atoms[{i}]: position {x} outside window [{lo}, {hi}]",
                _line_of_element(text, "atoms", i),
            )

    try:
        mu = me.make_measure(atoms, segments, (lo, hi))
    except ValidationError as e:
        raise SpecFileError(str(e)) from e

    if "periodic" in doc:
        per = doc["periodic"]
        line = _line_of_token(text, r'"periodic"')
        if not isinstance(per, dict) or "period" not in per:
            _err(text, "'periodic' must be an object with field 'period'", line)
        p = _real(text, per, "period", "periodic", line)
        if not p > 0:
            _err(text, f"period must be positive, got {p}", line)
        try:
            return me.PeriodicMeasure(
                me.LocalMeasure(mu.atoms, mu.segments, (0.0, p)), p
            )
        except ValidationError as e:
            _err(text, str(e), line)
    return mu


def load_measure(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_measure(fh.read())


def measure_to_dict(obj):
    if isinstance(obj, me.PeriodicMeasure):
        d = measure_to_dict(obj.base)
        d["periodic"] = {"period": obj.period}
        return d
    return {
        "window": [obj.lo, obj.hi],
        "atoms": [{"x": x, "re": w.real, "im": w.imag} for x, w in obj.atoms],
        "segments": [
            {
                "a": s.start,
                "b": s.end,
                "coeffs": [[complex(c).real, complex(c).imag] for c in s.coeffs],
            }
            for s in obj.segments
        ],
    }


def dump_measure(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(obj), fh, indent=1)
        fh.write("\n")

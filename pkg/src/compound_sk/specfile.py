"""Source-specification files and result documents.

A specification is JSON::

    {
      "alphabets": {"x": 2, "y": 2, "z": 2},
      "states": [
        {"label": "near", "joint": ["9/40", "1/40", ...]},
        ...
      ]
    }

``joint`` lists ``P(x, y, z)`` in row-major order (``z`` fastest). Entries
may be numbers, decimal strings or exact fractions ``"a/b"``; fractions are
normalised exactly before conversion to floats, so states that share an
``X``-marginal in exact arithmetic share it bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import DomainError, SpecError
from .source import CompoundSource

SIG_DIGITS = 12
PMF_SUM_TOL = Fraction(1, 10 ** 9)


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _locate(text: str, key: str, occurrence: int) -> int | None:
    """Line of the ``occurrence``-th appearance of ``"key"`` as an object key."""
    matches = list(re.finditer(rf'"{re.escape(key)}"\s*:', text))
    if occurrence < len(matches):
        return _line_of(text, matches[occurrence].start())
    return None


def _fail(text: str, field: str, msg: str, key: str | None = None, occurrence: int = 0):
    line = _locate(text, key, occurrence) if key else None
    where = f"line {line}, " if line else ""
    raise SpecError(f"{where}field {field}: {msg}")


def _parse_entry(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise ValueError("booleans are not probabilities")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("not finite")
        return Fraction(repr(value))
    if isinstance(value, str):
        s = value.strip()
        if "/" in s:
            num, den = s.split("/", 1)
            return Fraction(int(num.strip()), int(den.strip()))
        return Fraction(s)
    raise ValueError(f"unsupported entry type {type(value).__name__}")


def parse_spec_text(text: str) -> CompoundSource:
    """Parse a specification document.

    Raises
    ------
    SpecError
        With the line (where it can be located) and the field path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpecError("line 1, field <root>: expected an object")
    alph = doc.get("alphabets")
    if not isinstance(alph, dict):
        _fail(text, "alphabets", "missing or not an object", "alphabets")
    sizes = []
    for name in ("x", "y", "z"):
        v = alph.get(name)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            _fail(text, f"alphabets.{name}", f"expected a positive integer, got {v!r}",
                  name if name in alph else "alphabets")
        sizes.append(v)
    states = doc.get("states")
    if not isinstance(states, list) or not states:
        _fail(text, "states", "missing or empty list", "states")
    cells = sizes[0] * sizes[1] * sizes[2]
    joints, labels = [], []
    for k, st in enumerate(states):
        path = f"states[{k}]"
        if not isinstance(st, dict):
            _fail(text, path, "expected an object", "states")
        label = st.get("label", f"s{k}")
        if not isinstance(label, str) or not label:
            _fail(text, f"{path}.label", "expected a nonempty string", "label", k)
        if label in labels:
            _fail(text, f"{path}.label", f"duplicate label {label!r}", "label", k)
        joint = st.get("joint")
        if not isinstance(joint, list):
            _fail(text, f"{path}.joint", "missing or not a list", "joint", k)
        if len(joint) != cells:
            _fail(text, f"{path}.joint",
                  f"has {len(joint)} entries, expected |X||Y||Z| = {cells}", "joint", k)
        vals = []
        for c, e in enumerate(joint):
            try:
                f = _parse_entry(e)
            except (ValueError, ZeroDivisionError) as exc:
                _fail(text, f"{path}.joint[{c}]", f"cannot parse {e!r} ({exc})", "joint", k)
            if f < 0:
                _fail(text, f"{path}.joint[{c}]", f"negative probability {e!r}", "joint", k)
            vals.append(f)
        total = sum(vals)
        if abs(total - 1) > PMF_SUM_TOL:
            _fail(text, f"{path}.joint", f"entries sum to {float(total):.12g}, expected 1",
                  "joint", k)
        arr = np.array([float(v / total) for v in vals]).reshape(sizes)
        joints.append(arr)
        labels.append(label)
    try:
        return CompoundSource(joints, labels)
    except DomainError as exc:
        raise SpecError(f"field states: {exc}") from None


def load_spec(path: str | Path) -> CompoundSource:
    """Read and parse a specification file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    return parse_spec_text(text)


def source_to_spec(src: CompoundSource) -> dict:
    """Specification document for a source (floats written with ``repr``)."""
    nx, ny, nz = src.sizes
    return {"alphabets": {"x": nx, "y": ny, "z": nz},
            "states": [{"label": lab, "joint": [repr(float(v)) for v in j.ravel()]}
                       for lab, j in zip(src.labels, src.joints)]}


# ------------------------------------------------------------ output

def _clean(obj: Any) -> Any:
    """Plain JSON types with floats rounded to ``SIG_DIGITS`` significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.{SIG_DIGITS}g}")
    return obj


def result_document(command: str, result: dict, version: str,
                    stamp: str | None = None) -> str:
    """Serialise a result with a stable field order.

    The metadata block carries the package version and, only when
    ``stamp`` is given, a timestamp; everything else is a function of the
    inputs.
    """
    meta = {"package": "compound_sk", "version": version}
    if stamp is not None:
        meta["timestamp"] = stamp
    doc = {"command": command, "result": _clean(result), "metadata": meta}
    return json.dumps(doc, indent=2) + "\n"


def _csv_cell(v: Any) -> str:
    v = _clean(v)
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def write_csv(rows: Iterable[dict], path: str | Path | None = None) -> str:
    """CSV with a header row; columns in first-seen order."""
    rows = list(rows)
    header: list[str] = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(r[k]) if k in r else "" for k in header])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text

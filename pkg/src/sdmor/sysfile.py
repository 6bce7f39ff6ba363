"""JSON system files.

``{"kind": "lti", "A": [[...]], "B": ..., "C": ..., "H": [...], "meta": {...}}``
or ``{"kind": "ls", "A_i": [A_1, ...], "B_i": [...], "C": ..., "H": [...]}``.
Matrices are row-major nested arrays. Floats are written with Python's
shortest round-trip repr, so ``load(dump(s))`` reproduces ``s`` exactly.
"""
import json
import math

import numpy as np

from .errors import SdmorError
from .systems import ContinuousLtiSystem, SamplingGrid, SwitchedLinearSystem


class SystemFileError(SdmorError):
    """The file is not valid JSON or does not follow the schema."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


def _matrix(obj, name):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        obj = [[obj]]
    if not isinstance(obj, list) or not obj:
        raise SystemFileError(f"{name} must be a non-empty nested array")
    if not all(isinstance(row, list) for row in obj):
        raise SystemFileError(f"{name} must be an array of row arrays")
    width = len(obj[0])
    if any(len(row) != width for row in obj):
        raise SystemFileError(f"{name} has rows of unequal length")
    for row in obj:
        for v in row:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SystemFileError(f"{name} contains a non-numeric entry {v!r}")
    return np.array(obj, dtype=float).reshape(len(obj), width)


def _grid(obj):
    if obj is None:
        return None
    if not isinstance(obj, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in obj):
        raise SystemFileError('"H" must be an array of numbers')
    return SamplingGrid(tuple(float(v) for v in obj))


def parse_system(text):
    """Parse system-file text.

    Returns ``(system, grid, meta)``. For ``"ls"`` files the grid is also
    attached to the system. Shape consistency is left to
    :func:`sdmor.systems.validate`.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise SystemFileError("top level must be a JSON object")
    kind = data.get("kind")
    meta = data.get("meta", {})
    grid = _grid(data.get("H"))
    if kind == "lti":
        for key in ("A", "B", "C"):
            if key not in data:
                raise SystemFileError(f'missing key "{key}"')
        sys = ContinuousLtiSystem(_matrix(data["A"], "A"), _matrix(data["B"], "B"), _matrix(data["C"], "C"))
        return sys, grid, meta
    if kind == "ls":
        for key in ("A_i", "B_i", "C"):
            if key not in data:
                raise SystemFileError(f'missing key "{key}"')
        As, Bs = data["A_i"], data["B_i"]
        if not isinstance(As, list) or not isinstance(Bs, list) or len(As) != len(Bs) or not As:
            raise SystemFileError('"A_i" and "B_i" must be non-empty arrays of equal length')
        modes = tuple(
            (_matrix(a, f"A_{i}"), _matrix(b, f"B_{i}")) for i, (a, b) in enumerate(zip(As, Bs), start=1)
        )
        sys = SwitchedLinearSystem(modes, _matrix(data["C"], "C"), grid=grid)
        return sys, grid, meta
    raise SystemFileError(f'"kind" must be "lti" or "ls", got {kind!r}')


def load_system(path):
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


def _rows(M):
    return [[float(v) for v in row] for row in np.asarray(M, dtype=float)]


def system_to_dict(sys, grid=None, meta=None):
    if isinstance(sys, ContinuousLtiSystem):
        out = {"kind": "lti", "A": _rows(sys.A), "B": _rows(sys.B), "C": _rows(sys.C)}
    elif isinstance(sys, SwitchedLinearSystem):
        out = {
            "kind": "ls",
            "A_i": [_rows(A) for A in sys.A_modes],
            "B_i": [_rows(B) for B in sys.B_modes],
            "C": _rows(sys.C),
        }
        grid = grid if grid is not None else sys.grid
    else:
        raise TypeError(f"cannot serialize {type(sys).__name__}")
    if grid is not None:
        out["H"] = [float(h) for h in grid.intervals]
    if meta:
        out["meta"] = meta
    return out


def dump_system(sys, grid=None, meta=None):
    """Serialize to JSON text (non-finite entries are rejected)."""
    data = system_to_dict(sys, grid, meta)
    return json.dumps(data, allow_nan=False) + "\n"


def matrix_from_json(text, key="P"):
    """Read one matrix stored under ``key`` (or a bare nested array)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if isinstance(data, dict):
        if key not in data:
            raise SystemFileError(f'missing key "{key}"')
        data = data[key]
    M = _matrix(data, key)
    if not all(math.isfinite(v) for v in M.ravel()):
        raise SystemFileError(f"{key} has non-finite entries")
    return M

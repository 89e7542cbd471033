"""JSON state files.

Schema::

    {
      "dims": [2, 2],
      "matrix": [[[re, im], [re, im], ...], ...],   # row-major, side = prod(dims)
      "label": "optional text"
    }

Entries are written with 12 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .states import DensityMatrix, InvalidStateError

DIGITS = 12


class StateFileError(ValueError):
    pass


@dataclass(frozen=True)
class StateFile:
    state: DensityMatrix
    label: str | None = None


def _round(x: float) -> float:
    return float(format(float(x), f".{DIGITS}g")) + 0.0


def dumps_state(rho: DensityMatrix, label: str | None = None) -> str:
    m = np.asarray(rho)
    rows = [[[_round(z.real), _round(z.imag)] for z in row] for row in m]
    doc = {"dims": list(rho.dims.dims), "matrix": rows}
    if label is not None:
        doc["label"] = label
    # one matrix row per line keeps files diffable
    head = json.dumps({k: v for k, v in doc.items() if k != "matrix"})[:-1]
    body = ",\n  ".join(json.dumps(r) for r in rows)
    return f'{head}, "matrix": [\n  {body}\n]}}\n'


def write_state(path, rho: DensityMatrix, label: str | None = None) -> None:
    Path(path).write_text(dumps_state(rho, label), encoding="utf-8")


def loads_state(text: str) -> StateFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"malformed state file at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise StateFileError("state file must be a JSON object")
    for key in ("dims", "matrix"):
        if key not in doc:
            raise StateFileError(f"state file is missing {key!r}")
    dims = doc["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 2 for d in dims):
        raise StateFileError(f"'dims' must be a non-empty list of integers >= 2, got {dims!r}")
    side = int(np.prod(dims))
    rows = doc["matrix"]
    if not isinstance(rows, list) or len(rows) != side:
        raise StateFileError(f"'matrix' must have {side} rows")
    m = np.empty((side, side), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != side:
            raise StateFileError(f"matrix row {i} must have {side} entries")
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in z)
            ):
                raise StateFileError(f"matrix entry at row {i}, column {j} must be a [real, imaginary] pair, got {z!r}")
            m[i, j] = complex(z[0], z[1])
    label = doc.get("label")
    try:
        rho = DensityMatrix(m, tuple(dims))
    except InvalidStateError as exc:
        raise StateFileError(f"matrix is not a valid density matrix: {exc}") from None
    return StateFile(rho, label)


def read_state(path) -> StateFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StateFileError(f"cannot read {path}: {exc.strerror}") from None
    return loads_state(text)

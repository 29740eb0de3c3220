"""CSV/JSON persistence. Floats go out with 17 significant digits so they round-trip."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .lattice import Truncation
from .picard import TimeGridField
from .spectral import CoeffField


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path, self.line = str(path), line
        super().__init__(f"{path}:{line}: {message}")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _rows_to_text(header: list[str], rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def solution_csv_text(sol: TimeGridField) -> str:
    nu = sol.trunc.nu
    header = ["t"] + [f"n_{j + 1}" for j in range(nu)] + ["re", "im"]
    idx = [[str(c) for c in n] for n in sol.trunc.indices]

    def rows():
        for m, t in enumerate(sol.times):
            ts = fmt(t)
            for i, v in enumerate(sol.values[m]):
                yield [ts, *idx[i], fmt(v.real), fmt(v.imag)]

    return _rows_to_text(header, rows())


def write_solution_csv(path, sol: TimeGridField) -> str:
    """Every ball point at every time, zeros included, so the radius is recoverable."""
    text = solution_csv_text(sol)
    Path(path).write_text(text)
    return sha256_text(text)


def _parse_table(path, min_cols: int = 3):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        if len(header) < min_cols or header[-2:] != ["re", "im"]:
            raise ParseError(path, 1, f"header must end with re,im; got {header}")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(path, line, f"expected {len(header)} columns, got {len(row)}")
            rows.append((line, row))
    return header, rows


def _index(path, line, cells) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in cells)
    except ValueError:
        raise ParseError(path, line, f"lattice index must be integers, got {cells}") from None


def _number(path, line, cell) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(path, line, f"not a number: {cell!r}") from None


def read_solution_csv(path) -> TimeGridField:
    header, rows = _parse_table(path, 4)
    if header[0] != "t":
        raise ParseError(path, 1, f"first column must be t, got {header[0]!r}")
    nu = len(header) - 3
    if not rows:
        raise ParseError(path, 2, "no data rows")
    radius = max(sum(abs(c) for c in _index(path, ln, r[1:1 + nu])) for ln, r in rows)
    trunc = Truncation(nu, radius)
    K = len(trunc)
    if len(rows) % K:
        raise ParseError(path, rows[-1][0], f"row count {len(rows)} is not a multiple of the ball size {K}")
    times, values = [], np.empty((len(rows) // K, K), dtype=complex)
    for j, (line, row) in enumerate(rows):
        m, i = divmod(j, K)
        t = _number(path, line, row[0])
        if i == 0:
            times.append(t)
        elif t != times[-1]:
            raise ParseError(path, line, f"time {t!r} differs from its block's time {times[-1]!r}")
        n = _index(path, line, row[1:1 + nu])
        if n != trunc.indices[i]:
            raise ParseError(path, line, f"expected index {trunc.indices[i]}, got {n}")
        values[m, i] = complex(_number(path, line, row[-2]), _number(path, line, row[-1]))
    return TimeGridField(times, trunc, values)


def write_field_csv(path, field: CoeffField) -> str:
    header = [f"n_{j + 1}" for j in range(field.nu)] + ["re", "im"]
    rows = ([*(str(c) for c in n), fmt(v.real), fmt(v.imag)] for n, v in zip(field.trunc.indices, field.values))
    text = _rows_to_text(header, rows)
    Path(path).write_text(text)
    return sha256_text(text)


def read_field_csv(path, trunc: Truncation | None = None) -> CoeffField:
    """Sparse or dense field listing; missing points are zero."""
    header, rows = _parse_table(path, 3)
    nu = len(header) - 2
    entries = {}
    for line, row in rows:
        n = _index(path, line, row[:nu])
        if n in entries:
            raise ParseError(path, line, f"duplicate index {n}")
        entries[n] = complex(_number(path, line, row[-2]), _number(path, line, row[-1]))
    radius = max((sum(abs(c) for c in n) for n in entries), default=0)
    if trunc is None:
        trunc = Truncation(nu, radius)
    elif trunc.nu != nu or radius > trunc.radius:
        raise ParseError(path, 1, f"field does not fit in {trunc}")
    return CoeffField.from_mapping(trunc, entries)


def json_text(obj) -> str:
    # json writes floats with repr, which already round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj) -> str:
    text = json_text(obj)
    Path(path).write_text(text)
    return sha256_text(text)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()

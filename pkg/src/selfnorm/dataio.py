"""CSV and JSON input/output.

Regression data files have a header row naming columns ``x1..xp`` and
``y`` (any order); every field must be a '.'-decimal real.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .errors import SelfNormError
from .estimating import RegressionSample

_XCOL = re.compile(r"^x([1-9][0-9]*)$")


class CsvFormatError(SelfNormError, ValueError):
    pass


def _parse_float(text: str, row: int, col: str) -> float:
    text = text.strip()
    if not text:
        raise CsvFormatError(f"missing value in column {col!r} at data row {row}")
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"non-numeric value {text!r} in column {col!r} at data row {row}") from None
    if not np.isfinite(value):
        raise CsvFormatError(f"non-finite value in column {col!r} at data row {row}")
    return value


def _read_table(handle) -> tuple[list[str], list[list[str]]]:
    reader = csv.reader(handle)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvFormatError("empty CSV file") from None
    rows = [r for r in reader if r and any(f.strip() for f in r)]
    for i, r in enumerate(rows, 1):
        if len(r) != len(header):
            raise CsvFormatError(f"data row {i} has {len(r)} fields, header has {len(header)}")
    return header, rows


def _regression_from_handle(handle) -> RegressionSample:
    header, rows = _read_table(handle)
    if "y" not in header:
        raise CsvFormatError("missing column 'y'")
    xcols = {}
    for pos, name in enumerate(header):
        m = _XCOL.match(name)
        if m:
            xcols[int(m.group(1))] = pos
        elif name != "y":
            raise CsvFormatError(f"unexpected column {name!r}; expected x1..xp and y")
    if not xcols:
        raise CsvFormatError("missing column 'x1'")
    for j in range(1, max(xcols) + 1):
        if j not in xcols:
            raise CsvFormatError(f"missing column 'x{j}'")
    if not rows:
        raise CsvFormatError("no data rows")
    order = [xcols[j] for j in range(1, len(xcols) + 1)]
    ypos = header.index("y")
    x = np.array([[_parse_float(r[c], i, header[c]) for c in order] for i, r in enumerate(rows, 1)])
    y = np.array([_parse_float(r[ypos], i, "y") for i, r in enumerate(rows, 1)])
    return RegressionSample(x, y)


def read_regression_csv(path) -> RegressionSample:
    with open(path, newline="", encoding="utf-8") as fh:
        return _regression_from_handle(fh)


def regression_from_csv_text(text: str) -> RegressionSample:
    return _regression_from_handle(io.StringIO(text))


def regression_to_csv_text(sample: RegressionSample) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(sample.p)] + ["y"])
    for xi, yi in zip(sample.X, sample.y):
        w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
    return buf.getvalue()


def write_regression_csv(sample: RegressionSample, path) -> None:
    Path(path).write_text(regression_to_csv_text(sample), encoding="utf-8")


def read_vector_csv(path) -> np.ndarray:
    """A vector stored either as one data row or as one column (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        header, rows = _read_table(fh)
    if not rows:
        raise CsvFormatError("no data rows")
    if len(rows) == 1:
        return np.array([_parse_float(v, 1, header[j]) for j, v in enumerate(rows[0])])
    if len(header) == 1:
        return np.array([_parse_float(r[0], i, header[0]) for i, r in enumerate(rows, 1)])
    raise CsvFormatError("vector CSV must have a single row or a single column")


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        header, rows = _read_table(fh)
    return np.array([[_parse_float(v, i, header[j]) for j, v in enumerate(r)] for i, r in enumerate(rows, 1)])


def write_matrix_csv(m, path, prefix="c") -> None:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{j + 1}" for j in range(m.shape[1])])
        w.writerows([[repr(float(v)) for v in row] for row in m])


def write_records_csv(records: list[dict], path, columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for rec in records:
            w.writerow({k: _fmt(rec.get(k)) for k in columns})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))

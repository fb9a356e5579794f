"""CSV schemas for experimental series and CLI tables.

Series files::

    chi_vs_T   header ``T_K,chi``   optional ``# B_T=<value>`` (default 0)
    chi_vs_B   header ``B_T,chi``   required ``# T_K=<value>``
    M_vs_B     header ``B_T,M``     required ``# T_K=<value>``

Lines starting with ``#`` are comments; ``# key=value`` comments carry
metadata (``# scale=<value>`` records a known calibration scale). Numbers
are written with 12 significant digits.
"""

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMAS = {
    "chi_vs_T": ("T_K", "chi"),
    "chi_vs_B": ("B_T", "chi"),
    "M_vs_B": ("B_T", "M"),
}
FIXED_KEY = {"chi_vs_T": "B_T", "chi_vs_B": "T_K", "M_vs_B": "T_K"}
GRID_HEADER = ("T_K", "B_T", "value")
MIN_FIT_POINTS = 8
_META_KEY = re.compile(r"\w+")


class SeriesError(ValueError):
    pass


def fmt(x):
    """12 significant digits, the one numeric format used in every output file."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


@dataclass(frozen=True, eq=False)
class ExperimentSeries:
    kind: str
    x: np.ndarray
    y: np.ndarray
    fixed_value: float = 0.0
    calibration_scale: float = None
    weights: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise SeriesError(f"unknown series kind {self.kind!r}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise SeriesError("x and y must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise SeriesError("series contains non-finite values")
        if np.any(np.diff(x) <= 0):
            raise SeriesError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.weights is not None:
            object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def __len__(self):
        return self.x.size

    @property
    def temperature(self):
        """Temperature of each point (K)."""
        if self.kind == "chi_vs_T":
            return self.x
        return np.full_like(self.x, self.fixed_value)

    @property
    def field(self):
        """Field of each point (T)."""
        if self.kind == "chi_vs_T":
            return np.full_like(self.x, self.fixed_value)
        return self.x


def write_series(series, path, comments=()):
    xname, yname = SCHEMAS[series.kind]
    lines = [f"# {c}" for c in comments]
    if series.kind == "chi_vs_T":
        if series.fixed_value:
            lines.append(f"# B_T={fmt(series.fixed_value)}")
    else:
        lines.append(f"# T_K={fmt(series.fixed_value)}")
    if series.calibration_scale is not None:
        lines.append(f"# scale={fmt(series.calibration_scale)}")
    header = [xname, yname] + (["weight"] if series.weights is not None else [])
    lines.append(",".join(header))
    for k in range(len(series)):
        row = [fmt(series.x[k]), fmt(series.y[k])]
        if series.weights is not None:
            row.append(fmt(series.weights[k]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_rows(path):
    meta, rows = {}, []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, sep, value = text[1:].strip().partition("=")
                if sep and _META_KEY.fullmatch(key.strip()):
                    meta[key.strip()] = value.strip()
                continue
            rows.append((lineno, next(csv.reader([text]))))
    if not rows:
        raise SeriesError(f"{path}: no header row")
    return meta, rows[0][1], rows[1:]


def _parse_float(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise SeriesError(f"{path}: row {lineno}: cannot parse {text!r} as a number") from None


def load_series(path, kind=None, min_points=MIN_FIT_POINTS):
    """Read and validate a series file; the kind is inferred from the header if not given."""
    meta, header, rows = _read_rows(path)
    header = [h.strip() for h in header]
    if kind is None:
        for k, cols in SCHEMAS.items():
            if tuple(header[:2]) == cols:
                kind = k
                break
        else:
            raise SeriesError(f"{path}: header {header} matches no series schema")
    elif tuple(header[:2]) != SCHEMAS.get(kind, ()):
        raise SeriesError(f"{path}: header {header} does not match schema {kind}")
    extra = header[2:]
    if extra not in ([], ["weight"]):
        raise SeriesError(f"{path}: unexpected columns {extra}")
    xs, ys, ws = [], [], []
    for lineno, row in rows:
        if len(row) != len(header):
            raise SeriesError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        vals = [_parse_float(v, path, lineno) for v in row]
        if not all(math.isfinite(v) for v in vals):
            raise SeriesError(f"{path}: row {lineno}: non-finite value")
        xs.append(vals[0])
        ys.append(vals[1])
        if extra:
            ws.append(vals[2])
    if len(xs) < min_points:
        raise SeriesError(f"{path}: {len(xs)} points, need at least {min_points}")
    for k in range(1, len(xs)):
        if xs[k] <= xs[k - 1]:
            raise SeriesError(f"{path}: row {rows[k][0]}: x is not strictly increasing")
    key = FIXED_KEY[kind]
    if key in meta:
        fixed = _parse_float(meta[key], path, 0)
    elif kind == "chi_vs_T":
        fixed = 0.0
    else:
        raise SeriesError(f"{path}: missing '# {key}=<value>' metadata line")
    scale = meta.get("scale")
    return ExperimentSeries(
        kind,
        np.array(xs),
        np.array(ys),
        fixed,
        calibration_scale=_parse_float(scale, path, 0) if scale is not None else None,
        weights=np.array(ws) if extra else None,
        metadata=meta,
    )


def write_table(path, header, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path):
    """Generic numeric table: returns ``(header, array, metadata)``."""
    meta, header, rows = _read_rows(path)
    data = []
    for lineno, row in rows:
        if len(row) != len(header):
            raise SeriesError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        data.append([_parse_float(v, path, lineno) for v in row])
    return [h.strip() for h in header], np.array(data, dtype=float).reshape(-1, len(header)), meta


def write_grid(path, temps, fields, values, comments=()):
    """Row-major grid file (T outer, B inner) with header ``T_K,B_T,value``."""
    values = np.asarray(values)
    rows = ((temps[i], fields[j], values[i, j]) for i in range(len(temps)) for j in range(len(fields)))
    write_table(path, GRID_HEADER, rows, comments)

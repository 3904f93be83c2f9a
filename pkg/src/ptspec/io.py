"""Flat-file output: CSV rows and a JSON envelope, both lossless for doubles."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import IoError

SCHEMA_VERSION = "1"


# Column layout per record kind; complex columns expand to re_<name>, im_<name> in CSV.
COLUMNS: dict[str, tuple[str, ...]] = {
    "spectral_point": ("n_label", "gamma", "g", "b", "mu", "residual_norm"),
    "path_point": ("n_label", "branch", "gamma", "g", "b", "mu", "residual_norm"),
    "shift": ("n", "delta_mu_abs", "is_complex", "outlier", "mu"),
    "fit": ("model", "slope", "amplitude", "r_squared", "n_min", "n_max", "n_points"),
    "branch_point": ("n_a", "n_b", "kind", "gamma_c", "mu_c", "beta"),
    "ms_bound": ("m", "n", "abs_element", "bound", "satisfied", "parity_zero"),
}


def _value(v):
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, (bool, int, float, complex, str)) or v is None:
        return v
    if hasattr(v, "item"):  # numpy scalars
        return v.item()
    raise IoError(f"cannot serialize value of type {type(v).__name__}")


def to_rows(records: Iterable[Any]) -> tuple[str | None, list[dict]]:
    """Turn library records into (kind, row dicts)."""
    from .analysis import FitResult, ShiftRecord
    from .continuation import BranchPoint, ContinuationPath
    from .shooting import SpectralPoint

    kind, rows = None, []
    for r in records:
        if isinstance(r, SpectralPoint):
            k = "spectral_point"
            row = dict(n_label=r.n_label, gamma=r.params.gamma, g=r.params.g, b=r.params.b,
                       mu=complex(r.mu), residual_norm=r.residual_norm)
        elif isinstance(r, ContinuationPath):
            k = "path_point"
            for p in r.points:
                rows.append(dict(n_label=r.n_label, branch=r.branch, gamma=p.gamma,
                                 g=p.params.g, b=p.params.b, mu=complex(p.mu),
                                 residual_norm=p.residual_norm))
            kind = kind or k
            if kind != k:
                raise IoError("records are not homogeneous")
            continue
        elif isinstance(r, ShiftRecord):
            k = "shift"
            row = dict(n=r.n, delta_mu_abs=r.delta_mu_abs, is_complex=r.is_complex,
                       outlier=r.outlier, mu=complex(r.mu))
        elif isinstance(r, FitResult):
            k = "fit"
            row = dict(model=r.model.value, slope=r.slope, amplitude=r.amplitude,
                       r_squared=r.r_squared, n_min=r.n_range[0], n_max=r.n_range[1],
                       n_points=r.n_points)
        elif isinstance(r, BranchPoint):
            k = "branch_point"
            row = dict(n_a=r.partner_labels[0], n_b=r.partner_labels[1], kind=r.kind.value,
                       gamma_c=r.gamma_c, mu_c=complex(r.mu_c), beta=r.beta)
        elif isinstance(r, dict):
            k = "rows"
            row = {str(key): _value(v) for key, v in r.items()}
        elif dataclasses.is_dataclass(r):
            k = type(r).__name__
            row = {key: _value(v) for key, v in dataclasses.asdict(r).items()}
        else:
            raise IoError(f"cannot serialize {type(r).__name__}")
        if kind is None:
            kind = k
        elif kind != k:
            raise IoError("records are not homogeneous")
        rows.append(row)
    return kind, rows


# ------------------------------------------------------------------ CSV

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if v is None:
        return ""
    return str(v)


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if s in ("nan", "inf", "-inf"):
        return float(s)
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _csv_header(columns: Sequence[str], complex_cols: set[str]) -> list[str]:
    out = []
    for c in columns:
        out += [f"re_{c}", f"im_{c}"] if c in complex_cols else [c]
    return out


def to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> bytes:
    if columns is None:
        columns = list(rows[0]) if rows else []
    complex_cols = {c for c in columns if rows and isinstance(rows[0].get(c), complex)}
    if not rows:
        # complex columns are known from the schema only by name
        complex_cols = {c for c in columns if c in ("mu", "mu_c")}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(_csv_header(columns, complex_cols))
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c)
            if c in complex_cols:
                v = complex(v)
                cells += [_fmt_float(v.real), _fmt_float(v.imag)]
            else:
                cells.append(_fmt(v))
        w.writerow(cells)
    return buf.getvalue().encode("utf-8")


def from_csv(data: bytes | str) -> list[dict]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration as exc:
        raise IoError("missing CSV header") from exc
    pairs = {h[3:] for h in header if h.startswith("re_") and f"im_{h[3:]}" in header}
    rows = []
    for line in reader:
        if not line:
            continue
        if len(line) != len(header):
            raise IoError(f"row has {len(line)} cells, header has {len(header)}")
        raw = dict(zip(header, line))
        row = {}
        for h in header:
            if h.startswith("re_") and h[3:] in pairs:
                name = h[3:]
                row[name] = complex(float(raw[h]), float(raw[f"im_{name}"]))
            elif h.startswith("im_") and h[3:] in pairs:
                continue
            else:
                row[h] = _parse_cell(raw[h])
        rows.append(row)
    return rows


# ------------------------------------------------------------------ JSON

def _encode(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    return _value(v)


def _decode(v):
    if isinstance(v, dict):
        if set(v) == {"re", "im"}:
            return complex(v["re"], v["im"])
        return {k: _decode(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_decode(x) for x in v]
    return v


def to_json(rows: Sequence[dict], config: dict | None = None, kind: str | None = None) -> bytes:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind,
           "config_echo": _encode(config or {}), "records": _encode(list(rows))}
    return (json.dumps(doc, indent=1, sort_keys=False) + "\n").encode("utf-8")


def from_json(data: bytes | str) -> tuple[dict, list[dict]]:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise IoError(f"invalid JSON: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise IoError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return _decode(doc.get("config_echo", {})), _decode(doc["records"])


# ------------------------------------------------------------------ front door

def serialize(records: Iterable[Any], fmt: str = "csv", config: dict | None = None,
              kind: str | None = None) -> bytes:
    """Encode homogeneous records as CSV or as a JSON envelope."""
    k, rows = to_rows(records)
    kind = kind or k
    columns = COLUMNS.get(kind) if kind else None
    if columns is None and rows:
        columns = tuple(rows[0])
    if fmt == "csv":
        return to_csv(rows, columns or ())
    if fmt == "json":
        return to_json(rows, config, kind)
    raise IoError(f"unknown format {fmt!r}")


def parse(data: bytes | str, fmt: str = "csv") -> list[dict]:
    """Rows back from :func:`serialize` output."""
    if fmt == "csv":
        return from_csv(data)
    if fmt == "json":
        return from_json(data)[1]
    raise IoError(f"unknown format {fmt!r}")


def write(path: str | Path, records: Iterable[Any], fmt: str, config: dict,
          kind: str | None = None) -> None:
    """Write a data file.  CSV output gets a ``.config.json`` sidecar with the run config."""
    path = Path(path)
    try:
        path.write_bytes(serialize(records, fmt, config, kind))
        if fmt == "csv":
            side = path.with_name(path.name + ".config.json")
            side.write_bytes(to_json([], config, kind))
    except OSError as exc:
        raise IoError(str(exc)) from exc

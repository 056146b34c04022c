"""Density-matrix files and CSV output."""
from __future__ import annotations

import csv
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .core import DensityMatrix, InvalidInputError

LOAD_TOL = 1e-8


def matrix_to_document(m, label: str | None = None, dims=None) -> dict:
    m = np.asarray(m, dtype=complex)
    doc = {"dim": int(m.shape[0]),
           "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m]}
    if label is not None:
        doc["label"] = label
    if dims is not None:
        doc["dims"] = [int(d) for d in dims]
    return doc


def write_density_file(path, m, label: str | None = None, dims=None) -> None:
    # json writes floats with repr, which round-trips exactly
    Path(path).write_text(json.dumps(matrix_to_document(m, label, dims), indent=1) + "\n")


def parse_density_document(doc) -> tuple[np.ndarray, dict]:
    """Matrix and metadata from a parsed document; InvalidInputError on any defect."""
    if not isinstance(doc, dict):
        raise InvalidInputError("top level must be an object with 'dim' and 'entries'")
    for key in ("dim", "entries"):
        if key not in doc:
            raise InvalidInputError(f"missing key {key!r}")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise InvalidInputError(f"'dim' must be a positive integer, got {dim!r}")
    rows = doc["entries"]
    if not isinstance(rows, list) or len(rows) != dim:
        raise InvalidInputError(f"'entries' must have {dim} rows")
    m = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise InvalidInputError(f"row {i} must have {dim} entries")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                raise InvalidInputError(f"entry [{i}][{j}] must be a [re, im] pair of numbers")
            if not all(math.isfinite(x) for x in z):
                raise InvalidInputError(f"entry [{i}][{j}] is not finite")
            m[i, j] = complex(z[0], z[1])
    meta = {k: v for k, v in doc.items() if k not in ("dim", "entries")}
    if "dims" in meta:
        dims = meta["dims"]
        if not isinstance(dims, list) or int(np.prod(dims)) != dim:
            raise InvalidInputError(f"'dims' {dims!r} does not multiply to {dim}")
    return m, meta


def read_density_file(path) -> tuple[np.ndarray, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_density_document(doc)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


def load_density(path) -> DensityMatrix:
    """Parse and validate a density-matrix file."""
    m, meta = read_density_file(path)
    try:
        return DensityMatrix.from_matrix(m, dims=meta.get("dims"), tol=LOAD_TOL)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


@contextmanager
def output_stream(path):
    if path is None or str(path) == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return x


def write_csv(stream, columns, rows, config: dict) -> None:
    """A comment line with the run configuration, a header, then the rows."""
    stream.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of write_csv: (config, rows as dicts of strings)."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# config: "):
            raise InvalidInputError("missing config comment line")
        config = json.loads(first[len("# config: "):])
        return config, list(csv.DictReader(fh))

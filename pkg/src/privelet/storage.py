"""Versioned text container for matrices and coefficient dumps.

Layout: a single JSON header line (format name, version, kind, dims,
tuple count, schema hash, free-form metadata), then one entry per line
in row-major order.  Coefficient dumps carry "value<TAB>weight" lines
and are flagged kind="coefficients".  Values are written with repr-level
precision, so a re-run with identical inputs is byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .data import FrequencyMatrix
from .multidim import CoefficientMatrix
from .schema import Schema, ValidationError

FORMAT_NAME = "privelet-matrix"
FORMAT_VERSION = 1


def _header(kind: str, dims, tuple_count: int, schema: Schema, metadata: dict | None) -> str:
    head = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "dims": [int(d) for d in dims],
        "tuple_count": int(tuple_count),
        "schema_hash": schema.content_hash(),
        "metadata": metadata or {},
    }
    return json.dumps(head, sort_keys=True, separators=(",", ":"))


def _read_header(fh, path) -> dict:
    line = fh.readline()
    try:
        head = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: bad container header ({exc})") from exc
    if head.get("format") != FORMAT_NAME:
        raise ValidationError(f"{path}: not a {FORMAT_NAME} file")
    if head.get("version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported container version {head.get('version')}")
    return head


def write_matrix(matrix: FrequencyMatrix, path, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_header("frequency", matrix.dims, matrix.tuple_count, matrix.schema, metadata))
        fh.write("\n")
        for v in matrix.entries.reshape(-1):
            fh.write(f"{v:.17g}\n")


def read_matrix(path, schema: Schema) -> tuple[FrequencyMatrix, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        head = _read_header(fh, path)
        if head["kind"] != "frequency":
            raise ValidationError(f"{path}: expected a frequency matrix, got {head['kind']!r}")
        if tuple(head["dims"]) != schema.dims:
            raise ValidationError(
                f"{path}: dims {head['dims']} do not match schema dims {list(schema.dims)}"
            )
        if head["schema_hash"] != schema.content_hash():
            raise ValidationError(f"{path}: schema hash mismatch (file written for another schema)")
        entries = np.loadtxt(fh, dtype=np.float64, ndmin=1)
    if entries.size != schema.size:
        raise ValidationError(f"{path}: expected {schema.size} entries, found {entries.size}")
    matrix = FrequencyMatrix(
        schema=schema, entries=entries.reshape(schema.dims), tuple_count=head["tuple_count"]
    )
    return matrix, head["metadata"]


def write_coefficients(coeffs: CoefficientMatrix, path, metadata: dict | None = None) -> None:
    meta = dict(metadata or {})
    meta["split"] = list(coeffs.split)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_header("coefficients", coeffs.dims, coeffs.tuple_count, coeffs.schema, meta))
        fh.write("\n")
        values = coeffs.values.reshape(-1)
        weights = coeffs.weights.reshape(-1)
        for v, w in zip(values, weights):
            fh.write(f"{v:.17g}\t{w:.17g}\n")


def read_coefficients(path, schema: Schema) -> tuple[CoefficientMatrix, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        head = _read_header(fh, path)
        if head["kind"] != "coefficients":
            raise ValidationError(f"{path}: expected a coefficient dump, got {head['kind']!r}")
        if head["schema_hash"] != schema.content_hash():
            raise ValidationError(f"{path}: schema hash mismatch (file written for another schema)")
        table = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    meta = head["metadata"]
    split = tuple(meta.get("split", []))
    dims = tuple(head["dims"])
    coeffs = CoefficientMatrix(
        schema=schema,
        values=table[:, 0].reshape(dims),
        weights=table[:, 1].reshape(dims),
        split=split,
        tuple_count=head["tuple_count"],
    )
    return coeffs, meta

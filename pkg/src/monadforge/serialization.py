"""
JSON interchange format for configurations.

A document looks like::

    {"schema_version": "monad-forge/1", "k": 1, "n": 2,
     "a1": [[[0.0, 0.0]]], ..., "c": [[[1.0, 0.0]], [[0.0, 0.0]]]}

Every complex entry is a ``[re, im]`` pair, and matrices are row-major
nested lists. Floats are written with Python's shortest round-trip repr,
so ``loads(dumps(C))`` reproduces ``C`` bit for bit, signed zeros
included.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .configuration import Configuration
from .exceptions import MalformedInputError

SCHEMA_VERSION = "monad-forge/1"
_FIELDS = ("a1", "a2", "x", "b", "c")


class SchemaError(MalformedInputError):
    """The document does not follow the monad-forge/1 schema."""


def _encode_matrix(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def to_document(C: Configuration) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "k": C.k, "n": C.n}
    for name, M in zip(_FIELDS, C.matrices):
        doc[name] = _encode_matrix(M)
    return doc


def dumps(C: Configuration, indent: int | None = None) -> str:
    return json.dumps(to_document(C), indent=indent, allow_nan=False)


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise SchemaError(f"{where}: non-finite value")
    return v


def _decode_matrix(data, rows: int, cols: int, name: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != rows:
        raise SchemaError(f"{name}: expected {rows} rows")
    out = np.zeros((rows, cols), complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise SchemaError(f"{name}[{i}]: expected {cols} entries")
        for j, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise SchemaError(f"{name}[{i}][{j}]: expected an [re, im] pair")
            out[i, j] = complex(_number(entry[0], f"{name}[{i}][{j}]"),
                                _number(entry[1], f"{name}[{i}][{j}]"))
    return out


def from_document(doc) -> Configuration:
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
    k, n = doc.get("k"), doc.get("n")
    if not (isinstance(k, int) and not isinstance(k, bool) and k >= 0):
        raise SchemaError(f"k must be a non-negative integer, got {k!r}")
    if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
        raise SchemaError(f"n must be a positive integer, got {n!r}")
    shapes = {"a1": (k, k), "a2": (k, k), "x": (k, k), "b": (k, n), "c": (n, k)}
    mats = []
    for name in _FIELDS:
        if name not in doc:
            raise SchemaError(f"missing field {name!r}")
        mats.append(_decode_matrix(doc[name], *shapes[name], name))
    return Configuration(*mats)


def loads(text: str) -> Configuration:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return from_document(doc)


def load(path) -> Configuration:
    return loads(Path(path).read_text(encoding="utf-8"))


def dump(C: Configuration, path) -> None:
    Path(path).write_text(dumps(C) + "\n", encoding="utf-8")

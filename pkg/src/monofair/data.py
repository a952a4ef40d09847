"""Tabular ingestion, deterministic splitting and quantile keypoints."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from monofair.errors import (DegenerateFeatureError, InputError, ParseError,
                             SchemaError, SplitError)

KINDS = ("numeric", "boolean", "categorical")
MONOTONICITY = ("none", "increasing", "decreasing")
DEFAULT_KEYPOINTS = 20
SPLIT_FRACTIONS = (0.70, 0.10, 0.20)

_MISSING = {"", "na", "nan", "null", "none", "?"}
_BOOL_TOKENS = {"0": 0.0, "1": 1.0, "false": 0.0, "true": 1.0}


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str = "numeric"
    monotonicity: str = "none"
    keypoint_count: int = DEFAULT_KEYPOINTS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.monotonicity not in MONOTONICITY:
            raise SchemaError(
                f"column {self.name!r}: unknown monotonicity {self.monotonicity!r}")
        if self.kind == "boolean" and self.keypoint_count != 2:
            object.__setattr__(self, "keypoint_count", 2)
        if self.keypoint_count < 2:
            raise SchemaError(f"column {self.name!r}: keypoint_count must be >= 2")
        if self.kind == "categorical" and self.monotonicity != "none":
            raise SchemaError(
                f"column {self.name!r}: categorical columns are unordered and "
                "cannot carry a monotonicity constraint")


@dataclass(frozen=True)
class Schema:
    columns: tuple
    label: str
    protected: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "Schema":
        try:
            label = raw["label"]
            cols = raw["columns"]
        except KeyError as exc:
            raise SchemaError(f"schema is missing required key {exc}") from None
        if isinstance(cols, dict):
            items = [dict(name=k, **(v or {})) for k, v in cols.items()]
        else:
            items = list(cols)
        specs = []
        for item in items:
            item = dict(item)
            if "keypoints" in item:
                item["keypoint_count"] = item.pop("keypoints")
            unknown = set(item) - {"name", "kind", "monotonicity", "keypoint_count"}
            if unknown:
                raise SchemaError(f"unknown schema fields {sorted(unknown)}")
            specs.append(ColumnSpec(**item))
        return cls(tuple(specs), label, raw.get("protected"))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "protected": self.protected,
            "columns": {c.name: {"kind": c.kind, "monotonicity": c.monotonicity,
                                 "keypoints": c.keypoint_count}
                        for c in self.columns},
        }


def load_schema(path) -> Schema:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"schema {path}: {exc.msg}", offset=exc.pos) from None
    return Schema.from_dict(raw)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Expanded numeric table. Categorical inputs become one boolean column per level.

    ``values`` is a (rows, columns) float array; ``label`` holds 0/1 ints.
    """

    columns: tuple
    values: np.ndarray
    label: np.ndarray
    protected_column: Optional[int] = None
    source_columns: dict = field(default_factory=dict)
    n_dropped: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        label = np.asarray(self.label)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise SchemaError("value matrix does not match the column list")
        if label.shape != (values.shape[0],):
            raise SchemaError("label vector length does not match row count")
        if label.size and not np.isin(label, (0, 1)).all():
            raise SchemaError("labels must be exactly 0 or 1")
        values.setflags(write=False)
        label = label.astype(np.int64)
        label.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "label", label)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def names(self) -> list:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise SchemaError(f"unknown column {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    @property
    def protected_values(self) -> np.ndarray:
        if self.protected_column is None:
            raise SchemaError("dataset has no protected column")
        return self.values[:, self.protected_column]

    @property
    def groups(self) -> np.ndarray:
        return np.unique(self.protected_values)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.columns, self.values[idx], self.label[idx],
                       self.protected_column, self.source_columns)

    def select(self, names: Sequence[str]) -> "Dataset":
        """Dataset restricted to the named columns, in the given order."""
        idx = [self.column_index(n) for n in names]
        protected = None
        if self.protected_column is not None and self.protected_column in idx:
            protected = idx.index(self.protected_column)
        return Dataset(tuple(self.columns[i] for i in idx), self.values[:, idx],
                       self.label, protected)


def _parse_cell(token: str, spec: ColumnSpec, line: int):
    text = token.strip()
    if text.lower() in _MISSING:
        raise ParseError(f"line {line}: missing value in column {spec.name!r}",
                         row=line)
    if spec.kind == "categorical":
        return text
    if spec.kind == "boolean":
        try:
            return _BOOL_TOKENS[text.lower()]
        except KeyError:
            try:
                num = float(text)
            except ValueError:
                num = None
            if num not in (0.0, 1.0):
                raise ParseError(
                    f"line {line}: column {spec.name!r} expects 0/1, got {text!r}",
                    row=line) from None
            return num
    try:
        num = float(text)
    except ValueError:
        raise ParseError(
            f"line {line}: cannot parse {text!r} in column {spec.name!r}",
            row=line) from None
    if not math.isfinite(num):
        raise ParseError(f"line {line}: non-finite value in column {spec.name!r}",
                         row=line)
    return num


def _parse_label(token: str, name: str, line: int) -> int:
    text = token.strip()
    try:
        num = float(text)
    except ValueError:
        num = None
    if num not in (0.0, 1.0):
        raise ParseError(f"line {line}: label {name!r} must be 0 or 1, got {text!r}",
                         row=line)
    return int(num)


def load_csv(path, schema, label_column: Optional[str] = None,
             drop_missing: bool = False) -> Dataset:
    """Read a CSV file into a :class:`Dataset`.

    ``schema`` is a :class:`Schema` or a sequence of :class:`ColumnSpec`; in the
    latter case ``label_column`` is required. Columns in the file that the
    schema does not mention are ignored. Rows with missing cells raise
    :class:`ParseError` unless ``drop_missing`` is set, in which case they are
    skipped and counted in ``Dataset.n_dropped``.
    """
    if not isinstance(schema, Schema):
        if label_column is None:
            raise SchemaError("label_column is required with a bare column list")
        schema = Schema(tuple(schema), label_column)
    elif label_column is not None and label_column != schema.label:
        schema = Schema(schema.columns, label_column, schema.protected)

    if not os.path.exists(path):
        raise InputError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file")
        header = [h.strip() for h in header]
        positions = {name: i for i, name in enumerate(header)}
        needed = [c.name for c in schema.columns] + [schema.label]
        missing = [n for n in needed if n not in positions]
        if missing:
            raise SchemaError(f"{path}: columns not found in header: {missing}")

        raw_cols = [[] for _ in schema.columns]
        labels = []
        dropped = 0
        for line, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"line {line}: expected {len(header)} fields, got {len(record)}",
                    row=line)
            try:
                parsed = [_parse_cell(record[positions[c.name]], c, line)
                          for c in schema.columns]
                lab = _parse_label(record[positions[schema.label]], schema.label, line)
            except ParseError as exc:
                if drop_missing and "missing value" in str(exc):
                    dropped += 1
                    continue
                raise
            for col, value in zip(raw_cols, parsed):
                col.append(value)
            labels.append(lab)

    if not labels:
        raise InputError(f"{path}: no data rows")
    return _expand(schema, raw_cols, np.asarray(labels), dropped)


def _expand(schema: Schema, raw_cols, labels, dropped) -> Dataset:
    columns, arrays, sources = [], [], {}
    protected = None
    for spec, raw in zip(schema.columns, raw_cols):
        if spec.kind == "categorical":
            levels = sorted(set(raw))
            sources[spec.name] = []
            for level in levels:
                name = f"{spec.name}={level}"
                columns.append(ColumnSpec(name, "boolean", "none", 2))
                arrays.append(np.array([1.0 if v == level else 0.0 for v in raw]))
                sources[spec.name].append(name)
            if spec.name == schema.protected:
                raise SchemaError("the protected column must be ordered, not categorical")
        else:
            if spec.name == schema.protected:
                protected = len(columns)
            columns.append(spec)
            arrays.append(np.asarray(raw, dtype=float))
    if schema.protected is not None and protected is None:
        raise SchemaError(f"protected column {schema.protected!r} is not in the schema")
    values = np.column_stack(arrays) if arrays else np.zeros((len(labels), 0))
    return Dataset(tuple(columns), values, labels, protected, sources, dropped)


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    train_indices: np.ndarray
    validation_indices: np.ndarray
    test_indices: np.ndarray
    seed: int

    def __eq__(self, other):
        return (isinstance(other, SplitAssignment) and self.seed == other.seed
                and all(np.array_equal(a, b) for a, b in
                        zip(self.parts(), other.parts())))

    def parts(self):
        return self.train_indices, self.validation_indices, self.test_indices

    def to_dict(self) -> dict:
        return {"seed": self.seed, "prng": "numpy.PCG64",
                "train": self.train_indices.tolist(),
                "validation": self.validation_indices.tolist(),
                "test": self.test_indices.tolist()}

    @classmethod
    def from_dict(cls, raw: dict) -> "SplitAssignment":
        return cls(np.asarray(raw["train"], dtype=np.int64),
                   np.asarray(raw["validation"], dtype=np.int64),
                   np.asarray(raw["test"], dtype=np.int64), int(raw["seed"]))


def split_sizes(n: int) -> tuple:
    n_train = int(round(SPLIT_FRACTIONS[0] * n))
    n_val = int(round(SPLIT_FRACTIONS[1] * n))
    return n_train, n_val, n - n_train - n_val


def split(dataset, seed: int) -> SplitAssignment:
    """Uniform random 70/10/20 split.

    The permutation comes from numpy's PCG64 bit generator seeded with ``seed``
    via ``Generator.permutation``; index sets are returned sorted.
    """
    n = dataset if isinstance(dataset, int) else dataset.rows
    if n < 10:
        raise SplitError(f"need at least 10 rows to split, got {n}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    n_train, n_val, _ = split_sizes(n)
    return SplitAssignment(np.sort(perm[:n_train]),
                           np.sort(perm[n_train:n_train + n_val]),
                           np.sort(perm[n_train + n_val:]), seed)


def quantile_keypoints(values, k: int) -> np.ndarray:
    """Keys at ``k`` evenly spaced quantile levels of ``values``, ties collapsed.

    Level ``q`` reads position ``q * (n - 1)`` of the sorted finite values with
    linear interpolation between neighbours, so the first and last keys are
    the data minimum and maximum.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    arr = np.asarray(values, dtype=float).ravel()
    arr = np.sort(arr[np.isfinite(arr)])
    if arr.size == 0:
        raise DegenerateFeatureError("no finite values to place keypoints on")
    if arr[0] == arr[-1]:
        raise DegenerateFeatureError(
            f"all values equal {arr[0]!r}; feature is constant")
    levels = np.linspace(0.0, 1.0, k)
    keys = np.quantile(arr, levels, method="linear")
    keys[0], keys[-1] = arr[0], arr[-1]
    return np.unique(keys)

"""Pool-adjacent-violators and row-wise monotone projection of score tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from monofair.errors import InputError, ParseError, SchemaError


def pav(values, weights=None) -> np.ndarray:
    """Weighted L2 projection of ``values`` onto non-decreasing sequences.

    Single left-to-right pass over a stack of pooled blocks; each element is
    pushed once and popped at most once, so the cost is linear.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a non-empty 1-d vector")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape:
            raise ValueError("weights must match values in length")
        if not (w > 0).all():
            raise ValueError("weights must be strictly positive")

    # Blocks stored as parallel stacks: weighted sum, total weight, length, mean.
    # Comparing the stored means (not cross-multiplied sums) makes the output
    # exactly non-decreasing in floating point.
    sums, wsum, length, means = [], [], [], []
    for vi, wi in zip(v.tolist(), w.tolist()):
        s, ws, n = vi * wi, wi, 1
        m = vi
        # Strict '>' leaves equal neighbours unpooled.
        while means and means[-1] > m:
            s += sums.pop()
            ws += wsum.pop()
            n += length.pop()
            means.pop()
            m = s / ws
        sums.append(s)
        wsum.append(ws)
        length.append(n)
        means.append(m)
    return np.repeat(means, length)


def pav_decreasing(values, weights=None) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    w = None if weights is None else np.asarray(weights, dtype=float)[::-1]
    return pav(v[::-1], w)[::-1].copy()


def project_monotone(values, direction: str, weights=None) -> np.ndarray:
    if direction == "increasing":
        return pav(values, weights)
    if direction == "decreasing":
        return pav_decreasing(values, weights)
    if direction == "none":
        return np.asarray(values, dtype=float).copy()
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Scores ``f(x, z)`` on a finite grid; rows are x cells, columns z values."""

    x_support: tuple
    z_support: np.ndarray
    scores: np.ndarray
    x_name: str = "x"
    z_name: str = "z"

    def __post_init__(self):
        z = np.array(self.z_support, dtype=float)
        s = np.array(self.scores, dtype=float)
        if s.ndim == 1:
            s = s.reshape(1, -1)
        x = tuple(self.x_support) if self.x_support is not None else tuple(range(s.shape[0]))
        if z.ndim != 1 or s.shape != (len(x), z.size):
            raise SchemaError(
                f"score matrix shape {s.shape} does not match supports "
                f"({len(x)}, {z.size})")
        if np.any(np.diff(z) < 0):
            raise SchemaError("z_support must be sorted ascending")
        z.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "x_support", x)
        object.__setattr__(self, "z_support", z)
        object.__setattr__(self, "scores", s)

    def __eq__(self, other):
        return (isinstance(other, ScoreTable)
                and list(map(str, self.x_support)) == list(map(str, other.x_support))
                and np.array_equal(self.z_support, other.z_support)
                and np.array_equal(self.scores, other.scores))

    @property
    def shape(self):
        return self.scores.shape

    def with_scores(self, scores) -> "ScoreTable":
        return ScoreTable(self.x_support, self.z_support, scores,
                          self.x_name, self.z_name)

    def numeric_x(self) -> Optional[np.ndarray]:
        try:
            return np.array([float(x) for x in self.x_support])
        except (TypeError, ValueError):
            return None


def project_table(table: ScoreTable, direction: str = "increasing") -> ScoreTable:
    """Nearest (unweighted L2) table monotone in z, solved row by row."""
    if direction not in ("increasing", "decreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    rows = [project_monotone(row, direction) for row in table.scores]
    return table.with_scores(np.vstack(rows))


def z_violation(table: ScoreTable, direction: str = "increasing") -> float:
    """Largest adjacent-z step against ``direction`` over all rows."""
    steps = np.diff(table.scores, axis=1)
    if direction == "decreasing":
        steps = -steps
    return float(max(0.0, -steps.min())) if steps.size else 0.0


def _fmt(value) -> str:
    return repr(float(value))


def write_grid(table: ScoreTable, path, comment: Optional[str] = None) -> None:
    """CSV grid: header = corner cell then z values; each row = x id then scores."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{table.x_name}\\{table.z_name}"] + [_fmt(z) for z in table.z_support])
    for x, row in zip(table.x_support, table.scores):
        writer.writerow([x] + [_fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_grid(path) -> ScoreTable:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except FileNotFoundError:
        raise InputError(f"grid file not found: {path}") from None
    rows = [r for r in csv.reader(lines) if r]
    if not rows:
        raise InputError(f"{path}: empty grid file")
    header, body = rows[0], rows[1:]
    corner = header[0]
    x_name, _, z_name = corner.partition("\\")
    try:
        z = [float(v) for v in header[1:]]
    except ValueError:
        raise ParseError(f"{path}: non-numeric z value in header") from None
    xs, scores = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: ragged row at data line {lineno}", row=lineno)
        xs.append(_coerce_id(row[0]))
        try:
            scores.append([float(v) for v in row[1:]])
        except ValueError:
            raise ParseError(f"{path}: non-numeric score at data line {lineno}",
                             row=lineno) from None
    if not body:
        raise InputError(f"{path}: grid has no rows")
    return ScoreTable(tuple(xs), np.array(z), np.array(scores),
                      x_name or "x", z_name or "z")


def _coerce_id(text: str):
    try:
        num = float(text)
    except ValueError:
        return text
    return int(num) if num.is_integer() and "." not in text and "e" not in text.lower() else num

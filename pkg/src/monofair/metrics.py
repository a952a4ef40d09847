"""One-sided statistical parity / equal opportunity and monotonicity audits."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from monofair.calibrators import check_monotone
from monofair.errors import MetricError, NumericError, SchemaError
from monofair.gam import GamModel, design_matrix, predict_probas, predict_scores
from monofair.isotonic import ScoreTable, read_grid


@dataclass(frozen=True, eq=False)
class GroupedPredictions:
    """Decisions (and optionally labels) split by protected group.

    ``groups`` is in the order that defines "one-sided": a violation is any
    earlier group having a higher positive rate than a later one.
    """

    groups: tuple
    decisions: tuple
    labels: Optional[tuple] = None

    @classmethod
    def from_arrays(cls, z, decisions, labels=None, descending: bool = False):
        z = np.asarray(z, dtype=float)
        decisions = np.asarray(decisions, dtype=float)
        if decisions.shape != z.shape:
            raise SchemaError("decisions and group values differ in length")
        groups = np.unique(z)
        if descending:
            groups = groups[::-1]
        dec = tuple(decisions[z == g] for g in groups)
        lab = None
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != z.shape:
                raise SchemaError("labels and group values differ in length")
            lab = tuple(labels[z == g] for g in groups)
        return cls(tuple(float(g) for g in groups), dec, lab)

    def positive_rates(self) -> np.ndarray:
        rates = []
        for g, d in zip(self.groups, self.decisions):
            if len(d) == 0:
                raise MetricError(f"group {g!r} is empty")
            rates.append(float(np.mean(d)))
        return np.array(rates)

    def true_positive_rates(self) -> np.ndarray:
        if self.labels is None:
            raise MetricError("equal opportunity needs labels")
        rates = []
        for g, d, y in zip(self.groups, self.decisions, self.labels):
            pos = np.asarray(y) == 1
            if not pos.any():
                raise MetricError(f"group {g!r} has no positive (Y=1) examples")
            rates.append(float(np.mean(np.asarray(d)[pos])))
        return np.array(rates)


def pairwise_one_sided(rates: Sequence[float], groups: Sequence) -> list:
    """``[(g_j, g_k, max(0, rate_j - rate_k))]`` for every ordered pair j < k."""
    return [(groups[j], groups[k], max(0.0, float(rates[j] - rates[k])))
            for j, k in itertools.combinations(range(len(rates)), 2)]


def max_one_sided_parity(preds: GroupedPredictions) -> float:
    if len(preds.groups) < 2:
        raise MetricError("need at least two groups")
    return max(v for _, _, v in pairwise_one_sided(preds.positive_rates(), preds.groups))


def max_one_sided_equal_opportunity(preds: GroupedPredictions) -> float:
    if len(preds.groups) < 2:
        raise MetricError("need at least two groups")
    return max(v for _, _, v in
               pairwise_one_sided(preds.true_positive_rates(), preds.groups))


def conditional_expectations(table: ScoreTable, conditional) -> np.ndarray:
    """``E[f | Z = z]`` for every column z, by exact summation over x."""
    cond = np.asarray(conditional, dtype=float)
    if cond.shape != table.shape:
        raise NumericError(
            f"conditional shape {cond.shape} does not match table {table.shape}")
    if (cond < 0).any():
        raise NumericError("conditional probabilities must be non-negative")
    sums = cond.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise NumericError("each conditional column P(X | Z=z) must sum to 1")
    return np.array([np.dot(table.scores[:, i], cond[:, i]) for i in range(cond.shape[1])])


def average_violation_rf(table: ScoreTable, conditional) -> float:
    """Average adjacent-group parity violation; telescopes to (E_first - E_last) / m."""
    e = conditional_expectations(table, conditional)
    return float((e[0] - e[-1]) / e.size)


def table_parity_pairs(table: ScoreTable, conditional) -> list:
    """One-sided violations ``E[f|z_j] - E[f|z_k]`` for j < k, clamped at 0."""
    return pairwise_one_sided(conditional_expectations(table, conditional),
                              list(table.z_support))


def table_max_parity(table: ScoreTable, conditional) -> float:
    return max(v for _, _, v in table_parity_pairs(table, conditional))


# --- monotonicity audits ----------------------------------------------------

@dataclass(frozen=True)
class MonotonicityViolation:
    column: str
    probe: object
    at: float
    delta: float
    magnitude: float


def _against(direction: str, before, after):
    diff = after - before
    return -diff if direction == "increasing" else diff


def audit_monotonicity(model, column: str, probe_rows=None, deltas=(1.0,),
                       direction: Optional[str] = None, tol: float = 0.0) -> list:
    """Ceteris-paribus sweep: nudge ``column`` up by each delta, others fixed.

    ``model`` is a :class:`GamModel` or an imported :class:`ScoreTable`. The
    expected direction defaults to the column's monotonicity tag (increasing
    when untagged). Returns the probes where the output moved the wrong way
    by more than ``tol``.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if isinstance(model, ScoreTable):
        return _audit_table(model, column, deltas, direction or "increasing", tol)
    d = model.index(column)
    if direction is None:
        tag = model.calibrators[d].monotonicity
        direction = tag if tag != "none" else "increasing"
    if probe_rows is None:
        probe_rows = keypoint_probes(model, column)
    rows = np.atleast_2d(np.asarray(probe_rows, dtype=float))
    base = predict_scores(model, rows)
    found = []
    for delta in deltas:
        moved = rows.copy()
        moved[:, d] += delta
        bad = _against(direction, base, predict_scores(model, moved))
        for i in np.flatnonzero(bad > tol):
            found.append(MonotonicityViolation(column, int(i), float(rows[i, d]),
                                               delta, float(bad[i])))
    return found


def _audit_table(table: ScoreTable, column: str, deltas, direction, tol) -> list:
    if column == table.z_name:
        axis_values, grid = table.z_support, table.scores
        labels = table.x_support
    elif column == table.x_name:
        axis_values = table.numeric_x()
        if axis_values is None:
            raise SchemaError(f"x cells of {column!r} are not numeric")
        grid = table.scores.T
        labels = tuple(table.z_support)
    else:
        raise SchemaError(f"grid has no column {column!r}")
    if np.any(np.diff(axis_values) <= 0):
        raise SchemaError(f"grid axis {column!r} must be strictly increasing")
    found = []
    for label, row in zip(labels, grid):
        for delta in deltas:
            after = np.interp(axis_values + delta, axis_values, row)
            bad = _against(direction, row, after)
            for i in np.flatnonzero(bad > tol):
                found.append(MonotonicityViolation(column, label, float(axis_values[i]),
                                                   delta, float(bad[i])))
    return found


def keypoint_probes(model: GamModel, column: str, rows=None) -> np.ndarray:
    """Audit probes: ``rows`` plus one row per keypoint of ``column``.

    The keypoint rows hold every other feature at its first key (or at the
    median of ``rows`` when given).
    """
    d = model.index(column)
    keys = model.calibrators[d].keys
    if rows is not None and len(rows):
        anchor = np.median(np.asarray(rows, dtype=float), axis=0)
    else:
        anchor = np.array([c.keys[0] for c in model.calibrators])
    grid = np.tile(anchor, (keys.size, 1))
    grid[:, d] = keys
    if rows is None:
        return grid
    return np.vstack([np.asarray(rows, dtype=float), grid])


def default_probes(model: GamModel, dataset, column: str, seed: int = 0,
                   n: int = 1000) -> np.ndarray:
    X = design_matrix(model, dataset)
    rng = np.random.Generator(np.random.PCG64(seed))
    pick = rng.choice(X.shape[0], size=min(n, X.shape[0]), replace=False)
    return keypoint_probes(model, column, X[np.sort(pick)])


def default_deltas(model: GamModel, column: str) -> list:
    keys = model.calibrator(column).keys
    if keys.size < 2:
        return [1.0]
    return sorted(set(np.diff(keys).tolist()) | {float(keys[-1] - keys[0])})


def import_prediction_grid(path) -> ScoreTable:
    return read_grid(path)


# --- reports ----------------------------------------------------------------

@dataclass
class FairnessReport:
    groups: list
    parity_pairs: list
    max_parity: float
    equal_opportunity_pairs: Optional[list]
    max_equal_opportunity: Optional[float]
    average_violation: Optional[float] = None
    monotonicity: dict = field(default_factory=dict)
    scope: str = "all"

    def to_dict(self) -> dict:
        def pairs(items):
            return None if items is None else [
                {"j": j, "k": k, "violation": v} for j, k, v in items]
        return {
            "scope": self.scope,
            "groups": self.groups,
            "parity_pairs": pairs(self.parity_pairs),
            "max_one_sided_parity": self.max_parity,
            "equal_opportunity_pairs": pairs(self.equal_opportunity_pairs),
            "max_one_sided_equal_opportunity": self.max_equal_opportunity,
            "average_violation": self.average_violation,
            "monotonicity": self.monotonicity,
        }

    def csv_rows(self) -> list:
        rows = []
        for j, k, v in self.parity_pairs:
            rows.append((self.scope, f"{j}<{k}", "one_sided_parity", v))
        rows.append((self.scope, "max", "one_sided_parity", self.max_parity))
        if self.equal_opportunity_pairs is not None:
            for j, k, v in self.equal_opportunity_pairs:
                rows.append((self.scope, f"{j}<{k}", "one_sided_equal_opportunity", v))
            rows.append((self.scope, "max", "one_sided_equal_opportunity",
                         self.max_equal_opportunity))
        if self.average_violation is not None:
            rows.append((self.scope, "adjacent", "average_violation",
                         self.average_violation))
        for col, count in self.monotonicity.items():
            rows.append((self.scope, col, "monotonicity_violations", count))
        return rows


def fairness_report(preds: GroupedPredictions, scope: str = "all",
                    monotonicity: Optional[dict] = None) -> FairnessReport:
    rates = preds.positive_rates()
    pp = pairwise_one_sided(rates, preds.groups)
    eo_pairs = eo_max = None
    if preds.labels is not None:
        try:
            eo_pairs = pairwise_one_sided(preds.true_positive_rates(), preds.groups)
            eo_max = max(v for _, _, v in eo_pairs)
        except MetricError:
            eo_pairs = eo_max = None
    # Adjacent-pair average of positive-rate gaps telescopes like R_f.
    avg = float((rates[0] - rates[-1]) / rates.size)
    return FairnessReport(list(preds.groups), pp, max(v for _, _, v in pp),
                          eo_pairs, eo_max, avg, monotonicity or {}, scope)


def model_grouped_predictions(model: GamModel, dataset, indices=None,
                              threshold: float = 0.5,
                              descending: bool = False,
                              soft: bool = False) -> GroupedPredictions:
    """Group the model's decisions by the protected column.

    With ``soft`` the predicted probabilities stand in for decisions, so group
    rates become mean scores; useful when a rare positive class leaves every
    thresholded decision at 0.
    """
    idx = np.arange(dataset.rows) if indices is None else np.asarray(indices)
    X = design_matrix(model, dataset)[idx]
    proba = predict_probas(model, X)
    decisions = proba if soft else (proba >= threshold).astype(float)
    return GroupedPredictions.from_arrays(dataset.protected_values[idx], decisions,
                                          dataset.label[idx], descending)


def report_csv(reports: Sequence[FairnessReport], header_comment: str = "") -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scope", "pair", "metric", "value"])
    for rep in reports:
        for scope, pair, metric, value in rep.csv_rows():
            writer.writerow([scope, pair, metric, repr(value) if isinstance(value, float) else value])
    return buf.getvalue()


def constrained_audit_summary(model: GamModel, probes_for, deltas_for) -> dict:
    """Violation counts per constrained column, plus the calibrator check."""
    out = {}
    for name, cal in zip(model.names, model.calibrators):
        if cal.monotonicity == "none":
            continue
        found = audit_monotonicity(model, name, probes_for(name), deltas_for(name))
        out[name] = {"check_monotone": check_monotone(cal), "violations": len(found)}
    return out


def sweep(model: GamModel, column: str, grid, anchor) -> np.ndarray:
    """Scores along ``grid`` for ``column`` with other features held at ``anchor``."""
    d = model.index(column)
    rows = np.tile(np.asarray(anchor, dtype=float), (len(grid), 1))
    rows[:, d] = grid
    return predict_scores(model, rows)


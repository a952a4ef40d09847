"""Additive model of piecewise-linear calibrators, trained by projected SGD."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from monofair.calibrators import (CalibratorCurve, check_monotone, eval_many,
                                  interpolation_weights)
from monofair.data import Dataset, SplitAssignment, quantile_keypoints
from monofair.errors import (InputError, MetricError, ParseError, SchemaError,
                             VersionError)
from monofair.isotonic import project_monotone

MODEL_FORMAT = "monofair-gam"
MODEL_VERSION = 1
DEFAULT_LR_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def sigmoid(s):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class GamModel:
    calibrators: tuple
    bias: float = 0.0
    link: str = "sigmoid"
    names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cals = tuple(self.calibrators)
        names = tuple(self.names) or tuple(f"x{i}" for i in range(len(cals)))
        if len(names) != len(cals):
            raise SchemaError("one name per calibrator is required")
        if self.link not in ("identity", "sigmoid"):
            raise SchemaError(f"unknown link {self.link!r}")
        object.__setattr__(self, "calibrators", cals)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "bias", float(self.bias))

    def __eq__(self, other):
        return (isinstance(other, GamModel) and self.names == other.names
                and self.bias == other.bias and self.link == other.link
                and self.calibrators == other.calibrators)

    def calibrator(self, name: str) -> CalibratorCurve:
        return self.calibrators[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"model has no column {name!r}") from None

    def monotonicity_violations(self) -> dict:
        return {n: check_monotone(c) for n, c in zip(self.names, self.calibrators)}


def predict_score(model: GamModel, row) -> float:
    row = np.asarray(row, dtype=float)
    if row.shape != (len(model.calibrators),):
        raise SchemaError(
            f"row has {row.size} features, model expects {len(model.calibrators)}")
    total = model.bias
    for c, x in zip(model.calibrators, row):
        total += c.eval(float(x))
    return float(total)


def predict_proba(model: GamModel, row) -> float:
    return float(sigmoid(predict_score(model, row)))


def predict_scores(model: GamModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.calibrators):
        raise SchemaError(
            f"feature matrix shape {X.shape} incompatible with "
            f"{len(model.calibrators)} calibrators")
    out = np.full(X.shape[0], model.bias)
    for d, cal in enumerate(model.calibrators):
        out += eval_many(cal, X[:, d])
    return out


def predict_probas(model: GamModel, X) -> np.ndarray:
    return sigmoid(predict_scores(model, X))


def design_matrix(model: GamModel, dataset: Dataset) -> np.ndarray:
    """Dataset columns reordered to match the model's calibrators."""
    if tuple(dataset.names) == model.names:
        return dataset.values
    return dataset.values[:, [dataset.column_index(n) for n in model.names]]


def _indices(dataset: Dataset, indices) -> np.ndarray:
    idx = np.arange(dataset.rows) if indices is None else np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise MetricError("empty index set")
    return idx


def accuracy(model: GamModel, dataset: Dataset, indices=None,
             threshold: float = 0.5) -> float:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    idx = _indices(dataset, indices)
    proba = predict_probas(model, design_matrix(model, dataset)[idx])
    return float(np.mean((proba >= threshold).astype(int) == dataset.label[idx]))


def auc_from_scores(scores, labels) -> float:
    """Mann-Whitney statistic; tied scores count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both label classes")
    ranks = rankdata(scores, method="average")
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc(model: GamModel, dataset: Dataset, indices=None) -> float:
    idx = _indices(dataset, indices)
    return auc_from_scores(predict_scores(model, design_matrix(model, dataset)[idx]),
                           dataset.label[idx])


# --- loss and gradients -----------------------------------------------------

def _log_loss(scores, y) -> float:
    return float(np.mean(np.logaddexp(0.0, scores) - y * scores))


class _Interp:
    """Cached bracketing of every training row against every calibrator."""

    def __init__(self, calibrators, X):
        self.sizes = [len(c) for c in calibrators]
        self.lo, self.hi, self.w = [], [], []
        for d, cal in enumerate(calibrators):
            lo, hi, w = interpolation_weights(cal.keys, X[:, d])
            self.lo.append(lo)
            self.hi.append(hi)
            self.w.append(w)

    def scores(self, values, bias, rows=None):
        sl = slice(None) if rows is None else rows
        out = None
        for v, lo, hi, w in zip(values, self.lo, self.hi, self.w):
            wr = w[sl]
            a = v[lo[sl]]
            term = a + wr * (v[hi[sl]] - a)
            out = term if out is None else out + term
        if out is None:
            n = self.lo[0].size if self.lo and rows is None else np.size(rows)
            out = np.zeros(n)
        return out + bias

    def gradient(self, residual, rows=None):
        sl = slice(None) if rows is None else rows
        n = residual.size
        grads = []
        for size, lo, hi, w in zip(self.sizes, self.lo, self.hi, self.w):
            wr = w[sl]
            g = (np.bincount(lo[sl], residual * (1.0 - wr), minlength=size)
                 + np.bincount(hi[sl], residual * wr, minlength=size))
            grads.append(g / n)
        return float(residual.sum() / n), grads


def loss_and_gradient(model: GamModel, X, y):
    """Mean logistic loss and its gradient with respect to bias and all values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    interp = _Interp(model.calibrators, X)
    values = [c.values for c in model.calibrators]
    s = interp.scores(values, model.bias)
    grad_bias, grads = interp.gradient(sigmoid(s) - y)
    return _log_loss(s, y), grad_bias, grads


# --- training ---------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    minibatch_size: int = 128
    learning_rates: tuple = DEFAULT_LR_GRID
    seed: int = 0
    loss: str = "logistic"
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "learning_rates",
                           tuple(float(r) for r in self.learning_rates))
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if not self.learning_rates:
            raise ValueError("learning-rate grid is empty")
        if any(r <= 0 for r in self.learning_rates):
            raise ValueError("learning rates must be positive")
        if self.loss != "logistic":
            raise ValueError(f"unsupported loss {self.loss!r}")


@dataclass
class TrainingReport:
    learning_rates: list
    validation_accuracy: list
    validation_loss: list
    chosen_rate: float
    grid_extension_warning: bool
    loss_history: list
    epochs: int
    minibatch_size: int
    seed: int
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "learning_rates": self.learning_rates,
            "validation_accuracy": self.validation_accuracy,
            "validation_loss": self.validation_loss,
            "chosen_rate": self.chosen_rate,
            "grid_extension_warning": self.grid_extension_warning,
            "epochs": self.epochs,
            "minibatch_size": self.minibatch_size,
            "seed": self.seed,
            "loss_history": self.loss_history,
        }
        if include_timing:
            out["wall_time_seconds"] = self.wall_time
        return out


def init_model(dataset: Dataset, train_indices) -> GamModel:
    """Keys from training-row quantiles, zero values, bias at the base-rate log-odds."""
    train_idx = np.asarray(train_indices, dtype=np.int64)
    if train_idx.size == 0:
        raise InputError("no training rows")
    X = dataset.values[train_idx]
    cals = []
    for d, spec in enumerate(dataset.columns):
        keys = quantile_keypoints(X[:, d], spec.keypoint_count)
        cals.append(CalibratorCurve(keys, np.zeros(keys.size), spec.monotonicity))
    rate = float(np.clip(dataset.label[train_idx].mean(), 1e-6, 1.0 - 1e-6))
    bias = math.log(rate / (1.0 - rate))
    return GamModel(tuple(cals), bias, "sigmoid", tuple(dataset.names))


def _project(values, directions):
    for d, direction in enumerate(directions):
        if direction == "none":
            continue
        v = values[d]
        step = np.diff(v)
        if (step >= 0).all() if direction == "increasing" else (step <= 0).all():
            continue
        values[d] = project_monotone(v, direction)


def fit_rate(model: GamModel, X, y, lr: float, epochs: int, batch: int,
             seed: int):
    """Projected minibatch SGD at one learning rate.

    Every update is followed by the monotone projection of each constrained
    calibrator, so the iterate stays feasible throughout. Returns the final
    model and the full-batch loss after each epoch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    interp = _Interp(model.calibrators, X)
    directions = [c.monotonicity for c in model.calibrators]
    values = [c.values.copy() for c in model.calibrators]
    _project(values, directions)
    bias = model.bias
    rng = np.random.Generator(np.random.PCG64(seed))
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            s = interp.scores(values, bias, rows)
            grad_bias, grads = interp.gradient(sigmoid(s) - y[rows], rows)
            bias -= lr * grad_bias
            for v, g in zip(values, grads):
                v -= lr * g
            _project(values, directions)
        history.append(_log_loss(interp.scores(values, bias), y))
    cals = tuple(c.with_values(v) for c, v in zip(model.calibrators, values))
    fitted = GamModel(cals, bias, model.link, model.names, dict(model.meta))
    return fitted, history


def train(dataset: Dataset, split: SplitAssignment, config: TrainConfig = TrainConfig()):
    """Grid-search the learning rate; keep the model with the best validation accuracy.

    Ties go to the smaller rate. A winner on either end of the grid sets
    ``grid_extension_warning`` in the report.
    """
    start = time.perf_counter()
    base = init_model(dataset, split.train_indices)
    X = dataset.values
    tr, va = split.train_indices, split.validation_indices
    rates = sorted(config.learning_rates)
    best = None
    accs, losses, histories, models = [], [], [], []
    for lr in rates:
        model, history = fit_rate(base, X[tr], dataset.label[tr], lr, config.epochs,
                                  config.minibatch_size, config.seed)
        if len(va):
            acc = accuracy(model, dataset, va, config.threshold)
            vloss = _log_loss(predict_scores(model, X[va]), dataset.label[va])
        else:
            acc, vloss = float("nan"), float("nan")
        accs.append(acc)
        losses.append(vloss)
        histories.append(history)
        models.append(model)
        if best is None or acc > accs[best]:
            best = len(accs) - 1
    warn = len(rates) == 1 or best in (0, len(rates) - 1)
    report = TrainingReport(rates, accs, losses, rates[best], warn, histories[best],
                            config.epochs, config.minibatch_size, config.seed,
                            time.perf_counter() - start)
    return models[best], report


# --- serialization ----------------------------------------------------------

def model_to_dict(model: GamModel) -> dict:
    out = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "link": model.link,
        "bias": model.bias,
        "columns": [
            {"name": n, "monotonicity": c.monotonicity,
             "keys": c.keys.tolist(), "values": c.values.tolist()}
            for n, c in zip(model.names, model.calibrators)
        ],
    }
    if model.meta:
        out["run"] = model.meta
    return out


def model_from_dict(raw: dict) -> GamModel:
    if raw.get("format") != MODEL_FORMAT:
        raise SchemaError(f"not a {MODEL_FORMAT} file")
    if raw.get("version") != MODEL_VERSION:
        raise VersionError(
            f"unsupported model version {raw.get('version')!r}; "
            f"expected {MODEL_VERSION}")
    try:
        cals = tuple(CalibratorCurve(c["keys"], c["values"], c["monotonicity"])
                     for c in raw["columns"])
        names = tuple(c["name"] for c in raw["columns"])
        return GamModel(cals, raw["bias"], raw["link"], names, raw.get("run", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from None


def dumps_model(model: GamModel) -> str:
    # Python's float repr round-trips exactly.
    return json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n"


def save_model(model: GamModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> GamModel:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ParseError(f"{path}: {exc.msg} at byte {offset}", offset=offset) from None
    return model_from_dict(raw)

